//! Selection-rule analysis of a self-consistent expansion against one
//! constraint: the integer spectrum of the D-operator, the weight inside its
//! zero eigenspace, the stability indicator χ, the ordering gaps that can
//! destabilize the rule, and the Borland-Dennis bound checks.

use serde::Serialize;

use crate::error::{PinError, Result};
use crate::fock::FockBasis;
use crate::gpc::Gpc;
use crate::nobasis::{bd_coefficients, SelfConsistentExpansion};

/// Below this `D`, χ is reported as undefined.
pub const DEFAULT_CHI_FLOOR: f64 = 1e-12;
/// Adjacent gaps smaller than this count as quasi-degenerate.
pub const QUASI_DEGENERATE_GAP: f64 = 0.05;
/// Slack on the universal lower bound `1 - w_in >= D / ||D||`.
pub const THM2_SLACK: f64 = 1e-10;
/// Slack on `|ξ|² + |ζ|² <= D`.
pub const THM3_SLACK: f64 = 1e-10;
/// Slack on `|β|² + |γ|² + |δ|² <= D/(λ3 - λ4) + 3D`.
pub const THM4_SLACK: f64 = 1e-9;
/// The beta/gamma/delta bound is only checked when `λ3 - λ4` exceeds this.
pub const THM4_MIN_GAP: f64 = 1e-6;
/// Slack on the empirical window `D/||D|| <= 1 - w_in <= D/Δλ`.
pub const WINDOW_SLACK: f64 = 1e-9;

/// Eigenvalues `d_i` of the D-operator on each basis determinant.
#[derive(Clone, Debug)]
pub struct DOperatorSpectrum {
    pub gpc: Gpc,
    pub eigenvalues: Vec<i64>,
    /// Basis indices with `d_i = 0`.
    pub zero_set: Vec<usize>,
    pub op_norm: i64,
}

impl DOperatorSpectrum {
    pub fn in_zero_set(&self, index: usize) -> bool {
        self.eigenvalues[index] == 0
    }
}

/// `d_i = κ⁰ + Σ_k κ_k [k ∈ i]` for every determinant of `basis`.
pub fn d_spectrum(gpc: &Gpc, basis: &FockBasis) -> Result<DOperatorSpectrum> {
    if gpc.setting() != (basis.n(), basis.d()) {
        return Err(PinError::Setting {
            n: basis.n(),
            d: basis.d(),
            reason: format!("constraint {} belongs to ({},{})", gpc.label, gpc.n, gpc.d),
        });
    }
    let eigenvalues: Vec<i64> =
        basis.dets().iter().map(|det| gpc.kappa0 + det.modes().map(|k| gpc.kappa[k - 1]).sum::<i64>()).collect();
    let zero_set = eigenvalues.iter().enumerate().filter(|(_, &e)| e == 0).map(|(i, _)| i).collect();
    let op_norm = eigenvalues.iter().map(|e| e.abs()).max().unwrap_or(0);
    Ok(DOperatorSpectrum { gpc: gpc.clone(), eigenvalues, zero_set, op_norm })
}

fn check_basis(exp: &SelfConsistentExpansion, spec: &DOperatorSpectrum) -> Result<()> {
    let b = exp.coeffs.basis();
    if (b.n(), b.d()) != spec.gpc.setting() || b.dim() != spec.eigenvalues.len() {
        return Err(PinError::BasisMismatch { n_a: b.n(), d_a: b.d(), n_b: spec.gpc.n, d_b: spec.gpc.d });
    }
    Ok(())
}

/// `||P_D Ψ||²`: the weight on determinants with `d_i = 0`.
pub fn projector_weight(exp: &SelfConsistentExpansion, spec: &DOperatorSpectrum) -> Result<f64> {
    check_basis(exp, spec)?;
    let amp = exp.coeffs.amplitudes();
    Ok(spec.zero_set.iter().map(|&i| amp[i].norm_sqr()).sum())
}

/// `Σ_i |c_i|² d_i`, which equals `D(λ)` for a self-consistent expansion.
pub fn d_expectation(exp: &SelfConsistentExpansion, spec: &DOperatorSpectrum) -> Result<f64> {
    check_basis(exp, spec)?;
    Ok(exp.coeffs.amplitudes().iter().zip(&spec.eigenvalues).map(|(c, &e)| c.norm_sqr() * e as f64).sum())
}

/// Exchanges the coefficients of `λ_i` and `λ_{i+1}` (1-based `i`).
pub fn swap_gpc(gpc: &Gpc, i: usize) -> Result<Gpc> {
    if i == 0 || i >= gpc.d {
        return Err(PinError::Index { index: i, d: gpc.d });
    }
    let mut out = gpc.clone();
    out.kappa.swap(i - 1, i);
    out.label = format!("{}~swap{}{}", gpc.label, i, i + 1);
    Ok(out)
}

/// Adjacent pairs `(i, i+1)` with `κ_i > κ_{i+1}`; only these ordering
/// constraints can destabilize the selection rule.
pub fn delta_selector(gpc: &Gpc) -> Vec<(usize, usize)> {
    gpc.kappa.windows(2).enumerate().filter(|(_, w)| w[0] > w[1]).map(|(i, _)| (i + 1, i + 2)).collect()
}

/// Smallest `λ_i - λ_{i+1}` over `pairs`, with the pair attaining it (ties
/// go to the earlier pair). `None` when there are no pairs.
pub fn delta_lambda(pairs: &[(usize, usize)], lambdas: &[f64]) -> Option<(f64, (usize, usize))> {
    let mut best: Option<(f64, (usize, usize))> = None;
    for &(i, j) in pairs {
        let gap = lambdas[i - 1] - lambdas[j - 1];
        if best.is_none_or(|(g, _)| gap < g) {
            best = Some((gap, (i, j)));
        }
    }
    best
}

/// Per-constraint outcome for one state.
#[derive(Clone, Debug, Serialize)]
pub struct PinningReport {
    pub label: String,
    #[serde(rename = "D")]
    pub d_value: f64,
    pub dist1: f64,
    pub dist2: f64,
    pub w_in: f64,
    pub w_out: f64,
    /// `w_out / D`, undefined at (near) exact pinning.
    pub chi: Option<f64>,
    pub delta_lambda: Option<f64>,
    /// The ordering pair attaining `delta_lambda`.
    pub swap_pair: Option<(usize, usize)>,
    /// Weight in the zero eigenspace together with its image under the swap.
    pub swap_w: f64,
    #[serde(rename = "W_resid")]
    pub w_resid: f64,
    pub op_norm: i64,
    pub thm2_ok: bool,
    /// Only for the `(3,6)` inequality.
    pub thm3_ok: Option<bool>,
    /// Only for the `(3,6)` inequality with `λ3 - λ4 > THM4_MIN_GAP`.
    pub thm4_ok: Option<bool>,
    /// `D/||D|| - slack <= w_out`.
    pub window_lower_ok: bool,
    /// `w_out <= D/Δλ + slack`, when `Δλ > 0`.
    pub window_upper_ok: Option<bool>,
    /// Two or more adjacent gaps below `QUASI_DEGENERATE_GAP`.
    pub multi_degenerate: bool,
}

impl PinningReport {
    pub fn is_quasipinned(&self, threshold: f64) -> bool {
        self.d_value <= threshold
    }
}

/// Extra Borland-Dennis weights attached to a `(3,6)` report.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BdWeights {
    pub xi_zeta: f64,
    pub beta_gamma_delta: f64,
    pub alpha_mu_nu: f64,
    pub leakage: f64,
}

/// Precomputed D-operator data for repeated reports on one setting.
#[derive(Clone, Debug)]
pub struct ConstraintAnalyzer {
    pub spectrum: DOperatorSpectrum,
    pub pairs: Vec<(usize, usize)>,
    // per pair: membership in zero set ∪ zero set of the swapped constraint
    swap_union: Vec<Vec<bool>>,
    is_bd_inequality: bool,
}

impl ConstraintAnalyzer {
    pub fn new(gpc: &Gpc, basis: &FockBasis) -> Result<Self> {
        let spectrum = d_spectrum(gpc, basis)?;
        let pairs = delta_selector(gpc);
        let swap_union = pairs
            .iter()
            .map(|&(i, _)| {
                let swapped = d_spectrum(&swap_gpc(gpc, i)?, basis)?;
                Ok(spectrum.eigenvalues.iter().zip(&swapped.eigenvalues).map(|(&a, &b)| a == 0 || b == 0).collect())
            })
            .collect::<Result<Vec<Vec<bool>>>>()?;
        let is_bd_inequality = gpc.setting() == (3, 6) && gpc.kappa0 == 2 && gpc.kappa == [-1, -1, 0, -1, 0, 0];
        Ok(ConstraintAnalyzer { spectrum, pairs, swap_union, is_bd_inequality })
    }

    pub fn gpc(&self) -> &Gpc {
        &self.spectrum.gpc
    }

    pub fn is_bd_inequality(&self) -> bool {
        self.is_bd_inequality
    }

    /// Fills a full report for one expansion.
    pub fn report(&self, exp: &SelfConsistentExpansion, chi_floor: f64) -> Result<PinningReport> {
        check_basis(exp, &self.spectrum)?;
        let gpc = self.gpc();
        let lambdas = exp.lambdas();
        let d_value = gpc.evaluate(lambdas)?;
        let dist = gpc.distances(lambdas)?;
        let amp = exp.coeffs.amplitudes();
        let total = exp.coeffs.norm_sqr();
        let w_in: f64 = self.spectrum.zero_set.iter().map(|&i| amp[i].norm_sqr()).sum::<f64>() / total;
        let w_out = 1.0 - w_in;
        let chi = (d_value > chi_floor).then(|| w_out / d_value);

        let gap = delta_lambda(&self.pairs, lambdas);
        let swap_w = match gap {
            Some((_, pair)) => {
                let k = self.pairs.iter().position(|&p| p == pair).expect("pair from selector");
                self.swap_union[k].iter().zip(amp).filter(|(&inside, _)| inside).map(|(_, c)| c.norm_sqr()).sum::<f64>()
                    / total
            }
            None => w_in,
        };

        let op_norm = self.spectrum.op_norm;
        let lower = d_value / op_norm as f64;
        let thm2_ok = w_out >= lower - THM2_SLACK;
        let window_lower_ok = w_out >= lower - WINDOW_SLACK;
        let window_upper_ok = gap.filter(|(g, _)| *g > 0.0).map(|(g, _)| w_out <= d_value / g + WINDOW_SLACK);

        let (thm3_ok, thm4_ok) = if self.is_bd_inequality {
            let bd = bd_coefficients(exp)?;
            let thm3 = bd.xi_zeta() <= d_value + THM3_SLACK;
            let g34 = lambdas[2] - lambdas[3];
            let thm4 =
                (g34 > THM4_MIN_GAP).then(|| bd.beta_gamma_delta() <= d_value / g34 + 3.0 * d_value + THM4_SLACK);
            (Some(thm3), thm4)
        } else {
            (None, None)
        };

        let multi_degenerate = exp.spectrum.gaps.iter().filter(|&&g| g < QUASI_DEGENERATE_GAP).count() >= 2;

        Ok(PinningReport {
            label: gpc.label.clone(),
            d_value,
            dist1: dist.l1,
            dist2: dist.l2,
            w_in,
            w_out,
            chi,
            delta_lambda: gap.map(|(g, _)| g),
            swap_pair: gap.map(|(_, p)| p),
            swap_w,
            w_resid: 1.0 - swap_w,
            op_norm,
            thm2_ok,
            thm3_ok,
            thm4_ok,
            window_lower_ok,
            window_upper_ok,
            multi_degenerate,
        })
    }

    /// Borland-Dennis weights, for the `(3,6)` inequality only.
    pub fn bd_weights(&self, exp: &SelfConsistentExpansion) -> Result<Option<BdWeights>> {
        if !self.is_bd_inequality {
            return Ok(None);
        }
        let bd = bd_coefficients(exp)?;
        Ok(Some(BdWeights {
            xi_zeta: bd.xi_zeta(),
            beta_gamma_delta: bd.beta_gamma_delta(),
            alpha_mu_nu: bd.alpha_mu_nu(),
            leakage: bd.leakage,
        }))
    }
}

/// One-shot report for `gpc` on a self-consistent expansion.
pub fn report(exp: &SelfConsistentExpansion, gpc: &Gpc, chi_floor: f64) -> Result<PinningReport> {
    ConstraintAnalyzer::new(gpc, exp.coeffs.basis())?.report(exp, chi_floor)
}
