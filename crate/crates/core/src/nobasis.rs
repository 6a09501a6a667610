//! Re-expansion of a state in Slater determinants built from its own
//! natural orbitals.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{PinError, Result};
use crate::fock::{FermionState, SlaterDet};
use crate::linalg::{det_in_place, CMatrix};
use crate::rdm::{natural_decomposition, one_rdm, NaturalSpectrum};

/// Tolerance for the diagonality and ordering residuals of an expansion.
pub const SELF_CONSISTENCY_TOL: f64 = 1e-9;
/// Relaxed off-diagonal tolerance inside a degenerate block.
pub const DEGENERATE_BLOCK_TOL: f64 = 1e-7;

/// Applies a single-particle basis change to an N-fermion state.
///
/// With `u[(i, j)]` the amplitude of new orbital `i` in old orbital `j`'s
/// image, the new coefficient of determinant `I` is `sum_J det(u[I, J]) c_J`,
/// where `u[I, J]` keeps the rows in `I` and the columns in `J`.
pub fn rotate_state(state: &FermionState, u: &CMatrix) -> Result<FermionState> {
    let basis = state.basis();
    let d = basis.d();
    if u.dim() != d {
        return Err(PinError::LengthMismatch { expected: d, got: u.dim() });
    }
    let defect = u.unitarity_defect();
    if !(defect <= 1e-10) {
        return Err(PinError::NonUnitary(defect));
    }
    Ok(rotate_unchecked(state, u))
}

pub(crate) fn rotate_unchecked(state: &FermionState, u: &CMatrix) -> FermionState {
    let basis = state.basis();
    let n = basis.n();
    let zero = Complex64::new(0.0, 0.0);
    let sources: Vec<(Vec<usize>, Complex64)> = basis
        .dets()
        .iter()
        .zip(state.amplitudes())
        .filter(|(_, c)| **c != zero)
        .map(|(det, &c)| (det.modes().map(|k| k - 1).collect(), c))
        .collect();
    let mut scratch = vec![zero; n * n];
    let mut out = Vec::with_capacity(basis.dim());
    for target in basis.dets() {
        let rows: Vec<usize> = target.modes().map(|k| k - 1).collect();
        let mut acc = zero;
        for (cols, c) in &sources {
            for (r, &row) in rows.iter().enumerate() {
                for (q, &col) in cols.iter().enumerate() {
                    scratch[r * n + q] = u[(row, col)];
                }
            }
            acc += det_in_place(&mut scratch, n) * c;
        }
        out.push(acc);
    }
    FermionState::new(state.basis_arc().clone(), out).expect("same basis")
}

#[derive(Clone, Copy, Debug, Default, Serialize, PartialEq)]
pub struct ExpansionResiduals {
    /// Largest off-diagonal modulus of the expansion's 1-RDM.
    pub offdiag: f64,
    /// Largest deviation of that 1-RDM's diagonal from the sorted spectrum.
    pub order: f64,
}

/// A state written in its own natural-orbital determinants.
#[derive(Clone, Debug)]
pub struct SelfConsistentExpansion {
    pub spectrum: NaturalSpectrum,
    /// Amplitudes `c_I` with respect to natural-orbital determinants.
    pub coeffs: FermionState,
    pub residuals: ExpansionResiduals,
    /// True when some adjacent occupation numbers are closer than `tol_deg`;
    /// the expansion is then not unique.
    pub degenerate: bool,
}

impl SelfConsistentExpansion {
    pub fn lambdas(&self) -> &[f64] {
        &self.spectrum.lambdas
    }

    pub fn weight(&self, det: SlaterDet) -> f64 {
        self.coeffs.amplitude(det).norm_sqr()
    }
}

/// Transforms `state` into its natural-orbital determinant basis.
pub fn self_consistent(state: &FermionState, tol_deg: f64) -> Result<SelfConsistentExpansion> {
    let rdm = one_rdm(state);
    let spectrum = natural_decomposition(&rdm, tol_deg)?;
    // The 1-RDM stores <a_j^† a_k>, whose eigenvectors are the complex
    // conjugates of the orbital coefficients; the determinant map therefore
    // takes the transpose of the orbital matrix.
    let u = spectrum.orbitals.transpose();
    let coeffs = rotate_unchecked(state, &u);
    let residuals = expansion_residuals(&coeffs, &spectrum);
    let degenerate = spectrum.is_degenerate();

    let offdiag_ok = residuals.offdiag <= SELF_CONSISTENCY_TOL || (degenerate && block_offdiag_ok(&coeffs, &spectrum));
    if !offdiag_ok || residuals.order > SELF_CONSISTENCY_TOL {
        return Err(PinError::Convergence(residuals.offdiag.max(residuals.order)));
    }
    Ok(SelfConsistentExpansion { spectrum, coeffs, residuals, degenerate })
}

fn expansion_residuals(coeffs: &FermionState, spectrum: &NaturalSpectrum) -> ExpansionResiduals {
    let rdm = one_rdm(coeffs);
    let order = rdm.diagonal().iter().zip(&spectrum.lambdas).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ExpansionResiduals { offdiag: rdm.max_offdiag(), order }
}

// Off-diagonal entries may reach the relaxed tolerance only when both
// indices sit in the same degenerate block.
fn block_offdiag_ok(coeffs: &FermionState, spectrum: &NaturalSpectrum) -> bool {
    let rdm = one_rdm(coeffs);
    let d = spectrum.d();
    let mut block = vec![0usize; d];
    for i in 1..d {
        block[i] = if spectrum.degenerate_pairs.contains(&(i - 1)) { block[i - 1] } else { block[i - 1] + 1 };
    }
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let v = rdm.matrix()[(i, j)].norm();
            let tol = if block[i] == block[j] { DEGENERATE_BLOCK_TOL } else { SELF_CONSISTENCY_TOL };
            if v > tol {
                return false;
            }
        }
    }
    true
}

/// The eight Borland-Dennis amplitudes and the weight outside them.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BdCoefficients {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
    pub delta: Complex64,
    pub nu: Complex64,
    pub mu: Complex64,
    pub xi: Complex64,
    pub zeta: Complex64,
    /// Total squared weight on the twelve remaining determinants.
    pub leakage: f64,
}

/// Determinants carrying α, β, γ, δ, ν, μ, ξ, ζ, in that order.
pub const BD_DETS: [[usize; 3]; 8] =
    [[1, 2, 3], [1, 2, 4], [1, 3, 5], [2, 3, 6], [1, 4, 5], [2, 4, 6], [3, 5, 6], [4, 5, 6]];

impl BdCoefficients {
    pub fn as_array(&self) -> [Complex64; 8] {
        [self.alpha, self.beta, self.gamma, self.delta, self.nu, self.mu, self.xi, self.zeta]
    }

    pub fn weights(&self) -> [f64; 8] {
        self.as_array().map(|c| c.norm_sqr())
    }

    /// `|ξ|² + |ζ|²`.
    pub fn xi_zeta(&self) -> f64 {
        self.xi.norm_sqr() + self.zeta.norm_sqr()
    }

    /// `|β|² + |γ|² + |δ|²`, the weight on the swapped-facet determinants.
    pub fn beta_gamma_delta(&self) -> f64 {
        self.beta.norm_sqr() + self.gamma.norm_sqr() + self.delta.norm_sqr()
    }

    /// `|α|² + |μ|² + |ν|²`, the weight on the pinning subspace.
    pub fn alpha_mu_nu(&self) -> f64 {
        self.alpha.norm_sqr() + self.mu.norm_sqr() + self.nu.norm_sqr()
    }
}

/// Reads the Borland-Dennis amplitudes off a `(3, 6)` expansion.
pub fn bd_coefficients(exp: &SelfConsistentExpansion) -> Result<BdCoefficients> {
    let b = exp.coeffs.basis();
    if (b.n(), b.d()) != (3, 6) {
        return Err(PinError::Setting { n: b.n(), d: b.d(), reason: "Borland-Dennis coefficients need (3,6)".into() });
    }
    let c: Vec<Complex64> =
        BD_DETS.iter().map(|m| exp.coeffs.amplitude(SlaterDet::from_modes(m).expect("valid modes"))).collect();
    let inside: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    let leakage = (exp.coeffs.norm_sqr() - inside).max(0.0);
    Ok(BdCoefficients {
        alpha: c[0],
        beta: c[1],
        gamma: c[2],
        delta: c[3],
        nu: c[4],
        mu: c[5],
        xi: c[6],
        zeta: c[7],
        leakage,
    })
}
