//! Hand-built test states: the pinned and the unstable Borland-Dennis
//! families, exactly pinned states for arbitrary constraints, and small
//! perturbations away from them.

use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{PinError, Result};
use crate::fock::{enumerate_basis, FermionState, FockBasis, SlaterDet};
use crate::gpc::Gpc;
use crate::pinning::d_spectrum;

/// Coefficient triples `(α, β, γ)` for the pinned family, each normalized
/// with `α² > β² + γ²` and `β > γ` so the occupations are strictly ordered.
pub const PINNED_TRIPLES: [(f64, f64, f64); 3] =
    [(0.8, 0.5, 0.331_662_479_035_539_96), (0.75, 0.55, 0.367_423_461_417_476_6), (0.9, 0.4, 0.173_205_080_756_887_7)];

fn dets(modes: &[[usize; 3]]) -> Vec<SlaterDet> {
    modes.iter().map(|m| SlaterDet::from_modes(m).expect("valid modes")).collect()
}

fn bd_basis() -> Arc<FockBasis> {
    Arc::new(enumerate_basis(3, 6).expect("(3,6) basis"))
}

/// `α|1,2,3⟩ + β|1,4,5⟩ + γ|2,4,6⟩`, normalized.
pub fn bd_pinned_state(alpha: f64, beta: f64, gamma: f64) -> Result<FermionState> {
    let d = dets(&[[1, 2, 3], [1, 4, 5], [2, 4, 6]]);
    let terms: Vec<_> = d.into_iter().zip([alpha, beta, gamma]).map(|(s, c)| (s, Complex64::new(c, 0.0))).collect();
    Ok(FermionState::from_terms(bd_basis(), &terms)?.normalized()?.0)
}

/// `γ|1,3,5⟩ + √(γ²+δ²-ε)|1,2,4⟩ + δ|2,3,6⟩`, which sits at distance `ε`
/// from the facet while `λ3 - λ4 = ε`.
///
/// Normalization fixes `γ² + δ² = (1+ε)/2`; ordering needs `γ > δ` and
/// `δ² >= ε`.
pub fn bd_unstable_state(gamma: f64, delta: f64, eps: f64) -> Result<FermionState> {
    let (g2, d2) = (gamma * gamma, delta * delta);
    if !(eps > 0.0) || (2.0 * (g2 + d2) - eps - 1.0).abs() > 1e-12 {
        return Err(PinError::Config(format!(
            "unstable family needs 2(γ²+δ²) = 1+ε, got γ={gamma}, δ={delta}, ε={eps}"
        )));
    }
    if gamma <= delta || d2 < eps {
        return Err(PinError::Config(format!(
            "unstable family needs γ > δ and δ² >= ε, got γ={gamma}, δ={delta}, ε={eps}"
        )));
    }
    let d = dets(&[[1, 3, 5], [1, 2, 4], [2, 3, 6]]);
    let s = (g2 + d2 - eps).sqrt();
    let terms: Vec<_> = d.into_iter().zip([gamma, s, delta]).map(|(s, c)| (s, Complex64::new(c, 0.0))).collect();
    FermionState::from_terms(bd_basis(), &terms)
}

/// The unstable family with `δ² = 0.2`, valid for `0 < ε < 0.2`.
pub fn bd_unstable_family(eps: f64) -> Result<FermionState> {
    let delta = 0.2f64.sqrt();
    let gamma = (0.3 + eps / 2.0).sqrt();
    bd_unstable_state(gamma, delta, eps)
}

/// An exactly pinned state: positive weights on zero-set determinants that
/// pairwise differ in at least two orbitals, so the 1-RDM is diagonal with
/// strictly decreasing entries separated by at least `min_gap`.
#[derive(Clone, Debug)]
pub struct PinnedConstruction {
    pub state: FermionState,
    pub support: Vec<SlaterDet>,
    pub lambdas: Vec<f64>,
}

/// Randomized search for a pinned construction of `gpc`.
pub fn construct_pinned_state(gpc: &Gpc, min_gap: f64, seed: u64) -> Result<PinnedConstruction> {
    let basis = Arc::new(enumerate_basis(gpc.n, gpc.d)?);
    let spec = d_spectrum(gpc, &basis)?;
    let zeros: Vec<SlaterDet> = spec.zero_set.iter().map(|&i| basis.det(i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = gpc.d;
    for _ in 0..20_000 {
        let mut pool = zeros.clone();
        pool.shuffle(&mut rng);
        let mut support: Vec<SlaterDet> = Vec::new();
        for det in pool {
            if support.iter().all(|s| s.excitation_level(det) >= 2) {
                support.push(det);
            }
        }
        for _ in 0..50 {
            let w: Vec<f64> = (0..support.len()).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let total: f64 = w.iter().sum();
            let mut lambdas = vec![0.0; d];
            for (det, wi) in support.iter().zip(&w) {
                for k in det.modes() {
                    lambdas[k - 1] += wi / total;
                }
            }
            if lambdas.windows(2).all(|p| p[0] - p[1] >= min_gap) {
                let terms: Vec<_> =
                    support.iter().zip(&w).map(|(&s, wi)| (s, Complex64::new((wi / total).sqrt(), 0.0))).collect();
                let state = FermionState::from_terms(basis.clone(), &terms)?;
                return Ok(PinnedConstruction { state, support, lambdas });
            }
        }
    }
    Err(PinError::Convergence(min_gap))
}

/// `√(1-η)|Ψ⟩ + √η|J⟩`, renormalized.
pub fn perturb(state: &FermionState, det: SlaterDet, eta: f64) -> Result<FermionState> {
    let idx = state.basis().index_of(det).ok_or_else(|| {
        PinError::Config(format!("{det} is not in the ({},{}) basis", state.basis().n(), state.basis().d()))
    })?;
    let mut amp: Vec<Complex64> = state.amplitudes().iter().map(|c| c * (1.0 - eta).sqrt()).collect();
    amp[idx] += Complex64::new(eta.sqrt(), 0.0);
    Ok(FermionState::new(state.basis_arc().clone(), amp)?.normalized()?.0)
}

/// A determinant with the smallest positive D-eigenvalue; perturbing a
/// pinned state with it pushes the spectrum into the polytope's interior.
pub fn lowest_excitation(gpc: &Gpc, basis: &FockBasis) -> Result<Option<SlaterDet>> {
    let spec = d_spectrum(gpc, basis)?;
    Ok(spec.eigenvalues.iter().enumerate().filter(|(_, &e)| e > 0).min_by_key(|(_, &e)| e).map(|(i, _)| basis.det(i)))
}
