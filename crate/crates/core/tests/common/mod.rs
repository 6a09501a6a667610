#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use pinlab::fock::{enumerate_basis, FermionState, FockBasis};
use pinlab::linalg::{jacobi_hermitian, CMatrix};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_state(n: usize, d: usize, rng: &mut impl Rng) -> FermionState {
    let b = Arc::new(enumerate_basis(n, d).unwrap());
    let amp = (0..b.dim()).map(|_| gaussian(rng)).collect();
    FermionState::new(b, amp).unwrap().normalized().unwrap().0
}

/// Eigenvectors of a random Hermitian matrix with random column phases.
pub fn random_unitary(d: usize, rng: &mut impl Rng) -> CMatrix {
    let x = CMatrix::from_fn(d, |_, _| gaussian(rng));
    let h = CMatrix::from_fn(d, |i, j| x[(i, j)] + x[(j, i)].conj());
    let v = jacobi_hermitian(&h).unwrap().vectors;
    let phases: Vec<Complex64> = (0..d).map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..6.3))).collect();
    CMatrix::from_fn(d, |i, j| v[(i, j)] * phases[j])
}

fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    if n == 0 {
        return vec![(vec![], 1.0)];
    }
    let mut out = Vec::new();
    for (p, s) in permutations(n - 1) {
        // insert n-1 at every position; each step left flips the sign
        for pos in (0..=p.len()).rev() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            let moves = p.len() - pos;
            out.push((q, if moves % 2 == 0 { s } else { -s }));
        }
    }
    out
}

/// Rotation through the explicit antisymmetrized N-fold tensor product:
/// build `Σ_J c_J (1/√N!) Σ_π sgn(π) e_{j_π(1)} ⊗ … ⊗ e_{j_π(N)}`, apply
/// `u^{⊗N}` and read the coefficient of each sorted target tuple.
pub fn tensor_rotate(state: &FermionState, u: &CMatrix) -> Vec<Complex64> {
    let basis: &FockBasis = state.basis();
    let n = basis.n();
    let perms = permutations(n);
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    let mut tensor: HashMap<Vec<usize>, Complex64> = HashMap::new();
    for (det, c) in basis.dets().iter().zip(state.amplitudes()) {
        let modes: Vec<usize> = det.modes().map(|k| k - 1).collect();
        for (p, s) in &perms {
            let key: Vec<usize> = p.iter().map(|&i| modes[i]).collect();
            *tensor.entry(key).or_default() += c * s / fact.sqrt();
        }
    }
    basis
        .dets()
        .iter()
        .map(|target| {
            let rows: Vec<usize> = target.modes().map(|k| k - 1).collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for (key, t) in &tensor {
                let mut prod = *t;
                for (r, k) in rows.iter().zip(key) {
                    prod *= u[(*r, *k)];
                }
                acc += prod;
            }
            acc * fact.sqrt()
        })
        .collect()
}

/// Settings with `d <= 8` whose Fock space has dimension at most 20.
pub fn small_settings() -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for d in 1..=8usize {
        for n in 1..=d {
            if enumerate_basis(n, d).unwrap().dim() <= 20 {
                out.push((n, d));
            }
        }
    }
    out
}

pub fn max_dev(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
