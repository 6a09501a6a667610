//! The 1-particle reduced density matrix and its natural decomposition into
//! occupation numbers and natural orbitals.

use num_complex::Complex64;

use crate::error::Result;
use crate::fock::FermionState;
use crate::linalg::{hermitian_eigenvalues, jacobi_hermitian, CMatrix};

/// Default gap below which two adjacent occupation numbers count as degenerate.
pub const DEFAULT_TOL_DEG: f64 = 1e-8;

/// `entries[(j-1, k-1)] = <Psi| a_j^† a_k |Psi>`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneRdm {
    entries: CMatrix,
}

impl OneRdm {
    pub fn from_matrix(entries: CMatrix) -> Self {
        OneRdm { entries }
    }

    pub fn d(&self) -> usize {
        self.entries.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.entries.hermiticity_defect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.d()).map(|i| self.entries[(i, i)].re).collect()
    }

    /// Largest modulus among off-diagonal entries.
    pub fn max_offdiag(&self) -> f64 {
        let d = self.d();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    worst = worst.max(self.entries[(i, j)].norm());
                }
            }
        }
        worst
    }
}

/// Assembles the 1-RDM by applying every hop `a_j^† a_k` to every determinant.
pub fn one_rdm(state: &FermionState) -> OneRdm {
    let basis = state.basis();
    let d = basis.d();
    let amp = state.amplitudes();
    let mut m = CMatrix::zeros(d);
    for (&det, &cj) in basis.dets().iter().zip(amp) {
        if cj == Complex64::new(0.0, 0.0) {
            continue;
        }
        let mask = det.mask();
        let mut occ = mask;
        while occ != 0 {
            let k = occ.trailing_zeros() as usize + 1;
            occ &= occ - 1;
            m[(k - 1, k - 1)] += cj.norm_sqr();
            let (s1, hole) = det.annihilate(k).expect("k occupied");
            // only targets j < k; the upper triangle follows by Hermiticity
            let mut empty = !hole.mask() & ((1u64 << (k - 1)) - 1);
            while empty != 0 {
                let j = empty.trailing_zeros() as usize + 1;
                empty &= empty - 1;
                let (s2, target) = hole.create(j).expect("j empty");
                let idx = basis.index_of(target).expect("same particle number");
                // <Psi|a_j^† a_k|Psi> gets conj(c_target) * sign * c_det
                let contrib = amp[idx].conj() * cj * (s1 * s2);
                m[(j - 1, k - 1)] += contrib;
            }
        }
    }
    for j in 0..d {
        for k in j + 1..d {
            m[(k, j)] = m[(j, k)].conj();
        }
    }
    OneRdm { entries: m }
}

/// Occupation numbers sorted descending with the matching natural orbitals.
#[derive(Clone, Debug)]
pub struct NaturalSpectrum {
    /// Natural occupation numbers, descending.
    pub lambdas: Vec<f64>,
    /// Column `k` is natural orbital `k + 1` expressed in the input basis.
    pub orbitals: CMatrix,
    /// `lambdas[i] - lambdas[i + 1]`.
    pub gaps: Vec<f64>,
    /// Indices `i` (0-based) of adjacent pairs with `gaps[i] < tol_deg`.
    pub degenerate_pairs: Vec<usize>,
}

impl NaturalSpectrum {
    pub fn d(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_degenerate(&self) -> bool {
        !self.degenerate_pairs.is_empty()
    }

    /// `max |rho - U diag(lambda) U^†|`.
    pub fn reconstruction_residual(&self, rdm: &OneRdm) -> f64 {
        let u = &self.orbitals;
        let rebuilt = u.matmul(&CMatrix::from_real_diag(&self.lambdas)).matmul(&u.adjoint());
        rebuilt.max_abs_diff(rdm.matrix())
    }
}

/// Diagonalizes the 1-RDM, sorts eigenpairs descending (stable), and fixes
/// each orbital's phase so its largest-modulus entry is real positive.
pub fn natural_decomposition(rdm: &OneRdm, tol_deg: f64) -> Result<NaturalSpectrum> {
    let eig = jacobi_hermitian(rdm.matrix())?;
    let d = rdm.d();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.values[b].total_cmp(&eig.values[a]));

    let lambdas: Vec<f64> = order.iter().map(|&k| eig.values[k]).collect();
    let mut orbitals = CMatrix::zeros(d);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.vectors.column(k);
        // first index attaining the maximum modulus (ties to the lowest row)
        let mut best = 0;
        for i in 1..d {
            if v[i].norm() > v[best].norm() * (1.0 + 1e-12) {
                best = i;
            }
        }
        let pivot = v[best];
        let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..d {
            orbitals[(i, col)] = v[i] * phase;
        }
        orbitals[(best, col)] = Complex64::new(orbitals[(best, col)].norm(), 0.0);
    }
    let gaps: Vec<f64> = lambdas.windows(2).map(|w| w[0] - w[1]).collect();
    let degenerate_pairs = gaps.iter().enumerate().filter(|(_, &g)| g < tol_deg).map(|(i, _)| i).collect();
    Ok(NaturalSpectrum { lambdas, orbitals, gaps, degenerate_pairs })
}

/// Eigenvalues of the 1-RDM sorted descending, without natural orbitals.
pub fn natural_occupations(rdm: &OneRdm) -> Result<Vec<f64>> {
    let mut l = hermitian_eigenvalues(rdm.matrix())?;
    l.sort_by(|a, b| b.total_cmp(a));
    Ok(l)
}

/// Sorted natural occupation numbers of a state.
pub fn occupation_numbers(state: &FermionState) -> Result<Vec<f64>> {
    natural_occupations(&one_rdm(state))
}
