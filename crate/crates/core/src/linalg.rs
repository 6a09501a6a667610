//! Small dense complex linear algebra: a square matrix type, a cyclic
//! Jacobi eigensolver for Hermitian matrices, and determinants.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PinError, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix { n, data: vec![ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        CMatrix { n, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(x, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(i, j)].conj())
    }

    pub fn matmul(&self, other: &CMatrix) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `max |m_jk - conj(m_kj)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `max |U^† U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint().matmul(self).max_abs_diff(&Self::identity(self.n))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    /// Rows as `(re, im)` pairs of nested vectors, for JSON output.
    pub fn split_parts(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let re = (0..self.n).map(|i| (0..self.n).map(|j| self[(i, j)].re).collect()).collect();
        let im = (0..self.n).map(|i| (0..self.n).map(|j| self[(i, j)].im).collect()).collect();
        (re, im)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Matrix in JSON as separate real and imaginary row arrays.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let (re, im) = m.split_parts();
        MatrixJson { re, im }
    }
}

/// Eigenpairs of a Hermitian matrix in solver order (not sorted).
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: CMatrix,
    pub sweeps: usize,
}

const MAX_SWEEPS: usize = 64;

// Off-diagonal mass (relative to the Frobenius norm) at which sweeps stop.
const OFF_TOL: f64 = 1e-15;

fn hermitian_part(a: &CMatrix) -> CMatrix {
    let n = a.dim();
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
        for j in i + 1..n {
            let h = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = h;
            m[(j, i)] = h.conj();
        }
    }
    m
}

// Runs cyclic sweeps on `m` in place, accumulating rotations into `v` if
// given. Returns the number of sweeps.
fn jacobi_sweeps(m: &mut CMatrix, mut v: Option<&mut CMatrix>, scale: f64) -> usize {
    let n = m.dim();
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[(i, j)].norm_sqr();
            }
        }
        if off.sqrt() <= OFF_TOL * scale {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let g = apq.norm_sqr().sqrt();
                if g <= 1e-300 || g <= 1e-19 * scale {
                    m[(p, q)] = ZERO;
                    m[(q, p)] = ZERO;
                    continue;
                }
                let phase = apq / g;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (2.0 * g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // J = diag(1, conj(phase)) * [[c, s], [-s, c]] on the (p, q) plane
                let jqp = -phase.conj() * s;
                let jqq = phase.conj() * c;
                // A <- A J
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = akp * c + akq * jqp;
                    m[(k, q)] = akp * s + akq * jqq;
                }
                // A <- J^† A
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = apk * c + jqp.conj() * aqk;
                    m[(q, k)] = apk * s + jqq.conj() * aqk;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = Complex64::new(app - t * g, 0.0);
                m[(q, q)] = Complex64::new(aqq + t * g, 0.0);
                if let Some(v) = v.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * c + vkq * jqp;
                        v[(k, q)] = vkp * s + vkq * jqq;
                    }
                }
            }
        }
    }
    sweeps
}

fn frobenius(m: &CMatrix) -> f64 {
    m.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
///
/// Each rotation first removes the phase of the pivot `a_pq` and then applies
/// a real plane rotation, so `V^† A V` converges to a real diagonal matrix.
pub fn jacobi_hermitian(a: &CMatrix) -> Result<HermitianEigen> {
    let n = a.dim();
    let mut m = hermitian_part(a);
    let mut v = CMatrix::identity(n);
    let scale = frobenius(&m).max(f64::MIN_POSITIVE);
    let sweeps = jacobi_sweeps(&mut m, Some(&mut v), scale);
    let values: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    let eig = HermitianEigen { values, vectors: v, sweeps };
    let residual = eigen_residual(a, &eig.values, &eig.vectors);
    if !(residual <= 1e-11 * scale.max(1.0)) {
        return Err(PinError::Convergence(residual));
    }
    Ok(eig)
}

/// Eigenvalues only, in solver order. Checked through the invariance of the
/// trace and the Frobenius norm instead of an eigenvector residual.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>> {
    let n = a.dim();
    let mut m = hermitian_part(a);
    let scale = frobenius(&m).max(f64::MIN_POSITIVE);
    jacobi_sweeps(&mut m, None, scale);
    let values: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    let trace_err = (values.iter().sum::<f64>() - a.trace().re).abs();
    let norm_err = (values.iter().map(|x| x * x).sum::<f64>().sqrt() - scale).abs();
    let defect = trace_err.max(norm_err);
    if !(defect <= 1e-11 * scale.max(1.0)) {
        return Err(PinError::Convergence(defect));
    }
    Ok(values)
}

/// `max |A V - V diag(values)|`.
pub fn eigen_residual(a: &CMatrix, values: &[f64], vectors: &CMatrix) -> f64 {
    let av = a.matmul(vectors);
    let n = a.dim();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for k in 0..n {
            worst = worst.max((av[(i, k)] - vectors[(i, k)] * values[k]).norm());
        }
    }
    worst
}

/// Determinant by Gaussian elimination with partial pivoting. `a` is
/// consumed as scratch space, row-major with side `n`.
pub fn det_in_place(a: &mut [Complex64], n: usize) -> Complex64 {
    match n {
        0 => return ONE,
        1 => return a[0],
        2 => return a[0] * a[3] - a[1] * a[2],
        3 => {
            return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6])
        }
        _ => {}
    }
    let mut det = ONE;
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x * n + col].norm_sqr().total_cmp(&a[y * n + col].norm_sqr())).unwrap();
        if a[pivot * n + col] == ZERO {
            return ZERO;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det *= p;
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            if f == ZERO {
                continue;
            }
            for j in col..n {
                let v = a[col * n + j];
                a[r * n + j] -= f * v;
            }
        }
    }
    det
}
