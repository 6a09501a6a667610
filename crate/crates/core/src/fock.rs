//! Fock-space core: Slater determinants as bitmasks, the canonical basis of
//! an `(N, d)` setting, fermionic ladder operators and dense state vectors.
//!
//! Modes are numbered `1..=d`; mode `k` lives in bit `k - 1` of the mask.
//! The basis is ordered by ascending mask value, and the sign of a ladder
//! operator counts the occupied modes strictly below the mode it acts on.

use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PinError, Result};

/// Largest mode count representable in one machine word.
pub const MAX_MODES: usize = 63;

/// Refuse to allocate bases larger than this many determinants.
pub const MAX_BASIS_DIM: usize = 1 << 24;

/// A Slater determinant: bit `k - 1` set iff orbital `k` is occupied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SlaterDet(u64);

impl SlaterDet {
    pub const fn from_mask(mask: u64) -> Self {
        SlaterDet(mask)
    }

    /// Builds a determinant from 1-based occupied modes. Repeated or
    /// out-of-range modes are rejected.
    pub fn from_modes(modes: &[usize]) -> Result<Self> {
        let mut mask = 0u64;
        for &k in modes {
            if k == 0 || k > MAX_MODES {
                return Err(PinError::ModeOutOfRange { mode: k, d: MAX_MODES });
            }
            let bit = 1u64 << (k - 1);
            if mask & bit != 0 {
                return Err(PinError::Dimension(format!("mode {k} listed twice")));
            }
            mask |= bit;
        }
        Ok(SlaterDet(mask))
    }

    pub const fn mask(self) -> u64 {
        self.0
    }

    pub const fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub const fn occupies(self, k: usize) -> bool {
        k >= 1 && k <= 64 && self.0 & (1u64 << (k - 1)) != 0
    }

    /// Occupied modes in ascending order, 1-based.
    pub fn modes(self) -> impl Iterator<Item = usize> {
        let mut m = self.0;
        std::iter::from_fn(move || {
            if m == 0 {
                None
            } else {
                let k = m.trailing_zeros() as usize;
                m &= m - 1;
                Some(k + 1)
            }
        })
    }

    /// 0/1 occupation vector of length `d`.
    pub fn occupation_vector(self, d: usize) -> Vec<f64> {
        (1..=d).map(|k| if self.occupies(k) { 1.0 } else { 0.0 }).collect()
    }

    /// Number of orbitals in which two determinants of equal particle number differ.
    pub fn excitation_level(self, other: SlaterDet) -> usize {
        (self.0 & !other.0).count_ones() as usize
    }

    #[inline]
    fn sign_below(self, k: usize) -> f64 {
        let below = self.0 & ((1u64 << (k - 1)) - 1);
        if below.count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// `a_k |self>`; `None` when mode `k` is empty.
    #[inline]
    pub fn annihilate(self, k: usize) -> Option<(f64, SlaterDet)> {
        if !self.occupies(k) {
            return None;
        }
        Some((self.sign_below(k), SlaterDet(self.0 & !(1u64 << (k - 1)))))
    }

    /// `a_k^† |self>`; `None` under Pauli blocking.
    #[inline]
    pub fn create(self, k: usize) -> Option<(f64, SlaterDet)> {
        if self.occupies(k) {
            return None;
        }
        Some((self.sign_below(k), SlaterDet(self.0 | (1u64 << (k - 1)))))
    }

    /// `a_j^† a_k |self>`.
    #[inline]
    pub fn hop(self, j: usize, k: usize) -> Option<(f64, SlaterDet)> {
        let (s1, mid) = self.annihilate(k)?;
        let (s2, out) = mid.create(j)?;
        Some((s1 * s2, out))
    }
}

impl fmt::Display for SlaterDet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, k) in self.modes().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ">")
    }
}

fn check_mode(k: usize, d: usize) -> Result<()> {
    if k == 0 || k > d {
        Err(PinError::ModeOutOfRange { mode: k, d })
    } else {
        Ok(())
    }
}

/// `a_k |det>` with the mode checked against `d`.
pub fn apply_annihilator(k: usize, d: usize, det: SlaterDet) -> Result<Option<(f64, SlaterDet)>> {
    check_mode(k, d)?;
    Ok(det.annihilate(k))
}

/// `a_k^† |det>` with the mode checked against `d`.
pub fn apply_creator(k: usize, d: usize, det: SlaterDet) -> Result<Option<(f64, SlaterDet)>> {
    check_mode(k, d)?;
    Ok(det.create(k))
}

/// Binomial coefficient, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// All determinants of an `(N, d)` setting in ascending mask order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockBasis {
    n: usize,
    d: usize,
    dets: Vec<SlaterDet>,
    // binom[p][m] = C(p, m) for ranking
    binom: Vec<Vec<u64>>,
}

impl FockBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.dets.len()
    }

    pub fn dets(&self) -> &[SlaterDet] {
        &self.dets
    }

    pub fn det(&self, index: usize) -> SlaterDet {
        self.dets[index]
    }

    /// Position of `det` in the basis, or `None` if it does not belong to it.
    #[inline]
    pub fn index_of(&self, det: SlaterDet) -> Option<usize> {
        if det.count() != self.n || det.mask() >> self.d != 0 {
            return None;
        }
        Some(self.rank(det))
    }

    // Combinatorial number system: ascending masks are colex-ordered subsets.
    #[inline]
    fn rank(&self, det: SlaterDet) -> usize {
        let mut r = 0u64;
        for (m, k) in det.modes().enumerate() {
            r += self.binom[k - 1][m + 1];
        }
        r as usize
    }

    pub fn same_setting(&self, other: &FockBasis) -> bool {
        self.n == other.n && self.d == other.d
    }
}

/// Enumerates the canonical basis of `(N, d)`.
pub fn enumerate_basis(n: usize, d: usize) -> Result<FockBasis> {
    if n == 0 || n > d {
        return Err(PinError::Dimension(format!("need 1 <= N <= d, got N={n}, d={d}")));
    }
    if d > MAX_MODES {
        return Err(PinError::Dimension(format!("d={d} exceeds {MAX_MODES}")));
    }
    let dim = binomial(d, n);
    if dim > MAX_BASIS_DIM as u64 {
        return Err(PinError::Dimension(format!("binomial({d},{n}) = {dim} determinants is beyond dense storage")));
    }
    let mut dets = Vec::with_capacity(dim as usize);
    let limit = 1u64 << d;
    let mut mask = (1u64 << n) - 1;
    while mask < limit {
        dets.push(SlaterDet(mask));
        // Gosper's hack: next larger integer with the same popcount.
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    let binom = (0..d).map(|p| (0..=n).map(|m| binomial(p, m)).collect()).collect();
    Ok(FockBasis { n, d, dets, binom })
}

/// A normalized (or about to be normalized) N-fermion state with dense
/// amplitudes over a shared basis.
#[derive(Clone, Debug)]
pub struct FermionState {
    basis: Arc<FockBasis>,
    amp: Vec<Complex64>,
}

impl FermionState {
    pub fn new(basis: Arc<FockBasis>, amp: Vec<Complex64>) -> Result<Self> {
        if amp.len() != basis.dim() {
            return Err(PinError::LengthMismatch { expected: basis.dim(), got: amp.len() });
        }
        Ok(FermionState { basis, amp })
    }

    /// A single determinant with unit amplitude.
    pub fn from_det(basis: Arc<FockBasis>, det: SlaterDet) -> Result<Self> {
        let idx = basis
            .index_of(det)
            .ok_or_else(|| PinError::Dimension(format!("{det} is not in the ({},{}) basis", basis.n(), basis.d())))?;
        let mut amp = vec![Complex64::new(0.0, 0.0); basis.dim()];
        amp[idx] = Complex64::new(1.0, 0.0);
        Ok(FermionState { basis, amp })
    }

    /// Builds a state from `(det, amplitude)` pairs; unlisted determinants are zero.
    pub fn from_terms(basis: Arc<FockBasis>, terms: &[(SlaterDet, Complex64)]) -> Result<Self> {
        let mut amp = vec![Complex64::new(0.0, 0.0); basis.dim()];
        for &(det, c) in terms {
            let idx = basis.index_of(det).ok_or_else(|| {
                PinError::Dimension(format!("{det} is not in the ({},{}) basis", basis.n(), basis.d()))
            })?;
            amp[idx] += c;
        }
        Ok(FermionState { basis, amp })
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn basis_arc(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amp
    }

    pub fn amplitude(&self, det: SlaterDet) -> Complex64 {
        self.basis.index_of(det).map(|i| self.amp[i]).unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Returns the normalized state together with the norm that was divided out.
    pub fn normalized(self) -> Result<(Self, f64)> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(PinError::StateFile(format!("state has norm {norm}")));
        }
        let amp = self.amp.into_iter().map(|c| c / norm).collect();
        Ok((FermionState { basis: self.basis, amp }, norm))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        FermionState { basis: self.basis.clone(), amp: self.amp.iter().map(|c| c * factor).collect() }
    }

    /// `<k-th number operator>`: total weight of determinants occupying `k`.
    pub fn number_expectation(&self, k: usize) -> Result<f64> {
        check_mode(k, self.basis.d())?;
        Ok(self.basis.dets().iter().zip(&self.amp).filter(|(det, _)| det.occupies(k)).map(|(_, c)| c.norm_sqr()).sum())
    }

    /// Hermitian inner product, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &FermionState) -> Result<Complex64> {
        if !self.basis.same_setting(&other.basis) {
            return Err(PinError::BasisMismatch {
                n_a: self.basis.n(),
                d_a: self.basis.d(),
                n_b: other.basis.n(),
                d_b: other.basis.d(),
            });
        }
        Ok(self.amp.iter().zip(&other.amp).map(|(a, b)| a.conj() * b).sum())
    }

    /// Nonzero terms in basis order.
    pub fn terms(&self) -> impl Iterator<Item = (SlaterDet, Complex64)> + '_ {
        self.basis.dets().iter().copied().zip(self.amp.iter().copied()).filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
    }
}

/// Free-function form of [`FermionState::number_expectation`].
pub fn number_expectation(state: &FermionState, k: usize) -> Result<f64> {
    state.number_expectation(k)
}

/// Free-function form of [`FermionState::inner_product`].
pub fn inner_product(a: &FermionState, b: &FermionState) -> Result<Complex64> {
    a.inner_product(b)
}

/// Hodge-type particle-hole conjugate: the `(d - N, d)` state whose
/// amplitude on the complement of `I` is `conj(c_I)` times the parity of
/// the shuffle `(I, I^c)`. Its occupation numbers are `1 - λ` reversed.
pub fn particle_hole_conjugate(state: &FermionState) -> Result<FermionState> {
    let basis = state.basis();
    let (n, d) = (basis.n(), basis.d());
    let holes = Arc::new(enumerate_basis(d - n, d)?);
    let full = if d == 64 { u64::MAX } else { (1u64 << d) - 1 };
    let mut amp = vec![Complex64::new(0.0, 0.0); holes.dim()];
    for (det, c) in basis.dets().iter().zip(state.amplitudes()) {
        let comp = SlaterDet(!det.mask() & full);
        // parity of moving every occupied mode past the holes below it
        let mut inversions = 0usize;
        for k in det.modes() {
            inversions += (comp.mask() & ((1u64 << (k - 1)) - 1)).count_ones() as usize;
        }
        let sign = if inversions.is_multiple_of(2) { 1.0 } else { -1.0 };
        let idx = holes.index_of(comp).expect("complement lies in the hole basis");
        amp[idx] = c.conj() * sign;
    }
    FermionState::new(holes, amp)
}

/// One entry of the JSON state file.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AmplitudeEntry {
    pub det: Vec<usize>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// On-disk state format: `{"n", "d", "amplitudes": [{"det", "re", "im"}]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StateFile {
    pub n: usize,
    pub d: usize,
    pub amplitudes: Vec<AmplitudeEntry>,
}

/// A state read from disk, normalized, with the factor that was divided out.
#[derive(Clone, Debug)]
pub struct LoadedState {
    pub state: FermionState,
    pub norm_factor: f64,
}

impl StateFile {
    pub fn from_state(state: &FermionState) -> Self {
        StateFile {
            n: state.basis().n(),
            d: state.basis().d(),
            amplitudes: state
                .terms()
                .map(|(det, c)| AmplitudeEntry { det: det.modes().collect(), re: c.re, im: c.im })
                .collect(),
        }
    }

    /// Validates the entries and produces a normalized state.
    pub fn into_state(self) -> Result<LoadedState> {
        if self.amplitudes.is_empty() {
            return Err(PinError::StateFile("no amplitudes".into()));
        }
        let basis = Arc::new(
            enumerate_basis(self.n, self.d).map_err(|e| PinError::StateFile(format!("fields \"n\"/\"d\": {e}")))?,
        );
        let mut amp = vec![Complex64::new(0.0, 0.0); basis.dim()];
        let mut seen = vec![false; basis.dim()];
        for (i, entry) in self.amplitudes.iter().enumerate() {
            if entry.det.len() != self.n {
                return Err(PinError::StateFile(format!(
                    "amplitudes[{i}].det has {} modes, expected n={}",
                    entry.det.len(),
                    self.n
                )));
            }
            if let Some(&bad) = entry.det.iter().find(|&&k| k == 0 || k > self.d) {
                return Err(PinError::StateFile(format!("amplitudes[{i}].det: mode {bad} outside 1..={}", self.d)));
            }
            let det = SlaterDet::from_modes(&entry.det)
                .map_err(|e| PinError::StateFile(format!("amplitudes[{i}].det: {e}")))?;
            if !entry.re.is_finite() || !entry.im.is_finite() {
                return Err(PinError::StateFile(format!("amplitudes[{i}]: non-finite re/im")));
            }
            let idx = basis.index_of(det).expect("validated determinant");
            if seen[idx] {
                return Err(PinError::StateFile(format!("amplitudes[{i}].det: duplicate {det}")));
            }
            seen[idx] = true;
            // Unsorted mode lists denote the same determinant up to the
            // permutation sign.
            amp[idx] = Complex64::new(entry.re, entry.im) * permutation_sign(&entry.det);
        }
        let (state, norm_factor) = FermionState::new(basis, amp)?
            .normalized()
            .map_err(|_| PinError::StateFile("amplitudes sum to zero norm".into()))?;
        Ok(LoadedState { state, norm_factor })
    }
}

fn permutation_sign(modes: &[usize]) -> f64 {
    let mut inversions = 0;
    for i in 0..modes.len() {
        for j in i + 1..modes.len() {
            if modes[i] > modes[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Reads and normalizes a JSON state file.
pub fn load_state(path: &Path) -> Result<LoadedState> {
    let text = fs::read_to_string(path)?;
    let file: StateFile =
        serde_json::from_str(&text).map_err(|e| PinError::StateFile(format!("{}: {e}", path.display())))?;
    file.into_state()
}
