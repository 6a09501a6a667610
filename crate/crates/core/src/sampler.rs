//! Monte Carlo sampling of random fermionic states, quasipinning filters and
//! CSV emission.
//!
//! Every sample owns a seed derived from `(seed, index)`, so results do not
//! depend on the thread count or the shard schedule. Shards are processed in
//! parallel batches and their records are written in shard order.

use std::fs::OpenOptions;
use std::io::{self, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PinError, Result};
use crate::fock::{enumerate_basis, FermionState, FockBasis};
use crate::gpc::{builtin_catalog, GpcCatalog};
use crate::nobasis::{self_consistent, SelfConsistentExpansion};
use crate::pinning::{BdWeights, ConstraintAnalyzer, PinningReport, DEFAULT_CHI_FLOOR};
use crate::rdm::{natural_occupations, one_rdm, DEFAULT_TOL_DEG};

pub const DEFAULT_SHARD_SIZE: u64 = 16_384;
pub const DEFAULT_FLUSH_EVERY: usize = 4096;

/// Default quasipinning threshold for a setting.
pub fn default_threshold(_n: usize, d: usize) -> f64 {
    if d >= 8 {
        0.05
    } else {
        0.01
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of sample `index` in a run seeded with `seed`.
pub fn state_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

/// I.i.d. standard complex Gaussian amplitudes, normalized: the unitarily
/// invariant measure on the unit sphere.
pub fn random_state(basis: &Arc<FockBasis>, rng: &mut impl Rng) -> FermionState {
    loop {
        let amp: Vec<Complex64> =
            (0..basis.dim()).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        let state = FermionState::new(basis.clone(), amp).expect("length matches basis");
        if let Ok((s, _)) = state.normalized() {
            return s;
        }
    }
}

/// The state drawn for one sample seed.
pub fn state_from_seed(basis: &Arc<FockBasis>, seed: u64) -> FermionState {
    random_state(basis, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Records for `constraint` are kept only when `λ_i - λ_j >= min_gap`.
#[derive(Clone, Debug, Serialize)]
pub struct GapFilter {
    /// 0-based index into the catalog's inequalities.
    pub constraint: usize,
    /// 1-based mode pair.
    pub pair: (usize, usize),
    pub min_gap: f64,
}

impl GapFilter {
    pub fn passes(&self, lambdas: &[f64]) -> bool {
        lambdas[self.pair.0 - 1] - lambdas[self.pair.1 - 1] >= self.min_gap
    }
}

#[derive(Clone, Debug)]
pub struct SampleConfig {
    pub n: usize,
    pub d: usize,
    pub n_samples: u64,
    pub seed: u64,
    pub qp_threshold: f64,
    pub gap_filters: Vec<GapFilter>,
    /// Restricts records to these inequality indices.
    pub only_constraints: Option<Vec<usize>>,
    /// Analyze every constraint on every sample, not only quasipinned ones.
    pub check_all: bool,
    pub shard_size: u64,
    pub threads: usize,
    pub chi_floor: f64,
    pub catalog: GpcCatalog,
}

impl SampleConfig {
    /// Defaults for a setting with a built-in catalog.
    pub fn new(n: usize, d: usize, n_samples: u64, seed: u64) -> Result<Self> {
        Ok(Self::with_catalog(builtin_catalog(n, d)?, n_samples, seed))
    }

    pub fn with_catalog(catalog: GpcCatalog, n_samples: u64, seed: u64) -> Self {
        let (n, d) = catalog.setting();
        SampleConfig {
            n,
            d,
            n_samples,
            seed,
            qp_threshold: default_threshold(n, d),
            gap_filters: Vec::new(),
            only_constraints: None,
            check_all: false,
            shard_size: DEFAULT_SHARD_SIZE,
            threads: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            chi_floor: DEFAULT_CHI_FLOOR,
            catalog,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(PinError::Config("n_samples must be at least 1".into()));
        }
        if !(self.qp_threshold > 0.0 && self.qp_threshold <= 0.5) {
            return Err(PinError::Config(format!("qp_threshold must lie in (0, 1/2], got {}", self.qp_threshold)));
        }
        if self.shard_size == 0 || self.threads == 0 {
            return Err(PinError::Config("shard_size and threads must be positive".into()));
        }
        if self.catalog.setting() != (self.n, self.d) {
            return Err(PinError::SettingMismatch {
                n: self.n,
                d: self.d,
                found_n: self.catalog.n,
                found_d: self.catalog.d,
            });
        }
        let m = self.catalog.inequalities.len();
        for f in &self.gap_filters {
            if f.constraint >= m || f.pair.0 == 0 || f.pair.0 >= f.pair.1 || f.pair.1 > self.d {
                return Err(PinError::Config(format!("invalid gap filter {f:?}")));
            }
        }
        if let Some(only) = &self.only_constraints {
            if let Some(&bad) = only.iter().find(|&&j| j >= m) {
                return Err(PinError::Config(format!("constraint index {bad} out of range (catalog has {m})")));
            }
        }
        Ok(())
    }

    fn selected(&self, j: usize) -> bool {
        self.only_constraints.as_ref().is_none_or(|o| o.contains(&j))
    }

    /// Whether records for constraint `j` survive the gap filters.
    pub fn passes_filters(&self, j: usize, lambdas: &[f64]) -> bool {
        self.gap_filters.iter().filter(|f| f.constraint == j).all(|f| f.passes(lambdas))
    }

    fn n_shards(&self) -> u64 {
        self.n_samples.div_ceil(self.shard_size)
    }
}

/// Counters for one inequality.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ConstraintStats {
    pub label: String,
    pub n_quasipinned: u64,
    /// Quasipinned and past the gap filters.
    pub n_emitted: u64,
    pub n_analyzed: u64,
    pub thm2_violations: u64,
    pub window_lower_violations: u64,
    pub window_upper_checked: u64,
    pub window_upper_violations: u64,
    pub chi_min: Option<f64>,
    pub chi_max: Option<f64>,
    /// Smallest `D` seen; negative values would leave the polytope.
    pub min_value: f64,
}

fn min_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn max_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

impl ConstraintStats {
    fn new(label: &str) -> Self {
        ConstraintStats { label: label.to_string(), min_value: f64::INFINITY, ..Default::default() }
    }

    fn merge(&mut self, o: &ConstraintStats) {
        self.n_quasipinned += o.n_quasipinned;
        self.n_emitted += o.n_emitted;
        self.n_analyzed += o.n_analyzed;
        self.thm2_violations += o.thm2_violations;
        self.window_lower_violations += o.window_lower_violations;
        self.window_upper_checked += o.window_upper_checked;
        self.window_upper_violations += o.window_upper_violations;
        self.chi_min = min_opt(self.chi_min, o.chi_min);
        self.chi_max = max_opt(self.chi_max, o.chi_max);
        self.min_value = self.min_value.min(o.min_value);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentSummary {
    pub setting: (usize, usize),
    pub seed: u64,
    pub qp_threshold: f64,
    pub n_sampled: u64,
    /// Samples quasipinned by at least one inequality.
    pub n_quasipinned_states: u64,
    pub n_analyzed_states: u64,
    pub n_expansion_failures: u64,
    pub n_multi_degenerate: u64,
    pub constraints: Vec<ConstraintStats>,
    pub thm3_checked: u64,
    pub thm3_violations: u64,
    pub thm4_checked: u64,
    pub thm4_violations: u64,
    pub max_equality_residual: f64,
    /// Largest excursion of any λ outside `[0, 1]`.
    pub max_pauli_excess: f64,
    /// For `N = 2`: largest `|λ_{2j-1} - λ_{2j}|` over non-zero pairs.
    pub max_pair_splitting: f64,
    pub max_leakage: f64,
    /// Not serialized, so summaries of identical runs compare equal.
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl ExperimentSummary {
    pub fn empty(cfg: &SampleConfig) -> Self {
        ExperimentSummary {
            setting: (cfg.n, cfg.d),
            seed: cfg.seed,
            qp_threshold: cfg.qp_threshold,
            n_sampled: 0,
            n_quasipinned_states: 0,
            n_analyzed_states: 0,
            n_expansion_failures: 0,
            n_multi_degenerate: 0,
            constraints: cfg.catalog.inequalities.iter().map(|g| ConstraintStats::new(&g.label)).collect(),
            thm3_checked: 0,
            thm3_violations: 0,
            thm4_checked: 0,
            thm4_violations: 0,
            max_equality_residual: 0.0,
            max_pauli_excess: 0.0,
            max_pair_splitting: 0.0,
            max_leakage: 0.0,
            wall_seconds: 0.0,
        }
    }

    /// Folds another partial summary of the same run into this one.
    /// Associative and commutative; wall time is left untouched.
    pub fn merge(&mut self, o: &ExperimentSummary) {
        self.n_sampled += o.n_sampled;
        self.n_quasipinned_states += o.n_quasipinned_states;
        self.n_analyzed_states += o.n_analyzed_states;
        self.n_expansion_failures += o.n_expansion_failures;
        self.n_multi_degenerate += o.n_multi_degenerate;
        for (a, b) in self.constraints.iter_mut().zip(&o.constraints) {
            a.merge(b);
        }
        self.thm3_checked += o.thm3_checked;
        self.thm3_violations += o.thm3_violations;
        self.thm4_checked += o.thm4_checked;
        self.thm4_violations += o.thm4_violations;
        self.max_equality_residual = self.max_equality_residual.max(o.max_equality_residual);
        self.max_pauli_excess = self.max_pauli_excess.max(o.max_pauli_excess);
        self.max_pair_splitting = self.max_pair_splitting.max(o.max_pair_splitting);
        self.max_leakage = self.max_leakage.max(o.max_leakage);
    }

    pub fn quasipinned_fraction(&self) -> f64 {
        self.n_quasipinned_states as f64 / self.n_sampled as f64
    }

    pub fn thm2_violations(&self) -> u64 {
        self.constraints.iter().map(|c| c.thm2_violations).sum()
    }
}

/// Everything known about one sample, handed to extractors.
pub struct SampleView<'a> {
    pub index: u64,
    pub state_seed: u64,
    pub shard: u64,
    pub lambdas: &'a [f64],
    /// `D_j` for every inequality.
    pub values: &'a [f64],
    pub expansion: Option<&'a SelfConsistentExpansion>,
    /// `(j, report)` for every analyzed inequality.
    pub reports: &'a [(usize, PinningReport)],
    pub bd: Option<BdWeights>,
    pub cfg: &'a SampleConfig,
}

impl SampleView<'_> {
    /// Reports that are quasipinned, selected and pass the gap filters.
    pub fn emitted(&self) -> impl Iterator<Item = &(usize, PinningReport)> {
        self.reports.iter().filter(move |(j, r)| {
            r.is_quasipinned(self.cfg.qp_threshold)
                && self.cfg.selected(*j)
                && self.cfg.passes_filters(*j, self.lambdas)
        })
    }
}

/// A prepared sampling run.
pub struct Experiment {
    cfg: SampleConfig,
    basis: Arc<FockBasis>,
    analyzers: Vec<ConstraintAnalyzer>,
}

impl Experiment {
    pub fn new(cfg: SampleConfig) -> Result<Self> {
        cfg.validate()?;
        let basis = Arc::new(enumerate_basis(cfg.n, cfg.d)?);
        let analyzers =
            cfg.catalog.inequalities.iter().map(|g| ConstraintAnalyzer::new(g, &basis)).collect::<Result<Vec<_>>>()?;
        Ok(Experiment { cfg, basis, analyzers })
    }

    pub fn config(&self) -> &SampleConfig {
        &self.cfg
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    fn run_sample<T>(
        &self,
        index: u64,
        summary: &mut ExperimentSummary,
        out: &mut Vec<T>,
        extract: &(impl Fn(&SampleView) -> Vec<T> + Sync),
    ) -> Result<()> {
        let cfg = &self.cfg;
        let seed = state_seed(cfg.seed, index);
        let state = state_from_seed(&self.basis, seed);
        let lambdas = &natural_occupations(&one_rdm(&state))?;
        summary.n_sampled += 1;

        for l in lambdas {
            summary.max_pauli_excess = summary.max_pauli_excess.max(-l).max(l - 1.0);
        }
        for e in &cfg.catalog.equalities {
            summary.max_equality_residual = summary.max_equality_residual.max(e.evaluate_unchecked(lambdas).abs());
        }
        if cfg.n == 2 {
            for p in lambdas.chunks_exact(2) {
                if p[0] > 1e-10 {
                    summary.max_pair_splitting = summary.max_pair_splitting.max((p[0] - p[1]).abs());
                }
            }
        }

        let values: Vec<f64> = self.analyzers.iter().map(|a| a.gpc().evaluate_unchecked(lambdas)).collect();
        let mut any_qp = false;
        for (stats, &v) in summary.constraints.iter_mut().zip(&values) {
            stats.min_value = stats.min_value.min(v);
            if v <= cfg.qp_threshold {
                stats.n_quasipinned += 1;
                any_qp = true;
            }
        }
        if any_qp {
            summary.n_quasipinned_states += 1;
        }
        if !(any_qp || cfg.check_all) {
            return Ok(());
        }

        let exp = match self_consistent(&state, DEFAULT_TOL_DEG) {
            Ok(e) => e,
            Err(PinError::Convergence(_)) => {
                summary.n_expansion_failures += 1;
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        summary.n_analyzed_states += 1;
        let lambdas = exp.lambdas();
        if exp.spectrum.gaps.iter().filter(|&&g| g < crate::pinning::QUASI_DEGENERATE_GAP).count() >= 2 {
            summary.n_multi_degenerate += 1;
        }

        let mut reports = Vec::new();
        let mut bd = None;
        for (j, an) in self.analyzers.iter().enumerate() {
            let qp = values[j] <= cfg.qp_threshold;
            if !(qp || cfg.check_all) {
                continue;
            }
            let r = an.report(&exp, cfg.chi_floor)?;
            let stats = &mut summary.constraints[j];
            stats.n_analyzed += 1;
            if !r.thm2_ok {
                stats.thm2_violations += 1;
            }
            if an.is_bd_inequality() {
                summary.thm3_checked += 1;
                if r.thm3_ok == Some(false) {
                    summary.thm3_violations += 1;
                }
                if let Some(ok) = r.thm4_ok {
                    summary.thm4_checked += 1;
                    if !ok {
                        summary.thm4_violations += 1;
                    }
                }
                let w = an.bd_weights(&exp)?.expect("bd inequality");
                summary.max_leakage = summary.max_leakage.max(w.leakage);
                bd = Some(w);
            }
            if qp {
                if !r.window_lower_ok {
                    stats.window_lower_violations += 1;
                }
                if let Some(ok) = r.window_upper_ok {
                    stats.window_upper_checked += 1;
                    if !ok {
                        stats.window_upper_violations += 1;
                    }
                }
                stats.chi_min = min_opt(stats.chi_min, r.chi);
                stats.chi_max = max_opt(stats.chi_max, r.chi);
                if cfg.selected(j) && cfg.passes_filters(j, lambdas) {
                    stats.n_emitted += 1;
                }
            }
            reports.push((j, r));
        }

        let view = SampleView {
            index,
            state_seed: seed,
            shard: index / cfg.shard_size,
            lambdas,
            values: &values,
            expansion: Some(&exp),
            reports: &reports,
            bd,
            cfg,
        };
        out.extend(extract(&view));
        Ok(())
    }

    fn run_shard<T>(
        &self,
        shard: u64,
        extract: &(impl Fn(&SampleView) -> Vec<T> + Sync),
    ) -> Result<(ExperimentSummary, Vec<T>)> {
        let mut summary = ExperimentSummary::empty(&self.cfg);
        let mut out = Vec::new();
        let lo = shard * self.cfg.shard_size;
        let hi = (lo + self.cfg.shard_size).min(self.cfg.n_samples);
        for index in lo..hi {
            self.run_sample(index, &mut summary, &mut out, extract)?;
        }
        Ok((summary, out))
    }

    /// Runs every sample, passing extracted items to `sink` in sample order.
    pub fn scan<T: Send>(
        &self,
        extract: impl Fn(&SampleView) -> Vec<T> + Sync,
        mut sink: impl FnMut(T) -> Result<()>,
    ) -> Result<ExperimentSummary> {
        let start = Instant::now();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.threads)
            .build()
            .map_err(|e| PinError::Config(format!("thread pool: {e}")))?;
        let mut summary = ExperimentSummary::empty(&self.cfg);
        let batch = 2 * self.cfg.threads as u64;
        let n_shards = self.cfg.n_shards();
        let mut next = 0;
        while next < n_shards {
            let end = (next + batch).min(n_shards);
            let results: Vec<Result<(ExperimentSummary, Vec<T>)>> =
                pool.install(|| (next..end).into_par_iter().map(|s| self.run_shard(s, &extract)).collect());
            for r in results {
                let (part, items) = r?;
                summary.merge(&part);
                for item in items {
                    sink(item)?;
                }
            }
            next = end;
        }
        summary.wall_seconds = start.elapsed().as_secs_f64();
        Ok(summary)
    }

    /// Collects extracted items in sample order.
    pub fn collect<T: Send>(
        &self,
        extract: impl Fn(&SampleView) -> Vec<T> + Sync,
    ) -> Result<(ExperimentSummary, Vec<T>)> {
        let mut items = Vec::new();
        let summary = self.scan(extract, |t| {
            items.push(t);
            Ok(())
        })?;
        Ok((summary, items))
    }
}

/// Float formatting for CSV output: shortest representation that parses
/// back to the same value.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Quotes a CSV field when it contains a separator, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Splits one CSV line, honoring double-quoted fields.
pub fn split_csv_line(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', _) => quoted = !quoted,
            (',', false) => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// `state_seed,shard,constraint,D,dist2,w_in,chi,delta_lambda,swap_w,W_resid,lam1,...,lamd`
pub fn csv_header(d: usize) -> String {
    let mut h = String::from("state_seed,shard,constraint,D,dist2,w_in,chi,delta_lambda,swap_w,W_resid");
    for k in 1..=d {
        h.push_str(&format!(",lam{k}"));
    }
    h
}

/// One CSV line per emitted constraint of a sample.
pub fn csv_records(view: &SampleView) -> Vec<String> {
    view.emitted()
        .map(|(_, r)| {
            let mut line = format!(
                "{},{},{},{},{},{},{},{},{},{}",
                view.state_seed,
                view.shard,
                csv_field(&r.label),
                fmt_f64(r.d_value),
                fmt_f64(r.dist2),
                fmt_f64(r.w_in),
                fmt_opt(r.chi),
                fmt_opt(r.delta_lambda),
                fmt_f64(r.swap_w),
                fmt_f64(r.w_resid),
            );
            for l in view.lambdas {
                line.push(',');
                line.push_str(&fmt_f64(*l));
            }
            line
        })
        .collect()
}

/// Line-oriented writer that flushes after every `flush_every` records, so
/// an interrupted run leaves at most one partial trailing line.
pub struct CsvSink<W: Write> {
    inner: BufWriter<W>,
    pending: usize,
    flush_every: usize,
    written: u64,
}

impl<W: Write> CsvSink<W> {
    pub fn new(inner: W, flush_every: usize) -> Self {
        CsvSink { inner: BufWriter::new(inner), pending: 0, flush_every: flush_every.max(1), written: 0 }
    }

    /// Writes a line verbatim, without counting it as a record.
    pub fn write_line(&mut self, line: &str) -> io::Result<()> {
        self.inner.write_all(line.as_bytes())?;
        self.inner.write_all(b"\n")
    }

    pub fn write_record(&mut self, line: &str) -> io::Result<()> {
        self.write_line(line)?;
        self.written += 1;
        self.pending += 1;
        if self.pending >= self.flush_every {
            self.inner.flush()?;
            self.pending = 0;
        }
        Ok(())
    }

    pub fn records_written(&self) -> u64 {
        self.written
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| e.into_error())
    }
}

/// Cuts a file back to its last complete line. Returns the new length.
pub fn truncate_to_last_record(path: &Path) -> Result<u64> {
    let mut f = OpenOptions::new().read(true).write(true).open(path)?;
    let mut buf = Vec::new();
    f.seek(SeekFrom::Start(0))?;
    f.read_to_end(&mut buf)?;
    let keep = buf.iter().rposition(|&b| b == b'\n').map(|p| p + 1).unwrap_or(0) as u64;
    f.set_len(keep)?;
    Ok(keep)
}

/// Samples according to `cfg`, writing a CSV header and one record per
/// emitted constraint to `out`.
pub fn run_experiment<W: Write>(cfg: SampleConfig, out: W) -> Result<(ExperimentSummary, W)> {
    let exp = Experiment::new(cfg)?;
    let mut sink = CsvSink::new(out, DEFAULT_FLUSH_EVERY);
    sink.write_line(&csv_header(exp.cfg.d))?;
    let summary = exp.scan(csv_records, |line| Ok(sink.write_record(&line)?))?;
    Ok((summary, sink.finish()?))
}

/// The `(3,7)` scan of the residual weight outside the zero eigenspace and
/// its swap image, for the first and third inequality.
pub fn conjecture_config(n_samples: u64, seed: u64) -> Result<SampleConfig> {
    let mut cfg = SampleConfig::new(3, 7, n_samples, seed)?;
    cfg.qp_threshold = 0.005;
    cfg.only_constraints = Some(vec![0, 2]);
    cfg.gap_filters = vec![
        GapFilter { constraint: 0, pair: (5, 6), min_gap: 0.05 },
        GapFilter { constraint: 2, pair: (2, 3), min_gap: 0.05 },
    ];
    Ok(cfg)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjectureRecord {
    pub state_seed: u64,
    pub constraint: String,
    #[serde(rename = "D")]
    pub d_value: f64,
    pub delta_lambda: f64,
    #[serde(rename = "W_resid")]
    pub w_resid: f64,
    pub ratio: f64,
    pub lambdas: Vec<f64>,
}

pub fn conjecture_records(view: &SampleView) -> Vec<ConjectureRecord> {
    view.emitted()
        .filter(|(_, r)| r.d_value > view.cfg.chi_floor)
        .filter_map(|(_, r)| {
            Some(ConjectureRecord {
                state_seed: view.state_seed,
                constraint: r.label.clone(),
                d_value: r.d_value,
                delta_lambda: r.delta_lambda?,
                w_resid: r.w_resid,
                ratio: r.w_resid / r.d_value,
                lambdas: view.lambdas.to_vec(),
            })
        })
        .collect()
}

pub fn conjecture_scan(cfg: SampleConfig) -> Result<(ExperimentSummary, Vec<ConjectureRecord>)> {
    Experiment::new(cfg)?.collect(conjecture_records)
}

/// Distribution of `ratio` within one `Δλ` bin.
#[derive(Clone, Debug, Serialize)]
pub struct BinStat {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub p99: Option<f64>,
    pub max: Option<f64>,
}

/// Nearest-rank percentile of an unsorted slice; `q` in `[0, 1]`.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    Some(v[rank - 1])
}

/// Bins `(x, y)` pairs on `edges` (half-open `[lo, hi)`) and reports the
/// 99th percentile of `y` in each bin.
pub fn binned_p99(points: &[(f64, f64)], edges: &[f64]) -> Vec<BinStat> {
    edges
        .windows(2)
        .map(|w| {
            let ys: Vec<f64> = points.iter().filter(|(x, _)| *x >= w[0] && *x < w[1]).map(|(_, y)| *y).collect();
            BinStat {
                lo: w[0],
                hi: w[1],
                count: ys.len(),
                p99: percentile(&ys, 0.99),
                max: ys.iter().copied().reduce(f64::max),
            }
        })
        .collect()
}
