use std::fs::{self, File};
use std::io::Write;

use anyhow::{Context, Result};
use serde_json::json;

use pinlab::gpc::GpcCatalog;
use pinlab::sampler::{
    binned_p99, conjecture_config, csv_field, fmt_f64, run_experiment, BinStat, ConjectureRecord, CsvSink, Experiment,
    ExperimentSummary, SampleConfig, DEFAULT_FLUSH_EVERY,
};

use crate::util::{check_threshold, load_catalog, EXIT_FAILURE};
use crate::{CatalogArgs, ConjectureArgs, SampleArgs, VerifyArgs};

/// `Δλ` bin edges for the residual-weight ratio.
pub const CONJECTURE_EDGES: [f64; 7] = [0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 1.0];

/// Tolerance for the hard invariants checked by `verify-bounds`.
pub const VERIFY_TOL: f64 = 1e-10;

fn apply_threads(cfg: &mut SampleConfig, threads: Option<usize>) {
    if let Some(t) = threads {
        cfg.threads = t;
    }
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn create(path: &std::path::Path) -> Result<File> {
    File::create(path).with_context(|| format!("cannot create {}", path.display()))
}

pub fn sample(args: &SampleArgs, threads: Option<usize>) -> Result<()> {
    let (n, d) = args.setting;
    let catalog = load_catalog(args.catalog.as_deref(), n, d)?;
    let mut cfg = SampleConfig::with_catalog(catalog, args.samples, args.seed);
    if let Some(t) = args.threshold {
        cfg.qp_threshold = check_threshold(t)?;
    }
    cfg.check_all = args.check_all;
    cfg.shard_size = args.shard_size;
    apply_threads(&mut cfg, threads);
    cfg.validate()?;
    let out = create(&args.out)?;
    let (summary, _) = run_experiment(cfg, out)?;
    let text = serde_json::to_string_pretty(&summary)?;
    if let Some(path) = &args.summary {
        fs::write(path, format!("{text}\n"))?;
    }
    println!("{text}");
    eprintln!(
        "sampled {} states in {:.2}s, {} quasipinned",
        summary.n_sampled, summary.wall_seconds, summary.n_quasipinned_states
    );
    Ok(())
}

pub fn conjecture_header() -> &'static str {
    "state_seed,constraint,D,delta_lambda,W_resid,W_over_D"
}

pub fn conjecture_line(r: &ConjectureRecord) -> String {
    format!(
        "{},{},{},{},{},{}",
        r.state_seed,
        csv_field(&r.constraint),
        fmt_f64(r.d_value),
        fmt_f64(r.delta_lambda),
        fmt_f64(r.w_resid),
        fmt_f64(r.ratio)
    )
}

/// Ratio statistics per constraint label, in catalog order.
pub fn conjecture_bins(
    catalog: &GpcCatalog,
    only: &[usize],
    records: &[ConjectureRecord],
) -> Vec<(String, Vec<BinStat>)> {
    only.iter()
        .map(|&j| {
            let label = &catalog.inequalities[j].label;
            let points: Vec<(f64, f64)> =
                records.iter().filter(|r| &r.constraint == label).map(|r| (r.delta_lambda, r.ratio)).collect();
            (label.clone(), binned_p99(&points, &CONJECTURE_EDGES))
        })
        .collect()
}

pub fn conjecture(args: &ConjectureArgs, threads: Option<usize>) -> Result<()> {
    let mut cfg = conjecture_config(args.samples, args.seed)?;
    cfg.qp_threshold = check_threshold(args.threshold)?;
    apply_threads(&mut cfg, threads);
    cfg.validate()?;
    let only = cfg.only_constraints.clone().unwrap_or_default();
    let catalog = cfg.catalog.clone();
    let mut sink = CsvSink::new(create(&args.out)?, DEFAULT_FLUSH_EVERY);
    sink.write_line(conjecture_header())?;
    let mut records = Vec::new();
    let summary = Experiment::new(cfg)?.scan(pinlab::sampler::conjecture_records, |r| {
        sink.write_record(&conjecture_line(&r))?;
        records.push(r);
        Ok(())
    })?;
    sink.finish()?;
    let bins: serde_json::Map<String, serde_json::Value> = conjecture_bins(&catalog, &only, &records)
        .into_iter()
        .map(|(l, b)| Ok((l, serde_json::to_value(b)?)))
        .collect::<Result<_>>()?;
    print_json(&json!({
        "seed": args.seed,
        "samples": args.samples,
        "threshold": args.threshold,
        "records": records.len(),
        "bins": bins,
    }))?;
    eprintln!("sampled {} states in {:.2}s", summary.n_sampled, summary.wall_seconds);
    Ok(())
}

pub fn catalog_text(catalog: &GpcCatalog) -> String {
    let mut s = format!("setting ({},{})\n", catalog.n, catalog.d);
    for g in &catalog.inequalities {
        s.push_str(&format!("  {:<10} {} >= 0    [{}]\n", g.label, g, g.coefficient_key()));
    }
    for g in &catalog.equalities {
        s.push_str(&format!("  {:<10} {} = 0    [{}]\n", g.label, g, g.coefficient_key()));
    }
    if catalog.inequalities.is_empty() && catalog.equalities.is_empty() {
        s.push_str("  (no constraints beyond the Pauli bounds)\n");
    }
    if catalog.partial {
        s.push_str("  note: partial table; supply the full constraint file with --catalog\n");
    }
    s
}

pub fn catalog(args: &CatalogArgs) -> Result<()> {
    let (n, d) = args.setting;
    let catalog = load_catalog(args.catalog.as_deref(), n, d)?;
    if args.json {
        let rows = |v: &[pinlab::gpc::Gpc]| -> Vec<serde_json::Value> {
            v.iter()
                .map(|g| json!({"label": g.label, "expression": g.to_string(), "kappa0": g.kappa0, "kappa": g.kappa}))
                .collect()
        };
        print_json(&json!({
            "setting": [n, d],
            "partial": catalog.partial,
            "inequalities": rows(&catalog.inequalities),
            "equalities": rows(&catalog.equalities),
        }))
    } else {
        print!("{}", catalog_text(&catalog));
        Ok(())
    }
}

/// Hard failures in a summary: violated theorems, the lower window bound,
/// points outside the polytope, broken Pauli bounds or equalities.
pub fn verify_failures(s: &ExperimentSummary) -> Vec<String> {
    let mut f = Vec::new();
    for c in &s.constraints {
        if c.thm2_violations > 0 {
            f.push(format!("{}: {} states with w_out < D/||D||", c.label, c.thm2_violations));
        }
        if c.window_lower_violations > 0 {
            f.push(format!("{}: {} lower-window violations", c.label, c.window_lower_violations));
        }
        if c.min_value < -VERIFY_TOL {
            f.push(format!("{}: value {} outside the polytope", c.label, c.min_value));
        }
    }
    if s.thm3_violations > 0 {
        f.push(format!("{} |xi|^2+|zeta|^2 <= D violations", s.thm3_violations));
    }
    if s.thm4_violations > 0 {
        f.push(format!("{} beta-gamma-delta bound violations", s.thm4_violations));
    }
    if s.max_pauli_excess > VERIFY_TOL {
        f.push(format!("Pauli bounds exceeded by {}", s.max_pauli_excess));
    }
    if s.max_equality_residual > VERIFY_TOL {
        f.push(format!("equality residual {}", s.max_equality_residual));
    }
    if s.max_pair_splitting > VERIFY_TOL {
        f.push(format!("paired occupation split by {}", s.max_pair_splitting));
    }
    f
}

pub fn verify(args: &VerifyArgs, threads: Option<usize>) -> Result<()> {
    let (n, d) = args.setting;
    let catalog = load_catalog(args.catalog.as_deref(), n, d)?;
    let mut cfg = SampleConfig::with_catalog(catalog, args.samples, args.seed);
    cfg.check_all = true;
    apply_threads(&mut cfg, threads);
    cfg.validate()?;
    let summary = Experiment::new(cfg)?.scan(|_| Vec::<()>::new(), |_| Ok(()))?;
    let failures = verify_failures(&summary);
    print_json(&json!({"summary": summary, "failures": failures, "ok": failures.is_empty()}))?;
    std::io::stdout().flush()?;
    if failures.is_empty() {
        eprintln!("all bounds hold on {} states", summary.n_sampled);
        Ok(())
    } else {
        Err(crate::util::fail(EXIT_FAILURE, format!("{} bound checks failed", failures.len())))
    }
}
