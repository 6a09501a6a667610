//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use common::{max_dev, random_state, small_settings, tensor_rotate};
use pinlab::families::{
    bd_pinned_state, bd_unstable_family, construct_pinned_state, lowest_excitation, perturb, PINNED_TRIPLES,
};
use pinlab::gpc::{builtin_catalog, GpcCatalog};
use pinlab::nobasis::self_consistent;
use pinlab::pinning::{report, DEFAULT_CHI_FLOOR};
use pinlab::rdm::{occupation_numbers, DEFAULT_TOL_DEG};
use pinlab::sampler::{binned_p99, fmt_f64, Experiment, ExperimentSummary, SampleConfig, SampleView};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_140_501;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn out_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    fs::create_dir_all(&dir).unwrap();
    dir
}

// Quasipinned Borland-Dennis data for one (3,6) sample.
struct BdPoint {
    d: f64,
    xi_zeta: f64,
    one_minus_amn: f64,
    gap34: f64,
}

struct Run36 {
    summary: ExperimentSummary,
    points: Vec<BdPoint>,
}

fn run_36() -> Run36 {
    let mut cfg = SampleConfig::new(3, 6, 1_000_000, SEED).unwrap();
    cfg.check_all = true;
    let threshold = cfg.qp_threshold;
    let (summary, points) = Experiment::new(cfg)
        .unwrap()
        .collect(|v: &SampleView| {
            let (_, r) = &v.reports[0];
            match v.bd {
                Some(bd) if r.d_value <= threshold => vec![BdPoint {
                    d: r.d_value,
                    xi_zeta: bd.xi_zeta,
                    one_minus_amn: 1.0 - bd.alpha_mu_nu,
                    gap34: v.lambdas[2] - v.lambdas[3],
                }],
                _ => vec![],
            }
        })
        .unwrap();
    Run36 { summary, points }
}

fn criterion_1(run: &Run36) -> Verdict {
    let s = &run.summary;
    verdict(
        s.n_sampled == 1_000_000 && s.max_equality_residual <= 1e-10,
        format!("{} samples, max equality residual {:e}", s.n_sampled, s.max_equality_residual),
    )
}

fn criterion_2() -> Verdict {
    let cfg = SampleConfig::with_catalog(GpcCatalog::empty(2, 6), 100_000, SEED);
    let s = Experiment::new(cfg).unwrap().collect(|_| Vec::<()>::new()).unwrap().0;
    verdict(
        s.n_sampled == 100_000 && s.max_pair_splitting <= 1e-10,
        format!("{} samples, max |λ(2j-1) - λ(2j)| {:e}", s.n_sampled, s.max_pair_splitting),
    )
}

fn criterion_3(run36: &Run36, run37: &ExperimentSummary) -> Verdict {
    let v36 = run36.summary.thm2_violations();
    let v37 = run37.thm2_violations();
    let analyzed: u64 = run37.constraints.iter().map(|c| c.n_analyzed).sum();
    verdict(
        v36 == 0 && v37 == 0 && run36.summary.n_analyzed_states == 1_000_000 && run37.n_analyzed_states == 1_000_000,
        format!(
            "violations (3,6): {v36}, (3,7): {v37}; (3,7) constraint checks {analyzed}, expansion failures {}",
            run36.summary.n_expansion_failures + run37.n_expansion_failures
        ),
    )
}

fn criterion_4(run: &Run36) -> Verdict {
    let s = &run.summary;
    let path = out_dir().join("fig3_left.csv");
    let mut f = fs::File::create(&path).unwrap();
    writeln!(f, "# source=fig3 seed={SEED} samples={} threshold={}", s.n_sampled, s.qp_threshold).unwrap();
    writeln!(f, "D,xi_zeta,gap34").unwrap();
    let mut csv_ok = true;
    for p in &run.points {
        writeln!(f, "{},{},{}", fmt_f64(p.d), fmt_f64(p.xi_zeta), fmt_f64(p.gap34)).unwrap();
        csv_ok &= p.xi_zeta <= p.d + 1e-10;
    }
    verdict(
        s.thm3_violations == 0 && s.thm3_checked == s.n_sampled && csv_ok,
        format!(
            "{} checked, {} violations, {} rows in {}",
            s.thm3_checked,
            s.thm3_violations,
            run.points.len(),
            path.display()
        ),
    )
}

fn criterion_5(run: &Run36) -> Verdict {
    let s = &run.summary;
    verdict(
        s.thm4_violations == 0,
        format!("{} checked with λ3-λ4 > 1e-6, {} violations", s.thm4_checked, s.thm4_violations),
    )
}

fn criterion_6(run: &Run36) -> Verdict {
    let total = run.points.len();
    let mut lower_bad = 0;
    let mut upper_bad = 0;
    let mut ok = 0;
    for p in &run.points {
        let lower = p.one_minus_amn >= p.d / 2.0 - 1e-9;
        let upper = p.gap34 > 0.0 && p.one_minus_amn <= p.d / p.gap34 + 1e-9;
        lower_bad += usize::from(!lower);
        upper_bad += usize::from(!upper);
        ok += usize::from(lower && upper);
    }
    let frac = ok as f64 / total as f64;
    verdict(
        total > 0 && frac >= 0.99,
        format!("{ok}/{total} quasipinned samples inside the window ({:.4}%); lower misses {lower_bad}, upper misses {upper_bad}", 100.0 * frac),
    )
}

fn criterion_7() -> Verdict {
    let bd = builtin_catalog(3, 6).unwrap().inequalities[0].clone();
    let mut worst_d: f64 = 0.0;
    let mut worst_w: f64 = 0.0;
    for (a, b, g) in PINNED_TRIPLES {
        let exp = self_consistent(&bd_pinned_state(a, b, g).unwrap(), DEFAULT_TOL_DEG).unwrap();
        let r = report(&exp, &bd, DEFAULT_CHI_FLOOR).unwrap();
        worst_d = worst_d.max(r.d_value.abs());
        worst_w = worst_w.max((1.0 - r.w_in).abs());
    }
    let mut worst_eps: f64 = 0.0;
    let mut worst_win: f64 = 0.0;
    for eps in [1e-2, 1e-4] {
        let s = bd_unstable_family(eps).unwrap();
        let l = occupation_numbers(&s).unwrap();
        let exp = self_consistent(&s, DEFAULT_TOL_DEG).unwrap();
        let r = report(&exp, &bd, DEFAULT_CHI_FLOOR).unwrap();
        worst_eps = worst_eps.max((r.d_value - eps).abs()).max((l[2] - l[3] - eps).abs());
        worst_win = worst_win.max(r.w_in);
    }
    verdict(
        worst_d <= 1e-12 && worst_w <= 1e-12 && worst_eps <= 1e-10 && worst_win <= 1e-12,
        format!("pinned: max |D| {worst_d:e}, max |1-w_in| {worst_w:e}; unstable: max deviation from ε {worst_eps:e}, max w_in {worst_win:e}"),
    )
}

// Per quasipinned (3,7) constraint: what criteria 9 and 10 need.
struct QpRecord {
    j: usize,
    d: f64,
    delta_lambda: Option<f64>,
    w_resid: f64,
    lambdas: Vec<f64>,
}

fn run_37_large() -> (ExperimentSummary, Vec<QpRecord>) {
    let cfg = SampleConfig::new(3, 7, 10_000_000, SEED + 1).unwrap();
    Experiment::new(cfg)
        .unwrap()
        .collect(|v: &SampleView| {
            v.emitted()
                .map(|(j, r)| QpRecord {
                    j: *j,
                    d: r.d_value,
                    delta_lambda: r.delta_lambda,
                    w_resid: r.w_resid,
                    lambdas: v.lambdas.to_vec(),
                })
                .collect()
        })
        .unwrap()
}

fn criterion_8(s: &ExperimentSummary) -> Verdict {
    let frac = s.quasipinned_fraction();
    verdict(
        (5e-4..=2e-3).contains(&frac),
        format!(
            "{} of {} quasipinned (fraction {frac:.3e}), {:.1}s",
            s.n_quasipinned_states, s.n_sampled, s.wall_seconds
        ),
    )
}

fn criterion_9(s: &ExperimentSummary) -> Verdict {
    let lower: u64 = s.constraints.iter().map(|c| c.window_lower_violations).sum();
    let checked: u64 = s.constraints.iter().map(|c| c.window_upper_checked).sum();
    let upper_bad: u64 = s.constraints.iter().map(|c| c.window_upper_violations).sum();
    let qp: u64 = s.constraints.iter().map(|c| c.n_quasipinned).sum();
    let frac = 1.0 - upper_bad as f64 / checked as f64;
    verdict(
        lower == 0 && checked == qp && frac >= 0.99,
        format!(
            "{qp} quasipinned constraint hits; lower violations {lower}; upper satisfied {:.4}% ({upper_bad} misses)",
            100.0 * frac
        ),
    )
}

fn criterion_10(records: &[QpRecord]) -> Verdict {
    let mut by_j: Vec<Vec<(f64, f64)>> = vec![Vec::new(), Vec::new()];
    for r in records {
        let slot = match r.j {
            0 if r.lambdas[4] - r.lambdas[5] >= 0.05 => 0,
            2 if r.lambdas[1] - r.lambdas[2] >= 0.05 => 1,
            _ => continue,
        };
        if r.d > 0.005 || r.d <= DEFAULT_CHI_FLOOR {
            continue;
        }
        if let Some(dl) = r.delta_lambda {
            by_j[slot].push((dl, r.w_resid / r.d));
        }
    }
    let edges = [0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 1.0];
    let mut pass = by_j.iter().all(|v| !v.is_empty());
    let mut parts = Vec::new();
    let dir = out_dir();
    for (slot, pts) in by_j.iter().enumerate() {
        let name = ["j1", "j3"][slot];
        let mut f = fs::File::create(dir.join(format!("fig7_{name}.csv"))).unwrap();
        writeln!(f, "# source=fig7 seed={} samples=10000000 threshold=0.005", SEED + 1).unwrap();
        writeln!(f, "delta_lambda,W_over_D").unwrap();
        for (x, y) in pts {
            writeln!(f, "{},{}", fmt_f64(*x), fmt_f64(*y)).unwrap();
        }
        let bins = binned_p99(pts, &edges);
        let worst = bins.iter().filter_map(|b| b.p99).fold(0.0, f64::max);
        pass &= worst <= 10.0;
        let desc: Vec<String> = bins
            .iter()
            .map(|b| {
                format!("[{},{}):{}/{}", b.lo, b.hi, b.count, b.p99.map(|p| format!("{p:.2}")).unwrap_or("-".into()))
            })
            .collect();
        parts.push(format!("{name}: n={} worst p99 {worst:.3} bins {}", pts.len(), desc.join(" ")));
    }
    verdict(pass, parts.join("; "))
}

fn criterion_11() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    let settings = small_settings();
    for &(n, d) in &settings {
        for _ in 0..100 {
            let s = random_state(n, d, &mut rng);
            let exp = self_consistent(&s, DEFAULT_TOL_DEG).unwrap();
            let oracle = tensor_rotate(&s, &exp.spectrum.orbitals.transpose());
            worst = worst.max(max_dev(exp.coeffs.amplitudes(), &oracle));
        }
    }
    verdict(worst <= 1e-10, format!("{} settings x 100 states, max deviation {worst:e}", settings.len()))
}

fn criterion_12() -> Verdict {
    let cat = builtin_catalog(3, 8).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for g in &cat.inequalities {
        let c = construct_pinned_state(g, 0.02, SEED).unwrap();
        let j = lowest_excitation(g, c.state.basis()).unwrap().unwrap();
        let mut worst_ratio: f64 = 0.0;
        let mut ok = true;
        for eta in [1e-3, 1e-4, 1e-5] {
            let s = perturb(&c.state, j, eta).unwrap();
            let r = report(&self_consistent(&s, DEFAULT_TOL_DEG).unwrap(), g, DEFAULT_CHI_FLOOR).unwrap();
            let dl = r.delta_lambda.unwrap_or(f64::NAN);
            ok &= r.d_value > eta / 100.0 && r.d_value < 10.0 * eta;
            ok &= r.thm2_ok && r.w_out <= r.d_value / dl + 1e-9;
            worst_ratio = worst_ratio.max(r.w_out / r.d_value);
        }
        pass &= ok;
        parts.push(format!("{} {} max (1-w_in)/D {worst_ratio:.2}", g.label, if ok { "ok" } else { "FAILED" }));
    }
    verdict(pass, parts.join("; "))
}

fn main() {
    let total = Instant::now();
    let mut results: Vec<(u32, &str, Verdict, f64)> = Vec::new();
    let mut time = |id: u32, title: &'static str, f: &mut dyn FnMut() -> Verdict| {
        let t = Instant::now();
        let v = f();
        let secs = t.elapsed().as_secs_f64();
        println!("criterion {id:>2}: {} {title} | {} ({secs:.1}s)", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((id, title, v, secs));
    };

    let t = Instant::now();
    let run36 = run_36();
    println!("# (3,6) check-all run: {} samples in {:.1}s", run36.summary.n_sampled, t.elapsed().as_secs_f64());
    time(1, "equality constraints (3,6)", &mut || criterion_1(&run36));
    time(2, "even degeneracy (2,6)", &mut criterion_2);

    let t = Instant::now();
    let mut cfg37 = SampleConfig::new(3, 7, 1_000_000, SEED + 2).unwrap();
    cfg37.check_all = true;
    let run37 = Experiment::new(cfg37).unwrap().collect(|_| Vec::<()>::new()).unwrap().0;
    println!("# (3,7) check-all run: {} samples in {:.1}s", run37.n_sampled, t.elapsed().as_secs_f64());
    time(3, "universal lower bound", &mut || criterion_3(&run36, &run37));
    time(4, "xi/zeta bound", &mut || criterion_4(&run36));
    time(5, "beta/gamma/delta bound", &mut || criterion_5(&run36));
    time(6, "empirical (3,6) window", &mut || criterion_6(&run36));
    time(7, "analytic families", &mut criterion_7);

    let t = Instant::now();
    let (big, records) = run_37_large();
    println!("# (3,7) run: {} samples in {:.1}s", big.n_sampled, t.elapsed().as_secs_f64());
    time(8, "(3,7) quasipinned fraction", &mut || criterion_8(&big));
    time(9, "(3,7) stability window", &mut || criterion_9(&big));
    time(10, "residual weight scan", &mut || criterion_10(&records));
    time(11, "tensor oracle equivalence", &mut criterion_11);
    time(12, "(3,8) perturbed pinned states", &mut criterion_12);

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} passed in {:.1}s{}",
        results.len() - failed.len(),
        results.len(),
        total.elapsed().as_secs_f64(),
        if failed.is_empty() { String::new() } else { format!(", failed: {failed:?}") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
