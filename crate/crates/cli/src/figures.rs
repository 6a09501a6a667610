use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::json;

use pinlab::gpc::{builtin_catalog, load_catalog_file};
use pinlab::sampler::{conjecture_config, fmt_f64, Experiment, SampleConfig, SampleView};

use crate::util::{check_threshold, fail, resolve_catalog, EXIT_MISSING_CATALOG};
use crate::FiguresArgs;

/// Default quasipinning threshold per figure. The Borland-Dennis figures
/// take every state (the largest possible `D` there is 1/2).
pub fn default_threshold(fig: u8) -> f64 {
    match fig {
        3..=5 => 0.5,
        8 => 0.05,
        _ => 0.01,
    }
}

struct Panel {
    name: String,
    columns: &'static str,
}

fn panel(name: impl Into<String>, columns: &'static str) -> Panel {
    Panel { name: name.into(), columns }
}

type Row = (usize, String);

fn row(p: usize, seed: u64, vals: &[f64]) -> Row {
    let mut s = seed.to_string();
    for v in vals {
        s.push(',');
        s.push_str(&fmt_f64(*v));
    }
    (p, s)
}

struct Run {
    threshold: f64,
    panels: Vec<Panel>,
    rows: Vec<Row>,
}

fn write_panels(dir: &Path, fig: u8, seed: u64, samples: u64, run: &Run) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for (i, p) in run.panels.iter().enumerate() {
        let path = dir.join(format!("fig{fig}_{}.csv", p.name));
        let mut text = format!(
            "# source=fig{fig} seed={seed} samples={samples} threshold={}\n{}\n",
            fmt_f64(run.threshold),
            p.columns
        );
        for (_, line) in run.rows.iter().filter(|(k, _)| *k == i) {
            text.push_str(line);
            text.push('\n');
        }
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        paths.push(path);
    }
    Ok(paths)
}

fn bd_rows(view: &SampleView, fig: u8) -> Vec<Row> {
    let Some(bd) = view.bd else { return vec![] };
    let mut out = Vec::new();
    for (_, r) in view.emitted() {
        let s = view.state_seed;
        let d = r.d_value;
        let g34 = view.lambdas[2] - view.lambdas[3];
        let pos = d > view.cfg.chi_floor;
        match fig {
            3 => {
                out.push(row(0, s, &[d, bd.xi_zeta]));
                if pos {
                    out.push(row(1, s, &[g34, bd.xi_zeta / d]));
                }
            }
            4 => {
                if let Some(chi) = r.chi {
                    out.push(row(0, s, &[g34, chi]));
                    out.push(row(1, s, &[d, r.w_out, chi]));
                    out.push(row(2, s, &[g34, r.w_resid / d]));
                }
            }
            _ => {
                if pos {
                    let ratio = bd.beta_gamma_delta / d;
                    out.push(row(0, s, &[g34, ratio]));
                    out.push(row(1, s, &[g34, ratio * g34]));
                }
            }
        }
    }
    out
}

/// One row per emitted constraint, in panel `offset + j`.
fn chi_rows(view: &SampleView, times_gap: bool) -> Vec<Row> {
    view.emitted()
        .filter_map(|(j, r)| {
            let (chi, dl) = (r.chi?, r.delta_lambda?);
            Some(if times_gap {
                row(*j, view.state_seed, &[dl, chi * dl])
            } else {
                row(*j, view.state_seed, &[dl, chi, r.d_value])
            })
        })
        .collect()
}

fn configure(mut cfg: SampleConfig, threshold: f64, threads: Option<usize>) -> Result<SampleConfig> {
    cfg.qp_threshold = threshold;
    if let Some(t) = threads {
        cfg.threads = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(args: &FiguresArgs, threads: Option<usize>) -> Result<()> {
    let fig = args.fig;
    let threshold = check_threshold(args.threshold.unwrap_or_else(|| default_threshold(fig)))?;
    let (k, seed) = (args.samples, args.seed);
    let mut runs = Vec::new();
    match fig {
        3..=5 => {
            let cfg = configure(SampleConfig::new(3, 6, k, seed)?, threshold, threads)?;
            let panels = match fig {
                3 => vec![panel("left", "state_seed,D,xi_zeta"), panel("right", "state_seed,gap34,xi_zeta_over_D")],
                4 => vec![
                    panel("left", "state_seed,gap34,chi"),
                    panel("right", "state_seed,D,w_out,chi"),
                    panel("swap", "state_seed,gap34,W_resid_over_D"),
                ],
                _ => vec![
                    panel("left", "state_seed,gap34,bgd_over_D"),
                    panel("right", "state_seed,gap34,bgd_over_D_times_gap34"),
                ],
            };
            let (_, rows) = Experiment::new(cfg)?.collect(|v| bd_rows(v, fig))?;
            runs.push(Run { threshold, panels, rows });
        }
        6 | 7 => {
            let cfg = configure(SampleConfig::new(3, 7, k, seed)?, threshold, threads)?;
            let times_gap = fig == 7;
            let panels = (1..=4)
                .map(|j| {
                    if times_gap {
                        panel(format!("chidelta_j{j}"), "state_seed,delta_lambda,chi_times_delta_lambda")
                    } else {
                        panel(format!("j{j}"), "state_seed,delta_lambda,chi,D")
                    }
                })
                .collect();
            let (_, rows) = Experiment::new(cfg)?.collect(|v| chi_rows(v, times_gap))?;
            runs.push(Run { threshold, panels, rows });
            if fig == 7 {
                let cfg = conjecture_config(k, seed)?;
                let conj_threshold = cfg.qp_threshold;
                let cfg = configure(cfg, conj_threshold, threads)?;
                let labels: Vec<String> = cfg.catalog.inequalities.iter().map(|g| g.label.clone()).collect();
                let panels = vec![
                    panel("conj_j1", "state_seed,delta_lambda,D,W_resid,W_over_D"),
                    panel("conj_j3", "state_seed,delta_lambda,D,W_resid,W_over_D"),
                ];
                let (_, recs) = Experiment::new(cfg)?.collect(pinlab::sampler::conjecture_records)?;
                let rows = recs
                    .iter()
                    .map(|r| {
                        let p = usize::from(r.constraint != labels[0]);
                        row(p, r.state_seed, &[r.delta_lambda, r.d_value, r.w_resid, r.ratio])
                    })
                    .collect();
                runs.push(Run { threshold: conj_threshold, panels, rows });
            }
        }
        _ => {
            let Some(path) = resolve_catalog(args.catalog.as_deref(), 3, 8)? else {
                return Err(fail(
                    EXIT_MISSING_CATALOG,
                    "figure 8 needs the (3,8) constraint file: pass --catalog or set PINLAB_CATALOG_DIR",
                ));
            };
            let catalog = load_catalog_file(&path, 3, 8)?;
            let builtin = builtin_catalog(3, 8)?;
            let only: Vec<usize> = builtin
                .inequalities
                .iter()
                .map(|g| catalog.inequalities.iter().position(|h| h.kappa == g.kappa && h.kappa0 == g.kappa0))
                .collect::<Option<_>>()
                .expect("built-in rows are merged into every (3,8) catalog");
            let mut cfg = SampleConfig::with_catalog(catalog, k, seed);
            cfg.only_constraints = Some(only.clone());
            let cfg = configure(cfg, threshold, threads)?;
            let panels = (1..=only.len()).map(|j| panel(format!("j{j}"), "state_seed,delta_lambda,chi,D")).collect();
            let (summary, rows) = Experiment::new(cfg)?.collect(|v| {
                chi_rows(v, false)
                    .into_iter()
                    .filter_map(|(j, line)| only.iter().position(|&o| o == j).map(|p| (p, line)))
                    .collect()
            })?;
            let per_constraint: Vec<_> = summary
                .constraints
                .iter()
                .map(|c| json!({"label": c.label, "n_quasipinned": c.n_quasipinned}))
                .collect();
            eprintln!("{}", serde_json::to_string(&per_constraint)?);
            runs.push(Run { threshold, panels, rows });
        }
    }
    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let mut files = Vec::new();
    for r in &runs {
        for p in write_panels(&args.out, fig, seed, k, r)? {
            files.push(p.display().to_string());
        }
    }
    println!("{}", serde_json::to_string_pretty(&json!({"fig": fig, "files": files}))?);
    Ok(())
}
