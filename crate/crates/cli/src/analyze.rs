use std::fmt::Write as _;
use std::fs;

use anyhow::Result;
use serde_json::{json, Map, Value};

use pinlab::fock::{load_state, LoadedState};
use pinlab::gpc::GpcCatalog;
use pinlab::linalg::MatrixJson;
use pinlab::nobasis::{self_consistent, SelfConsistentExpansion};
use pinlab::pinning::{ConstraintAnalyzer, PinningReport, DEFAULT_CHI_FLOOR};
use pinlab::rdm::one_rdm;
use pinlab::PinError;

use crate::util::load_catalog;
use crate::AnalyzeArgs;

/// Expansion terms with a smaller weight are left out of the listing.
const WEIGHT_CUTOFF: f64 = 1e-14;

struct Term {
    modes: Vec<usize>,
    re: f64,
    im: f64,
    weight: f64,
    d_eigs: Vec<i64>,
}

pub struct Analysis {
    loaded: LoadedState,
    catalog: GpcCatalog,
    exp: SelfConsistentExpansion,
    reports: Vec<PinningReport>,
    terms: Vec<Term>,
}

pub fn analyze(loaded: LoadedState, catalog: GpcCatalog, tol_deg: f64) -> Result<Analysis> {
    let exp = self_consistent(&loaded.state, tol_deg)?;
    let basis = loaded.state.basis();
    let analyzers =
        catalog.inequalities.iter().map(|g| ConstraintAnalyzer::new(g, basis)).collect::<pinlab::Result<Vec<_>>>()?;
    let reports = analyzers.iter().map(|a| a.report(&exp, DEFAULT_CHI_FLOOR)).collect::<pinlab::Result<Vec<_>>>()?;
    let mut terms: Vec<Term> = basis
        .dets()
        .iter()
        .enumerate()
        .filter_map(|(i, &det)| {
            let c = exp.coeffs.amplitudes()[i];
            let weight = c.norm_sqr();
            (weight > WEIGHT_CUTOFF).then(|| Term {
                modes: det.modes().collect(),
                re: c.re,
                im: c.im,
                weight,
                d_eigs: analyzers.iter().map(|a| a.spectrum.eigenvalues[i]).collect(),
            })
        })
        .collect();
    terms.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.modes.cmp(&b.modes)));
    Ok(Analysis { loaded, catalog, exp, reports, terms })
}

impl Analysis {
    pub fn to_json(&self, state_id: &str, dump_rdm: bool) -> Result<Value> {
        let lambdas = self.exp.lambdas();
        let per_constraint = self
            .catalog
            .inequalities
            .iter()
            .zip(&self.reports)
            .map(|(g, r)| {
                let mut obj = Map::new();
                obj.insert("expression".into(), json!(g.to_string()));
                obj.insert("coefficients".into(), json!(g.coefficient_key()));
                if let Value::Object(fields) = serde_json::to_value(r)? {
                    obj.extend(fields);
                }
                Ok(Value::Object(obj))
            })
            .collect::<Result<Vec<_>>>()?;
        let equalities: Vec<Value> = self
            .catalog
            .equalities
            .iter()
            .map(|g| json!({"label": g.label, "expression": g.to_string(), "value": g.evaluate_unchecked(lambdas)}))
            .collect();
        let expansion: Vec<Value> = self
            .terms
            .iter()
            .map(|t| json!({"det": t.modes, "re": t.re, "im": t.im, "weight": t.weight, "d_eigenvalues": t.d_eigs}))
            .collect();
        let basis = self.loaded.state.basis();
        let mut out = json!({
            "state_id": state_id,
            "setting": [basis.n(), basis.d()],
            "norm_factor": self.loaded.norm_factor,
            "catalog_partial": self.catalog.partial,
            "lambdas": lambdas,
            "degenerate": self.exp.degenerate,
            "residuals": self.exp.residuals,
            "per_constraint": per_constraint,
            "equalities": equalities,
            "expansion": expansion,
        });
        if dump_rdm {
            out["rdm"] = serde_json::to_value(MatrixJson::from(one_rdm(&self.loaded.state).matrix()))?;
        }
        Ok(out)
    }

    pub fn to_table(&self, state_id: &str) -> String {
        let basis = self.loaded.state.basis();
        let mut s = String::new();
        let _ = writeln!(
            s,
            "state {state_id}  setting ({},{})  norm factor {:.6e}",
            basis.n(),
            basis.d(),
            self.loaded.norm_factor
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "natural occupation numbers");
        for (i, l) in self.exp.lambdas().iter().enumerate() {
            let _ = writeln!(s, "  λ{:<2} {l:.12}", i + 1);
        }
        if self.exp.degenerate {
            let _ = writeln!(s, "  (degenerate spectrum: expansion not unique)");
        }
        for g in &self.catalog.equalities {
            let _ = writeln!(s, "  {:<8} {} = {:.3e}", g.label, g, g.evaluate_unchecked(self.exp.lambdas()));
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "self-consistent expansion");
        let mut head = format!("  {:<24} {:>14} {:>14}", "det", "|c|", "|c|^2");
        for g in &self.catalog.inequalities {
            let _ = write!(head, " {:>10}", g.label);
        }
        let _ = writeln!(s, "{head}");
        for t in &self.terms {
            let det: Vec<String> = t.modes.iter().map(|m| m.to_string()).collect();
            let mut row =
                format!("  {:<24} {:>14.8e} {:>14.8e}", format!("|{}>", det.join(",")), t.weight.sqrt(), t.weight);
            for e in &t.d_eigs {
                let _ = write!(row, " {e:>10}");
            }
            let _ = writeln!(s, "{row}");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "constraints");
        for (g, r) in self.catalog.inequalities.iter().zip(&self.reports) {
            let _ = writeln!(s, "  {}: {} >= 0   [{}]", g.label, g, g.coefficient_key());
            let _ = writeln!(s, "    D {:.6e}  dist1 {:.6e}  dist2 {:.6e}", r.d_value, r.dist1, r.dist2);
            let _ = writeln!(s, "    w_in {:.6e}  w_out {:.6e}  chi {}", r.w_in, r.w_out, opt(r.chi));
            let pair = r.swap_pair.map(|(a, b)| format!("({a},{b})")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "    delta_lambda {} {pair}  swap_w {:.6e}  W_resid {:.6e}  ||D|| {}",
                opt(r.delta_lambda),
                r.swap_w,
                r.w_resid,
                r.op_norm
            );
            let _ = writeln!(
                s,
                "    bounds: lower window {}  upper window {}  thm2 {}{}{}",
                ok(r.window_lower_ok),
                r.window_upper_ok.map(ok).unwrap_or("n/a"),
                ok(r.thm2_ok),
                r.thm3_ok.map(|b| format!("  thm3 {}", ok(b))).unwrap_or_default(),
                r.thm4_ok.map(|b| format!("  thm4 {}", ok(b))).unwrap_or_default(),
            );
        }
        if self.catalog.partial {
            let _ = writeln!(s, "  (constraint table for this setting is partial)");
        }
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into())
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "VIOLATED"
    }
}

pub fn run(args: &AnalyzeArgs) -> Result<()> {
    let loaded = load_state(&args.state)?;
    let (n, d) = (loaded.state.basis().n(), loaded.state.basis().d());
    if let Some((en, ed)) = args.setting {
        if (en, ed) != (n, d) {
            return Err(PinError::SettingMismatch { n: en, d: ed, found_n: n, found_d: d }.into());
        }
    }
    let catalog = load_catalog(args.catalog.as_deref(), n, d)?;
    let analysis = analyze(loaded, catalog, args.tol_deg)?;
    let state_id = args.state.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let report = analysis.to_json(&state_id, args.dump_rdm)?;
    let text = serde_json::to_string_pretty(&report)?;
    if let Some(path) = &args.report {
        fs::write(path, format!("{text}\n"))?;
    }
    if args.json {
        println!("{text}");
    } else {
        print!("{}", analysis.to_table(&state_id));
        if args.dump_rdm {
            println!();
            println!("1-RDM (re | im)");
            let m = one_rdm(&analysis.loaded.state);
            let (re, im) = m.matrix().split_parts();
            for (r, i) in re.iter().zip(&im) {
                let r: Vec<String> = r.iter().map(|x| format!("{x:>10.6}")).collect();
                let i: Vec<String> = i.iter().map(|x| format!("{x:>10.6}")).collect();
                println!("  {} | {}", r.join(" "), i.join(" "));
            }
        }
    }
    Ok(())
}
