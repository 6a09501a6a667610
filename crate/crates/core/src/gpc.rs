//! Generalized Pauli constraints `D(λ) = κ⁰ + κ·λ ≥ 0`: built-in tables,
//! evaluation on ordered spectra, facet distances, particle-hole duality and
//! a plain-text catalog format.
//!
//! Catalog file format, one constraint per line:
//!
//! ```text
//! # comment
//! 3 8 : 2 | -1 -1 0 0 -1 -1 0 0
//! ```

use std::fmt;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{PinError, Result};

/// Two-sided tolerance for equality constraints.
pub const EQUALITY_TOL: f64 = 1e-10;

/// One integer-coefficient linear constraint on sorted occupation numbers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Gpc {
    pub n: usize,
    pub d: usize,
    pub kappa0: i64,
    pub kappa: Vec<i64>,
    pub label: String,
}

impl Gpc {
    pub fn new(n: usize, d: usize, kappa0: i64, kappa: Vec<i64>, label: impl Into<String>) -> Result<Self> {
        if kappa.len() != d {
            return Err(PinError::LengthMismatch { expected: d, got: kappa.len() });
        }
        if kappa.iter().all(|&k| k == 0) {
            return Err(PinError::Dimension("constraint has no non-zero coefficient".into()));
        }
        Ok(Gpc { n, d, kappa0, kappa, label: label.into() })
    }

    pub fn setting(&self) -> (usize, usize) {
        (self.n, self.d)
    }

    /// `D(λ)`; `lambdas` must be sorted descending and of length `d`.
    pub fn evaluate(&self, lambdas: &[f64]) -> Result<f64> {
        check_spectrum(lambdas, self.d)?;
        Ok(self.evaluate_unchecked(lambdas))
    }

    #[inline]
    pub fn evaluate_unchecked(&self, lambdas: &[f64]) -> f64 {
        self.kappa0 as f64 + self.kappa.iter().zip(lambdas).map(|(&k, &l)| k as f64 * l).sum::<f64>()
    }

    pub fn norm_l2(&self) -> f64 {
        self.kappa.iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt()
    }

    pub fn norm_max(&self) -> f64 {
        self.kappa.iter().map(|&k| k.abs()).max().unwrap_or(0) as f64
    }

    /// Euclidean and l¹ distance of `λ` to the facet `D = 0`.
    pub fn distances(&self, lambdas: &[f64]) -> Result<Distances> {
        let value = self.evaluate(lambdas)?;
        Ok(Distances { l1: value / self.norm_max(), l2: value / self.norm_l2() })
    }

    /// Coefficients in the catalog file syntax, e.g. `2 | -1 -1 0 -1 0 0`.
    pub fn coefficient_key(&self) -> String {
        let ks: Vec<String> = self.kappa.iter().map(|k| k.to_string()).collect();
        format!("{} | {}", self.kappa0, ks.join(" "))
    }

    fn same_coefficients(&self, other: &Gpc) -> bool {
        self.setting() == other.setting() && self.kappa0 == other.kappa0 && self.kappa == other.kappa
    }

    /// The constraint under `λ_i ↦ 1 - λ_{d-i+1}`, for the `(d - N, d)` setting.
    pub fn particle_hole_dual(&self) -> Gpc {
        let sum: i64 = self.kappa.iter().sum();
        let kappa = self.kappa.iter().rev().map(|&k| -k).collect();
        Gpc { n: self.d - self.n, d: self.d, kappa0: self.kappa0 + sum, kappa, label: self.label.clone() }
    }
}

/// Algebraic form, e.g. `2 - (λ1 + λ2 + λ4)`.
impl fmt::Display for Gpc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nonzero: Vec<(usize, i64)> =
            self.kappa.iter().enumerate().filter(|(_, &k)| k != 0).map(|(i, &k)| (i + 1, k)).collect();
        if nonzero.iter().all(|&(_, k)| k == -1) {
            let terms: Vec<String> = nonzero.iter().map(|(i, _)| format!("λ{i}")).collect();
            return write!(f, "{} - ({})", self.kappa0, terms.join(" + "));
        }
        let mut out = String::new();
        if self.kappa0 != 0 {
            out.push_str(&self.kappa0.to_string());
        }
        for (i, k) in nonzero {
            let mag = k.abs();
            let coeff = if mag == 1 { String::new() } else { format!("{mag}") };
            if out.is_empty() {
                if k < 0 {
                    out.push('-');
                }
            } else {
                out.push_str(if k < 0 { " - " } else { " + " });
            }
            out.push_str(&format!("{coeff}λ{i}"));
        }
        f.write_str(&out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Distances {
    pub l1: f64,
    pub l2: f64,
}

fn check_spectrum(lambdas: &[f64], d: usize) -> Result<()> {
    if lambdas.len() != d {
        return Err(PinError::LengthMismatch { expected: d, got: lambdas.len() });
    }
    if let Some(i) = lambdas.windows(2).position(|w| w[0] < w[1]) {
        return Err(PinError::UnsortedInput(i + 1));
    }
    Ok(())
}

/// Free-function form of [`Gpc::evaluate`].
pub fn evaluate(gpc: &Gpc, lambdas: &[f64]) -> Result<f64> {
    gpc.evaluate(lambdas)
}

/// Free-function form of [`Gpc::distances`].
pub fn distances(gpc: &Gpc, lambdas: &[f64]) -> Result<Distances> {
    gpc.distances(lambdas)
}

/// The constraints of one `(N, d)` setting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GpcCatalog {
    pub n: usize,
    pub d: usize,
    pub inequalities: Vec<Gpc>,
    /// Constraints that hold with `= 0`.
    pub equalities: Vec<Gpc>,
    /// Set when the built-in table is known to be incomplete.
    pub partial: bool,
}

/// Number of inequalities in the complete `(3,8)` table.
pub const FULL_38_COUNT: usize = 31;

fn gpc(n: usize, d: usize, kappa0: i64, kappa: &[i64], label: &str) -> Gpc {
    Gpc::new(n, d, kappa0, kappa.to_vec(), label).expect("built-in constraint")
}

fn catalog_37_rows() -> [[i64; 7]; 4] {
    [[-1, -1, 0, 0, -1, -1, 0], [-1, 0, -1, -1, 0, -1, 0], [0, -1, -1, -1, -1, 0, 0], [-1, -1, 0, -1, 0, 0, -1]]
}

fn base_catalog(n: usize, d: usize) -> Option<GpcCatalog> {
    match (n, d) {
        (3, 6) => Some(GpcCatalog {
            n,
            d,
            inequalities: vec![gpc(3, 6, 2, &[-1, -1, 0, -1, 0, 0], "D(3,6)")],
            equalities: vec![
                gpc(3, 6, -1, &[1, 0, 0, 0, 0, 1], "E16"),
                gpc(3, 6, -1, &[0, 1, 0, 0, 1, 0], "E25"),
                gpc(3, 6, -1, &[0, 0, 1, 1, 0, 0], "E34"),
            ],
            partial: false,
        }),
        (3, 7) => Some(GpcCatalog {
            n,
            d,
            inequalities: catalog_37_rows()
                .iter()
                .enumerate()
                .map(|(j, row)| gpc(3, 7, 2, row, &format!("D{}(3,7)", j + 1)))
                .collect(),
            equalities: vec![],
            partial: false,
        }),
        (3, 8) => {
            let mut inequalities: Vec<Gpc> = catalog_37_rows()
                .iter()
                .enumerate()
                .map(|(j, row)| {
                    let mut k = row.to_vec();
                    k.push(0);
                    gpc(3, 8, 2, &k, &format!("D{}(3,8)", j + 1))
                })
                .collect();
            inequalities.push(gpc(3, 8, 1, &[-1, 0, 0, 0, 0, 0, 0, -1], "D5(3,8)"));
            Some(GpcCatalog { n, d, inequalities, equalities: vec![], partial: true })
        }
        _ => None,
    }
}

/// Built-in constraints for `(3,6)`, `(3,7)`, `(3,8)` and their
/// particle-hole duals `(4,7)`, `(5,8)`. The `(3,8)` table holds only five
/// of its constraints and is flagged `partial`.
pub fn builtin_catalog(n: usize, d: usize) -> Result<GpcCatalog> {
    if let Some(c) = base_catalog(n, d) {
        return Ok(c);
    }
    if d >= n {
        if let Some(c) = base_catalog(d - n, d) {
            return Ok(particle_hole_dual(&c));
        }
    }
    Err(PinError::UnsupportedSetting { n, d })
}

/// Rewrites every constraint of a catalog for the hole setting `(d - N, d)`.
pub fn particle_hole_dual(catalog: &GpcCatalog) -> GpcCatalog {
    GpcCatalog {
        n: catalog.d - catalog.n,
        d: catalog.d,
        inequalities: catalog.inequalities.iter().map(Gpc::particle_hole_dual).collect(),
        equalities: catalog.equalities.iter().map(Gpc::particle_hole_dual).collect(),
        partial: catalog.partial,
    }
}

impl GpcCatalog {
    pub fn empty(n: usize, d: usize) -> Self {
        GpcCatalog { n, d, inequalities: vec![], equalities: vec![], partial: false }
    }

    pub fn setting(&self) -> (usize, usize) {
        (self.n, self.d)
    }

    /// Whether `λ` (sorted) lies in the polytope: Pauli bounds, all
    /// inequalities to within `-tol`, all equalities to within `tol`.
    pub fn contains(&self, lambdas: &[f64], tol: f64) -> Result<bool> {
        check_spectrum(lambdas, self.d)?;
        let pauli = lambdas.iter().all(|&l| l >= -tol && l <= 1.0 + tol);
        let total: f64 = lambdas.iter().sum();
        let ineq = self.inequalities.iter().all(|g| g.evaluate_unchecked(lambdas) >= -tol);
        let eq = self.equalities.iter().all(|g| g.evaluate_unchecked(lambdas).abs() <= tol);
        Ok(pauli && (total - self.n as f64).abs() <= tol * self.d as f64 && ineq && eq)
    }

    pub fn find(&self, label: &str) -> Option<&Gpc> {
        self.inequalities.iter().chain(&self.equalities).find(|g| g.label == label)
    }
}

/// Parses one catalog line (comments already stripped).
fn parse_line(text: &str, path: &Path, line: usize) -> Result<(usize, usize, i64, Vec<i64>)> {
    let err = |msg: String| PinError::Parse { path: path.to_path_buf(), line, msg };
    let (setting, rest) = text.split_once(':').ok_or_else(|| err("missing ':' after setting".into()))?;
    let (k0, ks) = rest.split_once('|').ok_or_else(|| err("missing '|' after kappa0".into()))?;
    let nums: Vec<&str> = setting.split_whitespace().collect();
    if nums.len() != 2 {
        return Err(err(format!("expected 'N d' before ':', got '{}'", setting.trim())));
    }
    let n: usize = nums[0].parse().map_err(|_| err(format!("bad N '{}'", nums[0])))?;
    let d: usize = nums[1].parse().map_err(|_| err(format!("bad d '{}'", nums[1])))?;
    let kappa0: i64 = k0.trim().parse().map_err(|_| err(format!("bad kappa0 '{}'", k0.trim())))?;
    let kappa = ks
        .split_whitespace()
        .map(|t| t.parse::<i64>().map_err(|_| err(format!("bad coefficient '{t}'"))))
        .collect::<Result<Vec<i64>>>()?;
    if kappa.len() != d {
        return Err(err(format!("expected {d} coefficients, found {}", kappa.len())));
    }
    if kappa.iter().all(|&k| k == 0) {
        return Err(err("all coefficients are zero".into()));
    }
    Ok((n, d, kappa0, kappa))
}

/// Parses catalog text for setting `(n, d)`, merging it over the built-in
/// table (if one exists). Lines repeating a built-in are absorbed; repeats
/// within the file are rejected.
pub fn parse_catalog(text: &str, path: &Path, n: usize, d: usize) -> Result<GpcCatalog> {
    let mut catalog = match builtin_catalog(n, d) {
        Ok(c) => c,
        Err(PinError::UnsupportedSetting { .. }) => GpcCatalog::empty(n, d),
        Err(e) => return Err(e),
    };
    let builtin_count = catalog.inequalities.len();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (fn_, fd, kappa0, kappa) = parse_line(body, path, line)?;
        if (fn_, fd) != (n, d) {
            return Err(PinError::SettingMismatch { n, d, found_n: fn_, found_d: fd });
        }
        let g = Gpc::new(n, d, kappa0, kappa, format!("L{line}({n},{d})"))?;
        if let Some(pos) = catalog.inequalities.iter().position(|h| h.same_coefficients(&g)) {
            if pos < builtin_count {
                continue;
            }
            return Err(PinError::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("duplicate constraint (same as {})", catalog.inequalities[pos].label),
            });
        }
        catalog.inequalities.push(g);
    }
    if catalog.partial && (n, d) == (3, 8) && catalog.inequalities.len() >= FULL_38_COUNT {
        catalog.partial = false;
    }
    Ok(catalog)
}

/// Loads a catalog file for setting `(n, d)`; see [`parse_catalog`].
pub fn load_catalog_file(path: &Path, n: usize, d: usize) -> Result<GpcCatalog> {
    let text = fs::read_to_string(path)?;
    parse_catalog(&text, path, n, d)
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;
    use proptest::prelude::*;

    #[test]
    fn builtin_tables() {
        let c36 = builtin_catalog(3, 6).unwrap();
        assert_eq!(c36.equalities.len(), 3);
        assert_eq!(c36.inequalities.len(), 1);
        assert_eq!(c36.inequalities[0].kappa0, 2);
        assert_eq!(c36.inequalities[0].kappa, vec![-1, -1, 0, -1, 0, 0]);

        let c37 = builtin_catalog(3, 7).unwrap();
        assert_eq!(c37.inequalities.len(), 4);
        assert_eq!(c37.inequalities[2].kappa0, 2);
        assert_eq!(c37.inequalities[2].kappa, vec![0, -1, -1, -1, -1, 0, 0]);
        assert!(!c37.partial);

        let c38 = builtin_catalog(3, 8).unwrap();
        assert_eq!(c38.inequalities.len(), 5);
        assert!(c38.partial);
        assert_eq!(c38.inequalities[4].kappa0, 1);
        assert_eq!(c38.inequalities[4].kappa, vec![-1, 0, 0, 0, 0, 0, 0, -1]);
        for (a, b) in c37.inequalities.iter().zip(&c38.inequalities) {
            assert_eq!(&b.kappa[..7], &a.kappa[..]);
            assert_eq!(b.kappa[7], 0);
        }

        assert_eq!(builtin_catalog(4, 7).unwrap(), particle_hole_dual(&c37));
        assert_eq!(builtin_catalog(5, 8).unwrap().n, 5);
        assert!(matches!(builtin_catalog(4, 8), Err(PinError::UnsupportedSetting { .. })));
        let msg = builtin_catalog(2, 9).unwrap_err().to_string();
        assert!(msg.contains("catalog file"), "{msg}");
    }

    #[test]
    fn evaluate_examples() {
        let d36 = &builtin_catalog(3, 6).unwrap().inequalities[0];
        assert_eq!(d36.evaluate(&[1., 1., 1., 0., 0., 0.]).unwrap(), 0.0);
        assert_eq!(d36.evaluate(&[0.5; 6]).unwrap(), 0.5);
        assert!(matches!(d36.evaluate(&[0.5; 5]), Err(PinError::LengthMismatch { .. })));
        assert!(matches!(d36.evaluate(&[1., 0., 1., 0., 0., 1.]), Err(PinError::UnsortedInput(2))));
        assert_eq!(d36.to_string(), "2 - (λ1 + λ2 + λ4)");
    }

    #[test]
    fn distance_examples() {
        let d36 = &builtin_catalog(3, 6).unwrap().inequalities[0];
        let l = [0.9, 0.8, 0.6, 0.4, 0.2, 0.1];
        let dd = d36.evaluate(&l).unwrap();
        let dist = d36.distances(&l).unwrap();
        assert!((dist.l1 - dd).abs() < 1e-15);
        assert!((dist.l2 - dd / 3f64.sqrt()).abs() < 1e-15);
        let hf = d36.distances(&[1., 1., 1., 0., 0., 0.]).unwrap();
        assert_eq!((hf.l1, hf.l2), (0.0, 0.0));
        let d1 = &builtin_catalog(3, 7).unwrap().inequalities[0];
        let l7 = [0.9, 0.7, 0.5, 0.4, 0.3, 0.15, 0.05];
        let v = d1.evaluate(&l7).unwrap();
        assert!((d1.distances(&l7).unwrap().l2 - v / 2.0).abs() < 1e-15);
    }

    #[test]
    fn dual_of_borland_dennis_inequality() {
        let d36 = &builtin_catalog(3, 6).unwrap().inequalities[0];
        let dual = d36.particle_hole_dual();
        // λ3 + λ5 + λ6 - 1
        assert_eq!(dual.kappa0, -1);
        assert_eq!(dual.kappa, vec![0, 0, 1, 0, 1, 1]);
        assert_eq!(dual.particle_hole_dual(), *d36);
    }

    #[test]
    fn dual_is_involution() {
        for (n, d) in [(3, 6), (3, 7), (3, 8)] {
            let c = builtin_catalog(n, d).unwrap();
            let dual = particle_hole_dual(&c);
            assert_eq!(dual.inequalities.len(), c.inequalities.len());
            assert_eq!(dual.n, d - n);
            assert_eq!(particle_hole_dual(&dual), c);
        }
    }

    fn to_full(v: [f64; 3]) -> Vec<f64> {
        vec![1.0 - v[2], 1.0 - v[1], 1.0 - v[0], v[0], v[1], v[2]]
    }

    #[test]
    fn reduced_borland_dennis_polytope_matches_hull() {
        let c = builtin_catalog(3, 6).unwrap();
        let verts = [[0.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.5, 0.25, 0.25], [0.5, 0.5, 0.5]];
        for v in verts {
            assert!(c.inequalities[0].evaluate(&to_full(v)).unwrap() >= 0.0);
            assert!(c.contains(&to_full(v), 1e-12).unwrap());
        }
        // barycentric coordinates w.r.t. the tetrahedron, by Cramer's rule
        let sub = |a: [f64; 3], b: [f64; 3]| [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
        let det3 = |a: [f64; 3], b: [f64; 3], c: [f64; 3]| {
            a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
        };
        let (e1, e2, e3) = (sub(verts[1], verts[0]), sub(verts[2], verts[0]), sub(verts[3], verts[0]));
        let vol = det3(e1, e2, e3);
        let steps = 40;
        for i in 0..=steps {
            for j in 0..=steps {
                for k in 0..=steps {
                    let p =
                        [i as f64 / (2 * steps) as f64, j as f64 / (2 * steps) as f64, k as f64 / (2 * steps) as f64];
                    let r = sub(p, verts[0]);
                    let b1 = det3(r, e2, e3) / vol;
                    let b2 = det3(e1, r, e3) / vol;
                    let b3 = det3(e1, e2, r) / vol;
                    let in_hull = [b1, b2, b3, 1.0 - b1 - b2 - b3].iter().all(|&b| b >= -1e-12);
                    // grid points are on 1/80 lattice, so sortedness is exact
                    let full = to_full(p);
                    let member = full.windows(2).all(|w| w[0] >= w[1]) && c.contains(&full, 1e-12).unwrap();
                    assert_eq!(in_hull, member, "{p:?}");
                }
            }
        }
    }

    #[test]
    fn catalog_file_parsing() {
        let path = Path::new("inline.txt");
        let one = parse_catalog("3 8 : 2 | -1 -1 0 0 -1 -1 0 0\n", path, 3, 8).unwrap();
        assert_eq!(one, builtin_catalog(3, 8).unwrap());
        let empty = parse_catalog("", path, 3, 8).unwrap();
        assert_eq!(empty, builtin_catalog(3, 8).unwrap());

        let extra = parse_catalog("# extra\n3 8 : 1 | -1 0 0 0 0 0 -1 0  # c\n", path, 3, 8).unwrap();
        assert_eq!(extra.inequalities.len(), 6);
        assert_eq!(extra.inequalities[5].label, "L2(3,8)");

        match parse_catalog("\n3 8 : 2 | -1 -1 0\n", path, 3, 8) {
            Err(PinError::Parse { line, msg, .. }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("coefficients"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_catalog("3 7 : 2 | -1 -1 0 0 -1 -1 0\n", path, 3, 8),
            Err(PinError::SettingMismatch { .. })
        ));
        let dup = "3 8 : 1 | -1 0 0 0 0 0 -1 0\n3 8 : 1 | -1 0 0 0 0 0 -1 0\n";
        assert!(matches!(parse_catalog(dup, path, 3, 8), Err(PinError::Parse { line: 2, .. })));
        assert!(matches!(parse_catalog("3 8 2 -1\n", path, 3, 8), Err(PinError::Parse { line: 1, .. })));
    }

    #[test]
    fn catalog_file_from_disk() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "4 8 : 1 | -1 0 0 0 0 0 0 -1").unwrap();
        let c = load_catalog_file(f.path(), 4, 8).unwrap();
        assert_eq!(c.inequalities.len(), 1);
        assert!(c.equalities.is_empty());
    }

    proptest! {
        #[test]
        fn evaluate_is_affine(a in 0.0f64..1.0, raw1 in proptest::collection::vec(0.0f64..1.0, 7),
                              raw2 in proptest::collection::vec(0.0f64..1.0, 7)) {
            let mut l = raw1.clone();
            let mut m = raw2.clone();
            l.sort_by(|x, y| y.total_cmp(x));
            m.sort_by(|x, y| y.total_cmp(x));
            let mix: Vec<f64> = l.iter().zip(&m).map(|(x, y)| a * x + (1.0 - a) * y).collect();
            for g in builtin_catalog(3, 7).unwrap().inequalities {
                let lhs = g.evaluate(&mix).unwrap();
                let rhs = a * g.evaluate(&l).unwrap() + (1.0 - a) * g.evaluate(&m).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-14);
            }
        }
    }
}
