use std::env;
use std::fmt;
use std::path::{Path, PathBuf};

use pinlab::gpc::{builtin_catalog, load_catalog_file, GpcCatalog};
use pinlab::PinError;

/// Directory searched for catalog files.
pub const CATALOG_DIR_VAR: &str = "PINLAB_CATALOG_DIR";

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_UNSUPPORTED: u8 = 3;
pub const EXIT_MISSING_CATALOG: u8 = 4;

/// An error carrying its own exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl std::error::Error for CliError {}

pub fn fail(code: u8, msg: impl Into<String>) -> anyhow::Error {
    CliError { code, msg: msg.into() }.into()
}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    if let Some(c) = e.downcast_ref::<CliError>() {
        return c.code;
    }
    match e.downcast_ref::<PinError>() {
        Some(PinError::UnsupportedSetting { .. }) => EXIT_UNSUPPORTED,
        Some(_) => EXIT_USAGE,
        None if e.downcast_ref::<std::io::Error>().is_some() => EXIT_USAGE,
        None => EXIT_FAILURE,
    }
}

pub fn parse_setting(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected N,d, got '{s}'"))?;
    let n: usize = a.trim().parse().map_err(|_| format!("bad N '{a}'"))?;
    let d: usize = b.trim().parse().map_err(|_| format!("bad d '{b}'"))?;
    if n == 0 || n > d || d > pinlab::fock::MAX_MODES {
        return Err(format!("need 1 <= N <= d <= {}, got {n},{d}", pinlab::fock::MAX_MODES));
    }
    Ok((n, d))
}

/// Conventional catalog file name for a setting inside the search directory.
pub fn default_catalog_name(n: usize, d: usize) -> String {
    format!("gpc_{n}_{d}.txt")
}

/// Finds the catalog file to use: an explicit path (also looked up relative
/// to the search directory), else the conventional file in that directory.
pub fn resolve_catalog(arg: Option<&Path>, n: usize, d: usize) -> anyhow::Result<Option<PathBuf>> {
    let dir = env::var_os(CATALOG_DIR_VAR).map(PathBuf::from);
    match arg {
        Some(p) if p.exists() => Ok(Some(p.to_path_buf())),
        Some(p) => {
            if let Some(found) = dir.map(|q| q.join(p)).filter(|q| p.is_relative() && q.exists()) {
                return Ok(Some(found));
            }
            Err(fail(EXIT_USAGE, format!("catalog file not found: {}", p.display())))
        }
        None => Ok(dir.map(|p| p.join(default_catalog_name(n, d))).filter(|q| q.exists())),
    }
}

/// Built-in table merged with the resolved catalog file, if any.
pub fn load_catalog(arg: Option<&Path>, n: usize, d: usize) -> anyhow::Result<GpcCatalog> {
    match resolve_catalog(arg, n, d)? {
        Some(path) => Ok(load_catalog_file(&path, n, d)?),
        None => Ok(builtin_catalog(n, d)?),
    }
}

pub fn check_threshold(t: f64) -> anyhow::Result<f64> {
    if t > 0.0 && t <= 0.5 {
        Ok(t)
    } else {
        Err(fail(EXIT_USAGE, format!("--threshold must lie in (0, 0.5], got {t}")))
    }
}
