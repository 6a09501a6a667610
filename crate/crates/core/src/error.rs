use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum PinError {
    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("mode {mode} out of range 1..={d}")]
    ModeOutOfRange { mode: usize, d: usize },

    #[error("basis mismatch: ({n_a},{d_a}) vs ({n_b},{d_b})")]
    BasisMismatch { n_a: usize, d_a: usize, n_b: usize, d_b: usize },

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NonUnitary(f64),

    #[error("eigensolver did not converge (residual {0:.3e})")]
    Convergence(f64),

    #[error("setting ({n},{d}) not supported here: {reason}")]
    Setting { n: usize, d: usize, reason: String },

    #[error("unsupported setting ({n},{d}): no built-in constraints; supply a catalog file (see `load_catalog_file`)")]
    UnsupportedSetting { n: usize, d: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("occupation numbers not sorted descending at position {0}")]
    UnsortedInput(usize),

    #[error("index {index} out of range (must satisfy 1 <= i < {d})")]
    Index { index: usize, d: usize },

    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("setting mismatch: expected ({n},{d}), found ({found_n},{found_d})")]
    SettingMismatch { n: usize, d: usize, found_n: usize, found_d: usize },

    #[error("state file: {0}")]
    StateFile(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, PinError>;
