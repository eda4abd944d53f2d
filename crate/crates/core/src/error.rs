use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("series of length {len} is too short for a {levels}-level decomposition (minimum length {min_len})")]
    Decomposition {
        len: usize,
        levels: usize,
        min_len: usize,
    },

    #[error("inconsistent wavelet coefficients: {0}")]
    Structure(String),

    #[error("invalid feature name: {0}")]
    Naming(String),

    #[error("orientation undefined: window mean acceleration is zero")]
    UndefinedOrientation,

    #[error("input not ordered: {0}")]
    Ordering(String),

    #[error("schema error in {path}: {msg}")]
    Schema { path: String, msg: String },

    #[error("format error in {path}{}: {msg}", line.map(|l| format!(" line {l}")).unwrap_or_default())]
    Format {
        path: String,
        line: Option<u64>,
        msg: String,
    },

    #[error("packet log truncated at byte offset {offset}: {msg}")]
    Truncated { offset: u64, msg: String },

    #[error("packet checksum mismatch at byte offset {offset}")]
    Checksum { offset: u64 },

    #[error("unknown label code(s): {}", codes.join(", "))]
    Mapping { codes: Vec<String> },

    #[error("cannot split: class {class} has {count} rows (need at least {min})")]
    Split {
        class: String,
        count: usize,
        min: usize,
    },

    #[error("stratification failed: {0}")]
    Stratification(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("ROC AUC undefined: {0}")]
    UndefinedAuc(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("exact Shapley enumeration over {features} features exceeds the cap of {cap}; use sampled mode")]
    EnumerationCap { features: usize, cap: usize },

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing artifact {}: run `{command}` first", path.display())]
    MissingArtifact { path: PathBuf, command: String },

    #[error("configuration hash mismatch for {}: artifact has {found}, current run has {expected}", path.display())]
    HashMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
