use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate paper id `{id}` (line {line})")]
    DuplicateId { id: String, line: usize },
    #[error("year {year} outside corpus range [{min}, {max}]")]
    YearOutOfRange { year: i32, min: i32, max: i32 },
    #[error("cannot advance snapshot backwards from {from} to {to}")]
    SnapshotRewind { from: i32, to: i32 },
    #[error("unknown paper id `{0}`")]
    UnknownPaper(String),
    #[error("no giant: subnetwork has k_max = 0")]
    NoGiant,
    #[error("cache: {0}")]
    Cache(String),
    #[error("cohort too small for percentile split: {size} papers (need at least {min})")]
    CohortTooSmall { size: usize, min: usize },
    #[error("infeasible generator config: {0}")]
    InfeasibleConfig(String),
    #[error("oracle size cap exceeded: {papers} papers > cap {cap}")]
    OracleCap { papers: usize, cap: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
