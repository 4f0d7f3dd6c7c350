use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },

    #[error("embedding vectors must have at least one component")]
    EmptyVector,

    #[error("non-finite value encountered: {0}")]
    NonFinite(f64),

    #[error("distance must be finite and non-negative, got {0}")]
    InvalidDistance(f64),

    #[error("genuine pair must share one group, got {group_a} / {group_b}")]
    GenuineCrossGroup { group_a: String, group_b: String },

    #[error("dataset needs at least one genuine and one impostor pair (genuine={genuine}, impostor={impostor})")]
    EmptyClass { genuine: usize, impostor: usize },

    #[error("{name} must lie in {range}, got {value}")]
    OutOfRange {
        name: &'static str,
        range: &'static str,
        value: f64,
    },

    #[error("no candidate threshold reaches {what} {target}")]
    Unreachable { what: &'static str, target: f64 },

    #[error("group label {0:?} is not in the declared group set")]
    UnknownGroup(String),

    #[error("metric needs at least {needed} groups, got {got}")]
    TooFewGroups { needed: usize, got: usize },

    #[error("policy FMR {policy} is infeasible: smallest achievable FMR is {min_fmr}")]
    InfeasiblePolicy { policy: f64, min_fmr: f64 },

    #[error("zero denominator in {0} (enable a zero guard to substitute)")]
    ZeroDenominator(&'static str),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("incompatible scenarios in reuse plan: {0}")]
    Plan(String),

    #[error("property checks require a suite built with dataset reuse")]
    ReuseRequired,

    #[error("scenario {label}: {source}")]
    Row {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_row(self, label: &str) -> Self {
        Error::Row {
            label: label.to_string(),
            source: Box::new(self),
        }
    }
}
