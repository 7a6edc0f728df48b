use std::path::PathBuf;

use crate::itemset::Item;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("database contains no transactions")]
    EmptyDatabase,

    #[error("transaction {index} of the conditional database does not contain the base itemset")]
    NotConditional { index: usize },

    #[error("item {0} does not occur in the database")]
    UnknownItem(Item),

    #[error("antecedent has zero support")]
    ZeroSupport,

    #[error("frequencies are not overdispersed (mean {mean}, variance {variance})")]
    Underdispersed { mean: f64, variance: f64 },

    #[error("frequency histogram needs at least two distinct positive classes")]
    DegenerateHistogram,

    #[error("EM estimation of the zero class did not converge after {iterations} iterations")]
    NonConvergence { iterations: u32 },

    #[error("chi-square test needs at least 4 merged classes, got {classes}")]
    TooFewClasses { classes: usize },

    #[error("infeasible generator configuration: {0}")]
    InfeasibleConfig(String),

    #[error("mining aborted after {limit} itemsets")]
    LimitExceeded { limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}
