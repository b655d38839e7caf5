//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by graph loading, partitioning, training and evaluation.
#[derive(Error, Debug)]
pub enum Error {
    /// Malformed or inconsistent input data (bad ids, wrong row counts, ...).
    #[error("input error: {0}")]
    Input(String),
    /// Unparseable file content.
    #[error("parse error: {0}")]
    Parse(String),
    /// A caller-supplied value is out of its legal range.
    #[error("argument error: {0}")]
    Argument(String),
    /// Non-finite values or other numerical breakdown; names the offending component.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// A node's contrastive numerator has no positive mass.
    #[error("degenerate positive set: {0}")]
    DegeneratePositiveSet(String),
    /// Homophily score requested for an isolated node.
    #[error("undefined homophily score: {0}")]
    UndefinedScore(String),
    /// Linear probe cannot be trained (e.g. single-class train split).
    #[error("degenerate probe: {0}")]
    DegenerateProbe(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
