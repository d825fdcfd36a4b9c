use thiserror::Error;

/// Errors surfaced by the mining engine.
#[derive(Debug, Error)]
pub enum TagdmError {
    /// The tuple store is empty (or a scope filter removed everything).
    #[error("no data")]
    NoData,

    /// Malformed input file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A group's tags have no overlap with the signature vocabulary.
    #[error("invalid signature for group {0}: no tags in vocabulary")]
    InvalidSignature(usize),

    /// Cosine of a zero vector is undefined.
    #[error("undefined angle: zero-length signature vector")]
    UndefinedAngle,

    /// Neither descriptor constrains the requested dimension.
    #[error("dimension absent: neither group constrains {0}")]
    DimensionAbsent(&'static str),

    /// Pairwise aggregation needs at least two groups.
    #[error("pairwise aggregation undefined for {0} group(s)")]
    TooFewGroups(usize),

    /// The exact solver would evaluate more candidates than allowed.
    #[error("budget exceeded: {candidates} candidate sets, budget {budget}")]
    BudgetExceeded { candidates: u128, budget: u64 },

    /// Solver cannot serve the given problem specification.
    #[error("incompatible solver: {0}")]
    IncompatibleSolver(String),

    /// Problem specification violates its own invariants.
    #[error("invalid problem spec: {0}")]
    InvalidSpec(String),

    /// Bad tunable or argument value.
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TagdmError>;
