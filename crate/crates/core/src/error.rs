use thiserror::Error;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time series must contain at least one value")]
    EmptySeries,
    #[error("non-finite observation at t = {t}")]
    NonFinite { t: usize },
    #[error("segment length L = {l} is invalid, must be at least 2")]
    SegmentLength { l: usize },
    #[error("shift k = {k} outside 1..={l}")]
    Shift { k: usize, l: usize },
    #[error("series of length {len} is too short for L = {l}: need at least {needed} values")]
    SeriesTooShort { len: usize, l: usize, needed: usize },
    #[error("matrix contains missing entries where a dense matrix is required")]
    MissingEntries,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("singular value decomposition did not converge on a {rows}x{cols} matrix")]
    SvdFailed { rows: usize, cols: usize },
    #[error("shift k = {k} has no observed last-row entries to regress on")]
    EmptyShift { k: usize },
    #[error("reference series has zero norm")]
    ZeroNorm,
    #[error("degenerate subset: {0}")]
    DegenerateSubset(&'static str),
    #[error("negative Poisson rate {rate} at t = {t}")]
    NegativeRate { t: usize, rate: f64 },
    #[error("invalid generator specification: {0}")]
    InvalidSpec(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no feasible hyper-parameter candidate: {0}")]
    NoFeasibleCandidate(String),
}

impl Error {
    /// True when the failure originates in a numerical kernel rather than
    /// in the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::SvdFailed { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
