use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the simulation primitives.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// A user's CIR has zero energy, so filters that normalize by the
    /// channel norm are undefined.
    #[error("user {user} has a zero-energy channel")]
    DegenerateChannel { user: usize },

    #[error("stream {stream} has a zero-energy filter")]
    ZeroEnergyFilter { stream: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("grid does not contain the focus offset 0")]
    MissingCenterOffset,

    #[error("length {len} is not a power of two")]
    NonPowerOfTwoLength { len: usize },

    /// Rank-deficient system in an unregularized solve.
    #[error("rank-deficient matrix in unregularized solve")]
    RankDeficient,

    #[error("channel matrix is singular at subcarrier {subcarrier}")]
    SingularSubcarrier { subcarrier: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("malformed CIR header: {0}")]
    MalformedHeader(String),

    #[error("truncated CIR payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("non-positive value in dB conversion: {0}")]
    NonPositiveDb(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
