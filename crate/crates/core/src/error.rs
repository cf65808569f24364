use alloc::boxed::Box;
use alloc::string::String;

/// Errors raised by the forecasting core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("cannot resample to a step of {target}s, finer than native step {native}s")]
    UpsampleUnsupported { target: i64, native: i64 },
    #[error("no channel with id `{0}`")]
    UnknownChannel(String),
    #[error("channels are not aligned on a common grid")]
    NotAligned,
    #[error("split `{0}` is empty after leakage trimming")]
    SplitTooSmall(&'static str),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("quantile level {0} is outside (0, 1)")]
    InvalidQuantile(f64),
    #[error("model has no trainable parameters")]
    NotTrainable,
    #[error("training diverged at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
    #[error("parameter layout mismatch: `{expected}` vs `{found}`")]
    LayoutMismatch { expected: String, found: String },
    #[error("non-finite value in parameter vector")]
    NonFinite,
    #[error("no client update reached the server")]
    NoParticipants,
    #[error("normalization by a zero or negative mean of actual values")]
    UndefinedNormalization,
    #[error("non-physical psychrometric input: {0}")]
    NonPhysical(String),
    #[error("series has {len} samples, a window needs {needed}")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("correlation undefined for constant input")]
    UndefinedCorrelation,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("malformed parameter checkpoint: {0}")]
    Decode(String),
    #[error("round {round}: {source}")]
    InRound { round: usize, source: Box<Error> },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    /// Strips any round annotation and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::InRound { source, .. } => source.root(),
            e => e,
        }
    }
}
