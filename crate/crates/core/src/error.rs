use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sub-window is not contained in the configuration window")]
    WindowNotContained,

    #[error("volumes must be strictly increasing")]
    NonIncreasingVolumes,

    #[error("configuration already contains the origin")]
    OriginPresent,

    #[error("pair_uniform called with equal ids ({0})")]
    EqualIds(u64),

    #[error("configuration has duplicate birth times")]
    DuplicateBirthTimes,

    #[error("pattern of order {order} exceeds the cap of {cap} vertices")]
    PatternTooLarge { order: usize, cap: usize },

    #[error("pattern graph must be connected")]
    DisconnectedPattern,

    #[error("unknown functional `{0}`")]
    UnknownFunctional(String),

    #[error("complex truncated at dimension {dim_cap}; dimension {needed} required")]
    InsufficientDimCap { dim_cap: usize, needed: usize },

    #[error("complex is truncated; the Euler identity needs every clique")]
    IncompleteComplex,

    #[error("i/o failure: {0}")]
    Io(String),

    #[error("numerical integration failed: {0}")]
    Quadrature(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
