use thiserror::Error;

/// Errors produced by the signal, masking, beamforming, loss and scene APIs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("window/hop pair does not satisfy constant overlap-add")]
    NonCola,

    #[error("spectrogram was produced with a different STFT configuration")]
    ConfigMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("assignment enumeration too large: {candidates} candidates exceeds guard of {guard}")]
    EnumerationGuard { candidates: u64, guard: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
