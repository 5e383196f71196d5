use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parameter arity mismatch: expected {expected}, got {got}")]
    ParameterArity { expected: usize, got: usize },

    #[error("state size mismatch: {0}")]
    StateSize(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient audio: need at least {needed} samples, got {got}")]
    InsufficientAudio { needed: usize, got: usize },

    #[error("SNR is undefined for a zero-power signal")]
    UndefinedSnr,

    #[error("projection shape mismatch: {0}")]
    Projection(String),

    #[error("empty sequence: {0}")]
    EmptySequence(&'static str),

    #[error("attention shape mismatch: {0}")]
    Attention(String),

    #[error("latent arity mismatch: expected {expected}, got {got}")]
    LatentArity { expected: usize, got: usize },

    #[error("decoder width mismatch: expected {expected}, got {got}")]
    Decoder { expected: usize, got: usize },

    #[error("invalid training set: {0}")]
    InvalidTrainingSet(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("tensor file format: {0}")]
    Format(String),

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
