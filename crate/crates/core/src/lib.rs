pub mod audio;
pub mod error;
pub mod experiment;
pub mod qit;
pub mod qsim;
pub mod qvae;
pub mod seed;
pub mod tensorio;
pub mod train;

pub use error::{Error, Result};
