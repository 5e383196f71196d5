//! Per-class generative augmentation: a latent vector drives a small encoder
//! circuit, the measured distribution is decoded to a mel patch, and the
//! patch is turned back into audio.

mod checkpoint;
mod generate;
mod mlp;
mod model;
mod train;

pub use generate::{generate_augmented, AugmentedDataset, AugmentedItem, Provenance};
pub use mlp::{Dense, Mlp, MlpCache};
pub use model::{decode, encode_latent, generate_patch, sample_latent, QvaeArch, QvaeModel};
pub use train::{
    accumulate_qvae_gradient, qvae_objective, qvae_objective_gradient, train_qvae, QvaeConfig,
    QvaeLoss,
};
