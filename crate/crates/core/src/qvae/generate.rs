use rayon::prelude::*;

use super::model::{generate_patch, sample_latent, QvaeModel};
use crate::audio::{invert_mel_patch, mel_filterbank, Waveform};
use crate::error::Result;
use crate::seed::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Real,
    Synthetic {
        /// Seed of this item's latent draw and phase initialization.
        seed: u64,
        /// Set when the generating model was never trained.
        untrained: bool,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedItem {
    pub wave: Waveform,
    pub label: usize,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AugmentedDataset {
    pub items: Vec<AugmentedItem>,
}

impl AugmentedDataset {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Draws `n_samples` latent vectors, decodes each to a mel patch and inverts
/// it to audio. Item `i` depends only on `(seed, i)` and the model, so the
/// parallel loop is reproducible.
pub fn generate_augmented(
    n_samples: usize,
    label: usize,
    model: &QvaeModel,
    seed: u64,
) -> Result<AugmentedDataset> {
    if n_samples == 0 {
        return Ok(AugmentedDataset::default());
    }
    if !model.trained {
        log::warn!("generating class {label} samples from an untrained QVAE");
    }
    let audio = model.audio;
    let fb = mel_filterbank(audio.n_fft, model.arch.patch_size, audio.sample_rate)?;
    let items = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let item_seed = derive_seed(seed, i as u64);
            let z = sample_latent(model.latent_dim(), item_seed);
            let patch = generate_patch(&z, model)?;
            let wave =
                invert_mel_patch(&patch, &fb, audio.hop, model.griffin_lim_iters, item_seed)?;
            Ok(AugmentedItem {
                wave,
                label,
                provenance: Provenance::Synthetic {
                    seed: item_seed,
                    untrained: !model.trained,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AugmentedDataset { items })
}
