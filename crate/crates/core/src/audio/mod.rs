//! Audio front end: STFT, mel filterbank, log-mel patches, SNR-controlled
//! noise and mel-to-waveform inversion.

mod features;
mod invert;
mod mel;
mod noise;
mod stft;
mod wav;

pub use features::{extract_patches, FeatureExtractor, MelPatch, LOG_EPSILON};
pub use invert::{griffin_lim, invert_mel_patch, mel_patch_to_magnitudes};
pub use mel::{hz_to_mel, mel_filterbank, mel_to_hz, MelFilterbank};
pub use noise::{add_noise_at_snr, mean_power, CLEAN};
pub use stft::{hann_window, istft, stft, Spectrogram, StftPlan, WindowKind};
pub use wav::{load_wav, read_wav, resample_linear, write_wav};

use serde::{Deserialize, Serialize};

/// Mono audio.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> crate::Result<Self> {
        if sample_rate == 0 {
            return Err(crate::Error::InvalidArgument(
                "sample rate must be positive".into(),
            ));
        }
        if samples.is_empty() {
            return Err(crate::Error::InsufficientAudio { needed: 1, got: 0 });
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn resampled(self, sample_rate: u32) -> Self {
        if self.sample_rate == sample_rate {
            return self;
        }
        Self {
            samples: resample_linear(&self.samples, self.sample_rate, sample_rate),
            sample_rate,
        }
    }
}

/// Front-end settings shared by featurization and inversion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AudioConfig {
    pub sample_rate: u32,
    pub n_fft: usize,
    pub hop: usize,
}

impl Default for AudioConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            n_fft: 512,
            hop: 256,
        }
    }
}

impl AudioConfig {
    pub fn extractor(&self, patch_size: usize) -> crate::Result<FeatureExtractor> {
        FeatureExtractor::new(self.sample_rate, self.n_fft, self.hop, patch_size)
    }
}
