use super::mel::{mel_filterbank, MelFilterbank};
use super::stft::StftPlan;
use super::Waveform;
use crate::error::{Error, Result};

/// Floor added before the log so silent bins stay finite.
pub const LOG_EPSILON: f64 = 1e-10;

/// A `p × p` block of log-mel energies; rows are mel bands, columns frames.
#[derive(Clone, Debug, PartialEq)]
pub struct MelPatch {
    pub p: usize,
    pub values: Vec<f64>,
}

impl MelPatch {
    pub fn new(p: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != p * p {
            return Err(Error::InvalidArgument(format!(
                "patch of size {p} needs {} values, got {}",
                p * p,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("patch values must be finite".into()));
        }
        Ok(Self { p, values })
    }

    pub fn filled(p: usize, value: f64) -> Self {
        Self {
            p,
            values: vec![value; p * p],
        }
    }

    pub fn get(&self, mel: usize, frame: usize) -> f64 {
        self.values[mel * self.p + frame]
    }
}

/// STFT plan plus filterbank for turning waveforms into mel patches.
#[derive(Clone, Debug)]
pub struct FeatureExtractor {
    plan: StftPlan,
    filterbank: MelFilterbank,
    patch_size: usize,
}

impl FeatureExtractor {
    /// `n_mels` equals the patch size so patches come out square.
    pub fn new(sample_rate: u32, n_fft: usize, hop: usize, patch_size: usize) -> Result<Self> {
        if patch_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "patch size must be ≥ 2, got {patch_size}"
            )));
        }
        Ok(Self {
            plan: StftPlan::new(n_fft, hop)?,
            filterbank: mel_filterbank(n_fft, patch_size, sample_rate)?,
            patch_size,
        })
    }

    pub fn plan(&self) -> &StftPlan {
        &self.plan
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    /// Samples needed for exactly one patch.
    pub fn patch_span(&self) -> usize {
        self.plan.signal_len(self.patch_size)
    }

    /// log(mel·|STFT|² + ε), frame-major.
    pub fn log_mel(&self, wave: &Waveform) -> Result<Vec<Vec<f64>>> {
        if wave.sample_rate != self.filterbank.sample_rate {
            return Err(Error::InvalidArgument(format!(
                "waveform is {} Hz, extractor expects {} Hz",
                wave.sample_rate, self.filterbank.sample_rate
            )));
        }
        let spec = self.plan.forward(&wave.samples)?;
        Ok(spec
            .power()
            .iter()
            .map(|frame| {
                self.filterbank
                    .apply(frame)
                    .into_iter()
                    .map(|e| (e + LOG_EPSILON).ln())
                    .collect()
            })
            .collect())
    }

    /// Non-overlapping `p`-frame patches in time order; a trailing partial
    /// patch is dropped.
    pub fn patches(&self, wave: &Waveform) -> Result<Vec<MelPatch>> {
        let p = self.patch_size;
        let needed = self.patch_span();
        if wave.samples.len() < needed {
            return Err(Error::InsufficientAudio {
                needed,
                got: wave.samples.len(),
            });
        }
        let frames = self.log_mel(wave)?;
        Ok(frames
            .chunks_exact(p)
            .map(|block| {
                let mut values = vec![0.0; p * p];
                for (t, frame) in block.iter().enumerate() {
                    for (m, v) in frame.iter().enumerate() {
                        values[m * p + t] = *v;
                    }
                }
                MelPatch { p, values }
            })
            .collect())
    }
}

/// Log-mel patches of size `p` with `n_mels = p`.
pub fn extract_patches(
    wave: &Waveform,
    p: usize,
    n_fft: usize,
    hop: usize,
) -> Result<Vec<MelPatch>> {
    FeatureExtractor::new(wave.sample_rate, n_fft, hop, p)?.patches(wave)
}
