use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Waveform;
use crate::error::{Error, Result};

/// Sentinel SNR meaning "no noise".
pub const CLEAN: f64 = f64::INFINITY;

pub fn mean_power(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64
}

/// Adds white Gaussian noise at `snr_db`. The noise draw is rescaled by its
/// realized power, so `10·log10(P_signal/P_noise)` equals `snr_db` on the
/// returned sample, not just in expectation. `snr_db = +∞` returns the input
/// unchanged.
pub fn add_noise_at_snr(wave: &Waveform, snr_db: f64, seed: u64) -> Result<Waveform> {
    if snr_db == CLEAN {
        return Ok(wave.clone());
    }
    if snr_db.is_nan() {
        return Err(Error::InvalidArgument("SNR is NaN".into()));
    }
    let signal_power = mean_power(&wave.samples);
    if signal_power <= 0.0 {
        return Err(Error::UndefinedSnr);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..wave.samples.len())
        .map(|_| rng.sample(StandardNormal))
        .collect();
    let noise_power = mean_power(&noise);
    let target = signal_power / 10f64.powf(snr_db / 10.0);
    let gain = (target / noise_power).sqrt();
    Ok(Waveform {
        samples: wave
            .samples
            .iter()
            .zip(&noise)
            .map(|(s, n)| s + gain * n)
            .collect(),
        sample_rate: wave.sample_rate,
    })
}
