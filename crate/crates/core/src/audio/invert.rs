use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::features::{MelPatch, LOG_EPSILON};
use super::mel::MelFilterbank;
use super::stft::{Spectrogram, StftPlan, WindowKind};
use super::Waveform;
use crate::error::{Error, Result};
use crate::qsim::C64;

/// Linear-frequency magnitudes (frame-major) estimated from a log-mel patch
/// through the filterbank pseudo-inverse, clamped at zero.
pub fn mel_patch_to_magnitudes(patch: &MelPatch, fb: &MelFilterbank) -> Result<Vec<Vec<f64>>> {
    if patch.p != fb.n_mels {
        return Err(Error::InvalidArgument(format!(
            "patch has {} mel rows, filterbank has {}",
            patch.p, fb.n_mels
        )));
    }
    let p = patch.p;
    let n_bins = fb.n_bins();
    let pinv = fb.pseudo_inverse();
    let mut frames = Vec::with_capacity(p);
    for t in 0..p {
        let mel_power: Vec<f64> = (0..p)
            .map(|m| (patch.get(m, t).exp() - LOG_EPSILON).max(0.0))
            .collect();
        let frame: Vec<f64> = (0..n_bins)
            .map(|k| {
                let power: f64 = (0..p).map(|m| pinv[k * p + m] * mel_power[m]).sum();
                power.max(0.0).sqrt()
            })
            .collect();
        frames.push(frame);
    }
    Ok(frames)
}

/// Griffin-Lim phase recovery: alternate between imposing `magnitudes` and
/// projecting onto consistent spectrograms, starting from seeded random
/// phases. Returns the overlap-add synthesis of the final estimate.
pub fn griffin_lim(
    magnitudes: &[Vec<f64>],
    plan: &StftPlan,
    n_iters: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phases: Vec<Vec<f64>> = magnitudes
        .iter()
        .map(|f| f.iter().map(|_| rng.random_range(-PI..PI)).collect())
        .collect();
    let build = |phases: &[Vec<f64>]| Spectrogram {
        frames: magnitudes
            .iter()
            .zip(phases)
            .map(|(mag, ph)| {
                mag.iter()
                    .zip(ph)
                    .map(|(m, a)| C64::from_polar(*m, *a))
                    .collect()
            })
            .collect(),
        n_fft: plan.n_fft(),
        hop: plan.hop(),
        window: WindowKind::Hann,
    };
    for _ in 0..n_iters {
        let signal = plan.inverse(&build(&phases))?;
        let rebuilt = plan.forward(&signal)?;
        for (ph, frame) in phases.iter_mut().zip(&rebuilt.frames) {
            for (a, x) in ph.iter_mut().zip(frame) {
                *a = x.arg();
            }
        }
    }
    plan.inverse(&build(&phases))
}

/// Waveform for a log-mel patch: undo the log, map back to linear
/// frequency with the pseudo-inverse, recover phase with Griffin-Lim and
/// synthesize by overlap-add. Output length is `(p − 1)·hop + n_fft`.
pub fn invert_mel_patch(
    patch: &MelPatch,
    fb: &MelFilterbank,
    hop: usize,
    n_iters: usize,
    seed: u64,
) -> Result<Waveform> {
    if n_iters < 1 {
        return Err(Error::InvalidArgument(
            "Griffin-Lim needs at least one iteration".into(),
        ));
    }
    let plan = StftPlan::new(fb.n_fft, hop)?;
    let magnitudes = mel_patch_to_magnitudes(patch, fb)?;
    let samples = griffin_lim(&magnitudes, &plan, n_iters, seed)?;
    Ok(Waveform {
        samples,
        sample_rate: fb.sample_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{extract_patches, mel_filterbank, stft, FeatureExtractor};

    #[test]
    fn output_length_and_silence() {
        let fb = mel_filterbank(512, 32, 16_000).unwrap();
        let silence = MelPatch::filled(32, LOG_EPSILON.ln());
        let w = invert_mel_patch(&silence, &fb, 256, 8, 1).unwrap();
        assert_eq!(w.samples.len(), 31 * 256 + 512);
        assert!(w.samples.iter().all(|x| x.abs() < 1e-3));
    }

    #[test]
    fn true_phase_round_trip_is_exact_in_the_interior() {
        let n_fft = 512;
        let hop = n_fft / 4;
        let samples: Vec<f64> = (0..8192)
            .map(|i| ((i * 31 % 97) as f64 / 97.0 - 0.5) + (i as f64 * 0.01).sin())
            .collect();
        let wave = Waveform {
            samples: samples.clone(),
            sample_rate: 16_000,
        };
        let spec = stft(&wave, n_fft, hop).unwrap();
        let back = crate::audio::istft(&spec, 16_000).unwrap();
        let covered = (spec.n_frames() - 1) * hop + n_fft;
        for i in n_fft..covered - n_fft {
            assert!((back.samples[i] - samples[i]).abs() <= 1e-6 * samples[i].abs().max(1e-3));
        }
    }

    #[test]
    fn pure_tone_keeps_its_bin() {
        let (sr, n_fft, hop, p) = (16_000u32, 512, 256, 32);
        let fx = FeatureExtractor::new(sr, n_fft, hop, p).unwrap();
        let bin = 32; // 1 kHz
        let f = bin as f64 * sr as f64 / n_fft as f64;
        let len = fx.patch_span();
        let wave = Waveform {
            samples: (0..len)
                .map(|i| 0.5 * (2.0 * PI * f * i as f64 / sr as f64).sin())
                .collect(),
            sample_rate: sr,
        };
        let patch = extract_patches(&wave, p, n_fft, hop).unwrap().remove(0);
        let out = invert_mel_patch(&patch, fx.filterbank(), hop, 32, 5).unwrap();
        let spec = stft(&out, n_fft, hop).unwrap();
        let mut avg = vec![0.0; spec.n_bins()];
        for frame in spec.power() {
            for (a, p) in avg.iter_mut().zip(frame) {
                *a += p;
            }
        }
        let peak = avg
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!((peak as i64 - bin as i64).abs() <= 1, "peak at {peak}");
    }
}
