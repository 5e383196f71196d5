//! Front-end checks: STFT against a direct DFT, overlap-add reconstruction,
//! mel scale, noise injection, WAV I/O and tone inversion.

use std::f64::consts::PI;

use approx::{assert_abs_diff_eq, assert_relative_eq};
use proptest::prelude::*;
use qasc::audio::{
    add_noise_at_snr, extract_patches, hann_window, hz_to_mel, invert_mel_patch, istft, mean_power,
    mel_filterbank, mel_to_hz, read_wav, stft, write_wav, FeatureExtractor, Waveform,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noise_wave(seed: u64, len: usize) -> Waveform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Waveform::new(
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect(),
        16_000,
    )
    .unwrap()
}

fn tone(freq: f64, len: usize, amp: f64) -> Waveform {
    Waveform::new(
        (0..len)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / 16_000.0).sin())
            .collect(),
        16_000,
    )
    .unwrap()
}

#[test]
fn stft_frames_match_a_direct_dft() {
    let (n_fft, hop) = (64, 16);
    let wave = noise_wave(1, 400);
    let spec = stft(&wave, n_fft, hop).unwrap();
    let w = hann_window(n_fft);
    for (t, frame) in spec.frames.iter().enumerate() {
        for (k, x) in frame.iter().enumerate() {
            let (mut re, mut im) = (0.0, 0.0);
            for n in 0..n_fft {
                let v = wave.samples[t * hop + n] * w[n];
                let ang = -2.0 * PI * (k * n) as f64 / n_fft as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            assert_abs_diff_eq!(x.re, re, epsilon = 1e-10);
            assert_abs_diff_eq!(x.im, im, epsilon = 1e-10);
        }
    }
}

fn dominant_band(fx: &FeatureExtractor, wave: &Waveform) -> usize {
    let frames = fx.log_mel(wave).unwrap();
    let n = frames[0].len();
    let mean: Vec<f64> = (0..n)
        .map(|m| frames.iter().map(|f| f[m]).sum::<f64>())
        .collect();
    (0..n).max_by(|&a, &b| mean[a].total_cmp(&mean[b])).unwrap()
}

#[test]
fn pure_tones_keep_their_mel_band_through_inversion() {
    let fx = FeatureExtractor::new(16_000, 512, 256, 32).unwrap();
    for bin in (6..230).step_by(11) {
        let f = bin as f64 * 16_000.0 / 512.0;
        let wave = tone(f, fx.patch_span(), 0.4);
        let patch = extract_patches(&wave, 32, 512, 256).unwrap().remove(0);
        let out = invert_mel_patch(&patch, fx.filterbank(), 256, 32, 2).unwrap();
        let (want, got) = (dominant_band(&fx, &wave), dominant_band(&fx, &out));
        assert!(
            want.abs_diff(got) <= 1,
            "{f} Hz: band {want} came back as {got}"
        );
    }
}

#[test]
fn filterbank_rows_peak_at_their_centres() {
    let fb = mel_filterbank(512, 32, 16_000).unwrap();
    for m in 0..fb.n_mels {
        let row = fb.row(m);
        let peak = (0..row.len())
            .max_by(|&a, &b| row[a].total_cmp(&row[b]))
            .unwrap();
        let peak_hz = peak as f64 * 16_000.0 / 512.0;
        // the peak bin lies within one bin of the centre frequency
        assert!(
            (peak_hz - fb.centers()[m]).abs() <= 16_000.0 / 512.0,
            "band {m}"
        );
        assert!(row.iter().all(|&w| (0.0..=1.0).contains(&w)));
    }
}

#[test]
fn wav_round_trip_is_float_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.wav");
    let wave = noise_wave(3, 1234);
    write_wav(&path, &wave).unwrap();
    let back = read_wav(&path).unwrap();
    assert_eq!(back.sample_rate, 16_000);
    assert_eq!(back.samples.len(), wave.samples.len());
    for (a, b) in back.samples.iter().zip(&wave.samples) {
        assert_abs_diff_eq!(*a, *b, epsilon = 1e-7);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn overlap_add_reconstructs_the_interior(seed in any::<u64>(), quarter in any::<bool>()) {
        let n_fft = 256;
        let hop = if quarter { n_fft / 4 } else { n_fft / 2 };
        let wave = noise_wave(seed, 4096);
        let spec = stft(&wave, n_fft, hop).unwrap();
        let back = istft(&spec, 16_000).unwrap();
        let covered = (spec.n_frames() - 1) * hop + n_fft;
        for i in n_fft..covered - n_fft {
            prop_assert!((back.samples[i] - wave.samples[i]).abs() <= 1e-6 * wave.samples[i].abs().max(1e-3));
        }
    }

    #[test]
    fn mel_scale_round_trips(hz in 0.0f64..24_000.0) {
        assert_relative_eq!(mel_to_hz(hz_to_mel(hz)), hz, epsilon = 1e-9, max_relative = 1e-12);
    }

    #[test]
    fn injected_noise_hits_the_target_snr(seed in any::<u64>(), snr in -5.0f64..30.0) {
        let clean = tone(440.0, 8000, 0.3);
        let noisy = add_noise_at_snr(&clean, snr, seed).unwrap();
        let noise: Vec<f64> = noisy.samples.iter().zip(&clean.samples).map(|(a, b)| a - b).collect();
        let measured = 10.0 * (mean_power(&clean.samples) / mean_power(&noise)).log10();
        prop_assert!((measured - snr).abs() < 0.1);
        let again = add_noise_at_snr(&clean, snr, seed).unwrap();
        prop_assert_eq!(noisy, again);
    }
}

#[test]
fn silence_has_no_defined_snr() {
    let silent = Waveform::new(vec![0.0; 1000], 16_000).unwrap();
    assert!(add_noise_at_snr(&silent, 10.0, 1).is_err());
    assert_eq!(add_noise_at_snr(&silent, f64::INFINITY, 1).unwrap(), silent);
}
