//! Turns a two-tone signal into a log-mel patch and back to audio with the
//! pseudo-inverse filterbank and Griffin-Lim, then writes both WAVs.
//!
//! Usage: `cargo run --example mel_inversion [out_dir]`

use std::f64::consts::TAU;
use std::path::PathBuf;

use qasc::audio::{invert_mel_patch, write_wav, AudioConfig, Waveform};

fn main() -> qasc::Result<()> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "out/inversion".into()),
    );
    std::fs::create_dir_all(&out)?;
    let audio = AudioConfig::default();
    let fx = audio.extractor(32)?;
    let sr = audio.sample_rate as f64;
    let wave = Waveform::new(
        (0..fx.patch_span())
            .map(|i| {
                let t = i as f64 / sr;
                0.3 * (TAU * 440.0 * t).sin() + 0.2 * (TAU * 1800.0 * t).sin()
            })
            .collect(),
        audio.sample_rate,
    )?;
    let patch = fx.patches(&wave)?.remove(0);
    for iters in [1, 8, 32, 64] {
        let back = invert_mel_patch(&patch, fx.filterbank(), audio.hop, iters, 1)?;
        let again = fx.patches(&back)?.remove(0);
        // compare only cells within 40 dB of the loudest one; silent cells
        // sit at log(ε) and would dominate the error
        let peak = patch.values.iter().cloned().fold(f64::MIN, f64::max);
        let active: Vec<(f64, f64)> = patch
            .values
            .iter()
            .zip(&again.values)
            .filter(|(a, _)| **a > peak - 4.0 * std::f64::consts::LN_10)
            .map(|(a, b)| (*a, *b))
            .collect();
        let rms =
            (active.iter().map(|(a, b)| (a - b).powi(2)).sum::<f64>() / active.len() as f64).sqrt();
        println!(
            "{iters:>2} Griffin-Lim iterations: log-mel RMS error {rms:.3} over {} active cells",
            active.len()
        );
        if iters == 64 {
            write_wav(out.join("inverted.wav"), &back)?;
        }
    }
    write_wav(out.join("original.wav"), &wave)?;
    println!("wrote {}", out.display());
    Ok(())
}
