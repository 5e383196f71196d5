use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::Waveform;
use crate::error::{Error, Result};
use crate::qsim::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowKind {
    Hann,
}

/// Periodic Hann window, which satisfies constant overlap-add at hops of
/// n/2 and n/4.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// One-sided short-time spectrum, stored frame-major: `frames[t][k]` for
/// frame `t` and bin `k ∈ 0..=n_fft/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    pub frames: Vec<Vec<C64>>,
    pub n_fft: usize,
    pub hop: usize,
    pub window: WindowKind,
}

impl Spectrogram {
    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    /// |X|² per frame.
    pub fn power(&self) -> Vec<Vec<f64>> {
        self.frames
            .iter()
            .map(|f| f.iter().map(|x| x.norm_sqr()).collect())
            .collect()
    }
}

/// Reusable forward/inverse FFT plans and window for one `(n_fft, hop)`.
#[derive(Clone)]
pub struct StftPlan {
    n_fft: usize,
    hop: usize,
    window: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for StftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StftPlan")
            .field("n_fft", &self.n_fft)
            .field("hop", &self.hop)
            .finish()
    }
}

impl StftPlan {
    pub fn new(n_fft: usize, hop: usize) -> Result<Self> {
        if n_fft < 2 || !n_fft.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "n_fft must be a power of two, got {n_fft}"
            )));
        }
        if hop == 0 || hop > n_fft {
            return Err(Error::InvalidConfig(format!(
                "hop must be in 1..={n_fft}, got {hop}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n_fft,
            hop,
            window: hann_window(n_fft),
            forward: planner.plan_fft_forward(n_fft),
            inverse: planner.plan_fft_inverse(n_fft),
        })
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Number of full frames in `len` samples; no padding.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.n_fft {
            0
        } else {
            (len - self.n_fft) / self.hop + 1
        }
    }

    /// Signal length spanned by `frames` frames.
    pub fn signal_len(&self, frames: usize) -> usize {
        if frames == 0 {
            0
        } else {
            (frames - 1) * self.hop + self.n_fft
        }
    }

    pub fn forward(&self, samples: &[f64]) -> Result<Spectrogram> {
        let n_frames = self.frame_count(samples.len());
        if n_frames == 0 {
            return Err(Error::InsufficientAudio {
                needed: self.n_fft,
                got: samples.len(),
            });
        }
        let n_bins = self.n_fft / 2 + 1;
        let mut buf = vec![C64::new(0.0, 0.0); self.n_fft];
        let mut frames = Vec::with_capacity(n_frames);
        for t in 0..n_frames {
            let start = t * self.hop;
            for (i, b) in buf.iter_mut().enumerate() {
                *b = C64::new(samples[start + i] * self.window[i], 0.0);
            }
            self.forward.process(&mut buf);
            frames.push(buf[..n_bins].to_vec());
        }
        Ok(Spectrogram {
            frames,
            n_fft: self.n_fft,
            hop: self.hop,
            window: WindowKind::Hann,
        })
    }

    /// Weighted overlap-add inverse: each frame is inverse transformed,
    /// windowed again and summed, then divided by Σw². This recovers the
    /// signal exactly from an unmodified STFT wherever the window sum is
    /// nonzero; samples where it vanishes are set to zero.
    pub fn inverse(&self, spec: &Spectrogram) -> Result<Vec<f64>> {
        let n_bins = self.n_fft / 2 + 1;
        if spec.n_fft != self.n_fft || spec.frames.iter().any(|f| f.len() != n_bins) {
            return Err(Error::InvalidArgument(
                "spectrogram does not match the STFT plan".into(),
            ));
        }
        let len = self.signal_len(spec.n_frames());
        let mut out = vec![0.0; len];
        let mut norm = vec![0.0; len];
        let mut buf = vec![C64::new(0.0, 0.0); self.n_fft];
        let scale = 1.0 / self.n_fft as f64;
        for (t, frame) in spec.frames.iter().enumerate() {
            buf[..n_bins].copy_from_slice(frame);
            // Hermitian completion; DC and Nyquist must be real
            buf[0].im = 0.0;
            buf[n_bins - 1].im = 0.0;
            for k in 1..n_bins - 1 {
                buf[self.n_fft - k] = frame[k].conj();
            }
            self.inverse.process(&mut buf);
            let start = t * self.hop;
            for i in 0..self.n_fft {
                let w = self.window[i];
                out[start + i] += buf[i].re * scale * w;
                norm[start + i] += w * w;
            }
        }
        for (x, n) in out.iter_mut().zip(&norm) {
            *x = if *n > 1e-8 { *x / n } else { 0.0 };
        }
        Ok(out)
    }
}

/// Hann-windowed STFT; frame count `⌊(len − n_fft)/hop⌋ + 1`.
pub fn stft(wave: &Waveform, n_fft: usize, hop: usize) -> Result<Spectrogram> {
    StftPlan::new(n_fft, hop)?.forward(&wave.samples)
}

/// Overlap-add inverse of [`stft`].
pub fn istft(spec: &Spectrogram, sample_rate: u32) -> Result<Waveform> {
    let samples = StftPlan::new(spec.n_fft, spec.hop)?.inverse(spec)?;
    Ok(Waveform {
        samples,
        sample_rate,
    })
}
