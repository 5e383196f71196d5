//! Generated stand-in corpus: each class has a signature pair of tones and a
//! characteristic colour of background noise, with per-clip jitter.

use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::manifest::{DatasetManifest, ManifestEntry, Split};
use crate::audio::{write_wav, Waveform};
use crate::error::{Error, Result};
use crate::seed::derive_seed_path;

const BASE_FREQS: [f64; 5] = [320.0, 760.0, 1480.0, 2600.0, 4100.0];
const NOISE_POLES: [f64; 5] = [0.95, 0.6, 0.0, -0.6, 0.85];
const CLASS_NAMES: [&str; 5] = ["beach", "bus", "cafe", "park", "tram"];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub clips_per_class: usize,
    pub test_per_class: usize,
    pub duration_secs: f64,
    pub sample_rate: u32,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_classes: 3,
            clips_per_class: 40,
            test_per_class: 15,
            duration_secs: 2.0,
            sample_rate: 16_000,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticClip {
    pub name: String,
    pub wave: Waveform,
    pub label: usize,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    pub class_names: Vec<String>,
    pub clips: Vec<SyntheticClip>,
}

fn render(class: usize, spec: &SyntheticSpec, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = spec.sample_rate as f64;
    let n = (spec.duration_secs * sr).round() as usize;
    let f0 = BASE_FREQS[class] * (1.0 + rng.random_range(-0.03..0.03));
    let f1 = 1.5 * f0 * (1.0 + rng.random_range(-0.02..0.02));
    let a0 = rng.random_range(0.15..0.35);
    let a1 = a0 * rng.random_range(0.3..0.8);
    let (p0, p1) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
    let mod_rate = rng.random_range(0.3..2.0);
    let mod_phase = rng.random_range(0.0..TAU);
    let noise_gain = rng.random_range(0.03..0.08);
    let pole = NOISE_POLES[class];
    let norm = (1.0 - pole * pole).sqrt();
    let mut state = 0.0;
    (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            let envelope = 0.75 + 0.25 * (TAU * mod_rate * t + mod_phase).sin();
            let tones = a0 * (TAU * f0 * t + p0).sin() + a1 * (TAU * f1 * t + p1).sin();
            let white: f64 = rng.sample(StandardNormal);
            state = pole * state + norm * white;
            envelope * tones + noise_gain * state
        })
        .collect()
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let spec = self;
        if spec.n_classes < 2 || spec.n_classes > BASE_FREQS.len() {
            return Err(Error::InvalidConfig(format!(
                "synthetic corpus supports 2 to 5 classes, got {}",
                spec.n_classes
            )));
        }
        if spec.test_per_class >= spec.clips_per_class {
            return Err(Error::InvalidConfig(
                "test_per_class must be below clips_per_class".into(),
            ));
        }
        if spec.duration_secs <= 0.0 || spec.sample_rate == 0 {
            return Err(Error::InvalidConfig(
                "synthetic clips need a positive duration and sample rate".into(),
            ));
        }
        Ok(())
    }
}

/// Builds the corpus in memory. The first `clips_per_class − test_per_class`
/// clips of each class form the training split, the rest the test split.
pub fn synthetic_corpus(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let n_train = spec.clips_per_class - spec.test_per_class;
    let mut clips = Vec::with_capacity(spec.n_classes * spec.clips_per_class);
    for class in 0..spec.n_classes {
        for k in 0..spec.clips_per_class {
            let samples = render(
                class,
                spec,
                derive_seed_path(spec.seed, &[class as u64, k as u64]),
            );
            clips.push(SyntheticClip {
                name: format!("{}_{k:03}", CLASS_NAMES[class]),
                wave: Waveform::new(samples, spec.sample_rate)?,
                label: class,
                split: if k < n_train {
                    Split::Train
                } else {
                    Split::Test
                },
            });
        }
    }
    Ok(SyntheticCorpus {
        class_names: CLASS_NAMES[..spec.n_classes]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        clips,
    })
}

impl SyntheticCorpus {
    /// Writes `audio/<name>.wav` for every clip plus a tab-separated
    /// `meta.txt` manifest, and returns the manifest.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<DatasetManifest> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir.join("audio"))?;
        let mut entries = Vec::with_capacity(self.clips.len());
        for clip in &self.clips {
            let rel = format!("audio/{}.wav", clip.name);
            write_wav(dir.join(&rel), &clip.wave)?;
            entries.push(ManifestEntry {
                path: rel.into(),
                class_name: self.class_names[clip.label].clone(),
                split: clip.split,
            });
        }
        let manifest = DatasetManifest::from_entries(entries)?;
        manifest.save(dir.join("meta.txt"))?;
        Ok(manifest)
    }
}
