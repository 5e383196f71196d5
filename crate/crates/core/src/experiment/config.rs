//! TOML experiment configuration. Unknown keys anywhere are errors.
//!
//! ```toml
//! name = "baseline"
//! seed = 7
//!
//! [model]
//! n_qubits = 4
//! n_layers = 3
//! encoding = "amplitude"   # or "angle"
//! pooling = "max"          # or "mean"
//! use_qvae = false
//! patch_size = 32
//! # n_classes = 3          # defaults to the dataset's class count
//!
//! [audio]
//! sample_rate = 16000
//! n_fft = 512
//! hop = 256
//!
//! [train]
//! learning_rate = 0.01
//! max_epochs = 50
//!
//! [sweep]
//! snr_list = [5.0, 10.0, 15.0, 20.0, "clean"]
//! fraction_list = [1.0]
//!
//! [paths]
//! # dataset_dir and labels_file select a manifest; without them the
//! # built-in synthetic corpus is used
//! output_dir = "out"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use super::synth::SyntheticSpec;
use crate::audio::{AudioConfig, CLEAN};
use crate::error::{Error, Result};
use crate::qit::{EncodingMode, PoolingMode, QitConfig};
use crate::qvae::QvaeConfig;
use crate::train::TrainConfig;

/// An SNR level in dB, or clean audio. Written as a number or `"clean"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Snr(pub f64);

impl Snr {
    pub const CLEAN: Snr = Snr(CLEAN);

    pub fn is_clean(self) -> bool {
        self.0 == CLEAN
    }

    /// Fixed six-decimal text, or `clean`.
    pub fn label(self) -> String {
        if self.is_clean() {
            "clean".into()
        } else {
            format!("{:.6}", self.0)
        }
    }
}

impl Serialize for Snr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_clean() {
            s.serialize_str("clean")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Snr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct SnrVisitor;
        impl Visitor<'_> for SnrVisitor {
            type Value = Snr;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an SNR in dB or \"clean\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Snr, E> {
                Ok(Snr(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Snr, E> {
                Ok(Snr(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Snr, E> {
                Ok(Snr(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Snr, E> {
                match v {
                    "clean" => Ok(Snr::CLEAN),
                    other => Err(E::custom(format!("unknown SNR {other:?}"))),
                }
            }
        }
        d.deserialize_any(SnrVisitor)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub n_qubits: usize,
    pub n_layers: usize,
    pub encoding: EncodingMode,
    pub pooling: PoolingMode,
    pub use_qvae: bool,
    pub patch_size: usize,
    /// Taken from the dataset when absent.
    pub n_classes: Option<usize>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            n_qubits: 4,
            n_layers: 3,
            encoding: EncodingMode::Amplitude,
            pooling: PoolingMode::Max,
            use_qvae: false,
            patch_size: 32,
            n_classes: None,
        }
    }
}

impl ModelSection {
    pub fn qit_config(&self, dataset_classes: usize) -> Result<QitConfig> {
        let n_classes = self.n_classes.unwrap_or(dataset_classes);
        if n_classes < dataset_classes {
            return Err(Error::InvalidConfig(format!(
                "model has {n_classes} classes but the dataset has {dataset_classes}"
            )));
        }
        let c = QitConfig {
            n_qubits: self.n_qubits,
            n_layers: self.n_layers,
            encoding: self.encoding,
            pooling: self.pooling,
            n_classes,
            patch_size: self.patch_size,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub snr_list: Vec<Snr>,
    pub fraction_list: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            snr_list: vec![Snr::CLEAN],
            fraction_list: vec![1.0],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsSection {
    pub dataset_dir: Option<PathBuf>,
    /// Manifest path, relative to `dataset_dir` unless absolute.
    pub labels_file: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSection {
    pub n_classes: usize,
    pub clips_per_class: usize,
    pub test_per_class: usize,
    pub duration_secs: f64,
    pub seed: u64,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        let s = SyntheticSpec::default();
        Self {
            n_classes: s.n_classes,
            clips_per_class: s.clips_per_class,
            test_per_class: s.test_per_class,
            duration_secs: s.duration_secs,
            seed: s.seed,
        }
    }
}

impl SyntheticSection {
    pub fn spec(&self, sample_rate: u32) -> SyntheticSpec {
        SyntheticSpec {
            n_classes: self.n_classes,
            clips_per_class: self.clips_per_class,
            test_per_class: self.test_per_class,
            duration_secs: self.duration_secs,
            sample_rate,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Write measured wall-clock seconds into results.csv. Off by default so
    /// that repeated sweeps produce identical files; timings always go to
    /// timings.csv.
    pub record_wall_clock: bool,
    /// Run grid cells concurrently.
    pub parallel_cells: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub audio: AudioConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub qvae: QvaeConfig,
    #[serde(default)]
    pub synthetic: SyntheticSection,
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_name() -> String {
    "baseline".into()
}

/// Names accepted by [`ExperimentConfig::preset`].
pub const PRESETS: [&str; 6] = [
    "baseline",
    "qvae",
    "six_qubits",
    "five_layers",
    "angle",
    "avg_pool",
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset("baseline").expect("baseline preset exists")
    }
}

impl ExperimentConfig {
    /// Model variants on the built-in corpus: the 4-qubit, 3-layer,
    /// amplitude-encoded, max-pooled baseline and its single-change
    /// variants. Presets train with learning rate 0.01 because the desk
    /// corpus gives only a handful of optimizer steps per epoch.
    pub fn preset(name: &str) -> Result<Self> {
        let mut model = ModelSection::default();
        match name {
            "baseline" => {}
            "qvae" => model.use_qvae = true,
            "six_qubits" => model.n_qubits = 6,
            "five_layers" => model.n_layers = 5,
            "angle" => model.encoding = EncodingMode::Angle,
            "avg_pool" => model.pooling = PoolingMode::Mean,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown preset {other:?}; known: {PRESETS:?}"
                )))
            }
        }
        Ok(Self {
            name: name.into(),
            seed: 7,
            model,
            audio: AudioConfig::default(),
            train: TrainConfig {
                learning_rate: 0.01,
                ..TrainConfig::default()
            },
            sweep: SweepSection::default(),
            qvae: QvaeConfig::default(),
            synthetic: SyntheticSection::default(),
            paths: PathsSection::default(),
            output: OutputSection::default(),
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)?;
        // relative dataset paths are taken from the config file's directory
        if let (Some(dir), Some(base)) = (cfg.paths.dataset_dir.as_mut(), path.parent()) {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.qvae.validate()?;
        if self.audio.sample_rate == 0 || self.audio.hop == 0 || self.audio.hop > self.audio.n_fft {
            return Err(Error::InvalidConfig(
                "audio needs sample_rate > 0 and 0 < hop ≤ n_fft".into(),
            ));
        }
        if !self.audio.n_fft.is_power_of_two() {
            return Err(Error::InvalidConfig("n_fft must be a power of two".into()));
        }
        if self.sweep.snr_list.is_empty() || self.sweep.fraction_list.is_empty() {
            return Err(Error::InvalidConfig("sweep lists must not be empty".into()));
        }
        if self
            .sweep
            .snr_list
            .iter()
            .any(|s| s.0.is_nan() || s.0 == f64::NEG_INFINITY)
        {
            return Err(Error::InvalidConfig(
                "SNR values must be finite or \"clean\"".into(),
            ));
        }
        if self
            .sweep
            .fraction_list
            .iter()
            .any(|f| !(*f > 0.0 && *f <= 1.0))
        {
            return Err(Error::InvalidConfig("fractions must lie in (0, 1]".into()));
        }
        if self.paths.labels_file.is_none() {
            self.synthetic.spec(self.audio.sample_rate).validate()?;
        }
        // the model block must be buildable for at least its own class count
        let probe = self.model.n_classes.unwrap_or(1);
        self.model.qit_config(probe)?;
        Ok(())
    }

    /// Manifest location, when a real dataset is configured.
    pub fn manifest_path(&self) -> Option<PathBuf> {
        let labels = self.paths.labels_file.as_ref()?;
        Some(match &self.paths.dataset_dir {
            Some(dir) if labels.is_relative() => dir.join(labels),
            _ => labels.clone(),
        })
    }

    pub fn output_dir(&self) -> PathBuf {
        self.paths
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}
