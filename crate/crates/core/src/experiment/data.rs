use std::borrow::Cow;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{ExperimentConfig, Snr};
use super::manifest::{ingest, Split};
use super::synth::synthetic_corpus;
use crate::audio::{add_noise_at_snr, load_wav, FeatureExtractor, MelPatch, Waveform};
use crate::error::{Error, Result};
use crate::seed::derive_seed_path;
use crate::tensorio::{Tensor, TensorFile, MAGIC_QASC};
use crate::train::{stratified_split, LabeledClip};

/// Stream ids for [`derive_seed_path`].
pub(crate) const STREAM_HOLDOUT: u64 = 0xA0;
pub(crate) const STREAM_NOISE: u64 = 0xA1;

#[derive(Clone, Debug, PartialEq)]
pub enum AudioSource {
    Memory(Waveform),
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClipSource {
    pub name: String,
    pub label: usize,
    pub split: Split,
    pub audio: AudioSource,
}

impl ClipSource {
    pub fn waveform(&self, sample_rate: u32) -> Result<Cow<'_, Waveform>> {
        match &self.audio {
            AudioSource::Memory(w) if w.sample_rate == sample_rate => Ok(Cow::Borrowed(w)),
            AudioSource::Memory(w) => Ok(Cow::Owned(w.clone().resampled(sample_rate))),
            AudioSource::File(p) => Ok(Cow::Owned(load_wav(p, sample_rate)?)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub class_names: Vec<String>,
    pub clips: Vec<ClipSource>,
}

impl Dataset {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.clips.len())
            .filter(|&i| self.clips[i].split == split)
            .collect()
    }
}

/// Loads the configured dataset: the manifest if one is set, otherwise the
/// built-in synthetic corpus. When a manifest has no test entries, a
/// stratified 20% of its clips is held out as the test split.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let mut ds = match cfg.manifest_path() {
        None => {
            let corpus = synthetic_corpus(&cfg.synthetic.spec(cfg.audio.sample_rate))?;
            Dataset {
                class_names: corpus.class_names,
                clips: corpus
                    .clips
                    .into_iter()
                    .map(|c| ClipSource {
                        name: c.name,
                        label: c.label,
                        split: c.split,
                        audio: AudioSource::Memory(c.wave),
                    })
                    .collect(),
            }
        }
        Some(path) => {
            let manifest = ingest(&path)?;
            let root = cfg
                .paths
                .dataset_dir
                .clone()
                .or_else(|| path.parent().map(Path::to_path_buf))
                .unwrap_or_default();
            manifest.check_paths(&root)?;
            let labels = manifest.labels();
            Dataset {
                class_names: manifest.class_names.clone(),
                clips: manifest
                    .entries
                    .iter()
                    .zip(labels)
                    .map(|(e, label)| ClipSource {
                        name: e
                            .path
                            .with_extension("")
                            .to_string_lossy()
                            .replace(['/', '\\'], "_"),
                        label,
                        split: e.split,
                        audio: AudioSource::File(root.join(&e.path)),
                    })
                    .collect(),
            }
        }
    };
    if ds.clips.is_empty() {
        return Err(Error::InvalidTrainingSet("dataset has no clips".into()));
    }
    if ds.indices(Split::Test).is_empty() {
        let labels: Vec<usize> = ds.clips.iter().map(|c| c.label).collect();
        let (_, held) =
            stratified_split(&labels, 0.2, derive_seed_path(cfg.seed, &[STREAM_HOLDOUT]));
        for i in held {
            ds.clips[i].split = Split::Test;
        }
    }
    Ok(ds)
}

/// Noise seed of one clip. It does not depend on the SNR or grid cell, so
/// every SNR level scales the same noise realization.
pub fn noise_seed(global_seed: u64, clip_index: usize) -> u64 {
    derive_seed_path(global_seed, &[STREAM_NOISE, clip_index as u64])
}

/// Patch sequence of one clip after optional noise injection.
pub fn featurize_clip(
    clip: &ClipSource,
    extractor: &FeatureExtractor,
    sample_rate: u32,
    snr: Snr,
    noise_seed: u64,
) -> Result<LabeledClip> {
    let wave = clip.waveform(sample_rate)?;
    let noisy = if snr.is_clean() {
        wave
    } else {
        Cow::Owned(add_noise_at_snr(&wave, snr.0, noise_seed)?)
    };
    Ok(LabeledClip {
        patches: extractor.patches(&noisy)?,
        label: clip.label,
    })
}

/// Featurizes the given clips in parallel, preserving order.
pub fn featurize_indices(
    ds: &Dataset,
    indices: &[usize],
    cfg: &ExperimentConfig,
    snr: Snr,
) -> Result<Vec<LabeledClip>> {
    let extractor = cfg.audio.extractor(cfg.model.patch_size)?;
    indices
        .par_iter()
        .map(|&i| {
            featurize_clip(
                &ds.clips[i],
                &extractor,
                cfg.audio.sample_rate,
                snr,
                noise_seed(cfg.seed, i),
            )
            .map_err(|e| Error::InvalidArgument(format!("clip {}: {e}", ds.clips[i].name)))
        })
        .collect()
}

/// Feature cache file of one clip: config words `[0, 0, 0, 0, label, p]`
/// and one `N × p × p` tensor.
pub fn save_features(path: impl AsRef<Path>, clip: &LabeledClip) -> Result<()> {
    let p = clip.patches.first().map_or(0, |x| x.p);
    TensorFile {
        magic: MAGIC_QASC,
        config: [0, 0, 0, 0, clip.label as u32, p as u32],
        tensors: vec![Tensor {
            dims: vec![clip.patches.len(), p, p],
            data: clip
                .patches
                .iter()
                .flat_map(|x| x.values.iter().copied())
                .collect(),
        }],
    }
    .save(path)
}

pub fn load_features(path: impl AsRef<Path>) -> Result<LabeledClip> {
    let file = TensorFile::load(path)?;
    file.expect_magic(MAGIC_QASC)?;
    if file.config[..4] != [0, 0, 0, 0] || file.tensors.len() != 1 {
        return Err(Error::Format("not a feature cache file".into()));
    }
    let p = file.config[5] as usize;
    let t = &file.tensors[0];
    if t.dims.len() != 3 || t.dims[1] != p || t.dims[2] != p {
        return Err(Error::Format(format!(
            "feature tensor {:?} does not hold {p}×{p} patches",
            t.dims
        )));
    }
    let patches = t
        .data
        .chunks(p * p)
        .map(|v| MelPatch::new(p, v.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledClip {
        patches,
        label: file.config[4] as usize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.synthetic.clips_per_class = 4;
        cfg.synthetic.test_per_class = 1;
        cfg
    }

    #[test]
    fn synthetic_dataset_and_features() {
        let cfg = small_config();
        let ds = load_dataset(&cfg).unwrap();
        assert_eq!(ds.n_classes(), 3);
        assert_eq!(ds.indices(Split::Test).len(), 3);
        let clips = featurize_indices(&ds, &[0, 5], &cfg, Snr(10.0)).unwrap();
        assert_eq!(clips[0].patches.len(), 3);
        assert_eq!(clips[1].label, ds.clips[5].label);
        let again = featurize_indices(&ds, &[0, 5], &cfg, Snr(10.0)).unwrap();
        assert_eq!(clips, again);
        let clean = featurize_indices(&ds, &[0], &cfg, Snr::CLEAN).unwrap();
        assert_ne!(clean[0], clips[0]);
    }

    #[test]
    fn feature_cache_round_trip() {
        let cfg = small_config();
        let ds = load_dataset(&cfg).unwrap();
        let clip = featurize_indices(&ds, &[2], &cfg, Snr::CLEAN)
            .unwrap()
            .remove(0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip.qasc");
        save_features(&path, &clip).unwrap();
        assert_eq!(load_features(&path).unwrap(), clip);
        let model = crate::qit::QitModel::new(cfg.model.qit_config(3).unwrap(), 0).unwrap();
        model.save(dir.path().join("m.qasc")).unwrap();
        assert!(load_features(dir.path().join("m.qasc")).is_err());
    }

    #[test]
    fn manifest_without_test_split_gets_a_holdout() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = synthetic_corpus(&small_config().synthetic.spec(16_000)).unwrap();
        corpus.write_to(dir.path()).unwrap();
        let meta = std::fs::read_to_string(dir.path().join("meta.txt")).unwrap();
        let stripped: String = meta
            .lines()
            .map(|l| l.rsplit_once('\t').unwrap().0.to_string() + "\n")
            .collect();
        std::fs::write(dir.path().join("plain.txt"), stripped).unwrap();
        let mut cfg = small_config();
        cfg.paths.dataset_dir = Some(dir.path().to_path_buf());
        cfg.paths.labels_file = Some("plain.txt".into());
        let ds = load_dataset(&cfg).unwrap();
        assert_eq!(ds.clips.len(), 12);
        assert_eq!(ds.indices(Split::Test).len(), 3);
        let w = ds.clips[0].waveform(16_000).unwrap();
        assert_eq!(w.samples.len(), 32_000);
    }
}
