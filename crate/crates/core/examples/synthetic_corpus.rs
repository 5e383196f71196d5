//! Writes the bundled synthetic corpus to disk as WAV files plus a manifest,
//! so it can be fed back through the manifest path of the CLI:
//!
//! ```text
//! cargo run --example synthetic_corpus -- data/synth
//! qasc ingest data/synth/labels.tsv
//! ```

use std::path::PathBuf;

use qasc::audio::write_wav;
use qasc::experiment::{synthetic_corpus, DatasetManifest, ManifestEntry, SyntheticSpec};

fn main() -> qasc::Result<()> {
    let root = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "data/synth".into()),
    );
    let corpus = synthetic_corpus(&SyntheticSpec::default())?;
    let mut entries = Vec::new();
    for clip in &corpus.clips {
        let class_name = corpus.class_names[clip.label].clone();
        let rel = PathBuf::from(&class_name).join(format!("{}.wav", clip.name));
        std::fs::create_dir_all(root.join(&class_name))?;
        write_wav(root.join(&rel), &clip.wave)?;
        entries.push(ManifestEntry {
            path: rel,
            class_name,
            split: clip.split,
        });
    }
    let manifest = DatasetManifest::from_entries(entries)?;
    manifest.save(root.join("labels.tsv"))?;
    println!(
        "wrote {} clips in {} classes to {}",
        manifest.entries.len(),
        manifest.n_classes(),
        root.display()
    );
    Ok(())
}
