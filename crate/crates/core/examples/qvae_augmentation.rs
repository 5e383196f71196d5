//! Trains a QVAE on one class of the synthetic corpus, generates new clips,
//! and writes them as WAV files next to a real example.
//!
//! Usage: `cargo run --release --example qvae_augmentation [out_dir]`

use std::path::PathBuf;

use qasc::audio::{write_wav, AudioConfig};
use qasc::experiment::{synthetic_corpus, Split, SyntheticSpec};
use qasc::qvae::{generate_augmented, train_qvae, QvaeConfig};

fn main() -> qasc::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/qvae".into()));
    std::fs::create_dir_all(&out)?;
    let corpus = synthetic_corpus(&SyntheticSpec::default())?;
    let audio = AudioConfig::default();
    let extractor = audio.extractor(32)?;
    let class = 1;
    let clips: Vec<_> = corpus
        .clips
        .iter()
        .filter(|c| c.label == class && c.split == Split::Train)
        .take(4)
        .collect();
    let mut patches = Vec::new();
    for clip in &clips {
        patches.extend(extractor.patches(&clip.wave)?);
    }
    let config = QvaeConfig {
        epochs: 60,
        ..QvaeConfig::default()
    };
    let (model, losses) = train_qvae(&patches, &config, audio, 3)?;
    for (epoch, loss) in losses.iter().enumerate().step_by(10) {
        println!(
            "epoch {:>3}: total {:.4} = reconstruction {:.4} + kl {:.4}",
            epoch + 1,
            loss.total,
            loss.reconstruction,
            loss.kl
        );
    }
    let generated = generate_augmented(4, class, &model, 11)?;
    for (i, item) in generated.items.iter().enumerate() {
        let path = out.join(format!("{}_{i}.wav", corpus.class_names[class]));
        write_wav(&path, &item.wave)?;
        println!(
            "{}: {:.2}s, {:?}",
            path.display(),
            item.wave.duration_secs(),
            item.provenance
        );
    }
    write_wav(out.join("real.wav"), &clips[0].wave)?;
    Ok(())
}
