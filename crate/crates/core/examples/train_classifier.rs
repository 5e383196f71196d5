//! Trains the baseline classifier on the synthetic corpus, prints the
//! learning curve and checks that a saved checkpoint predicts identically.

use std::time::Instant;

use qasc::audio::AudioConfig;
use qasc::experiment::{synthetic_corpus, Split, SyntheticSpec};
use qasc::qit::{EncodingMode, PoolingMode, QitConfig, QitModel};
use qasc::train::{evaluate, stratified_split, train_model, LabeledClip, TrainConfig};

fn main() -> qasc::Result<()> {
    let start = Instant::now();
    let corpus = synthetic_corpus(&SyntheticSpec::default())?;
    let extractor = AudioConfig::default().extractor(32)?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for clip in &corpus.clips {
        let item = LabeledClip {
            patches: extractor.patches(&clip.wave)?,
            label: clip.label,
        };
        match clip.split {
            Split::Train => train.push(item),
            Split::Test => test.push(item),
        }
    }
    let labels: Vec<usize> = train.iter().map(|c| c.label).collect();
    let (fit_idx, val_idx) = stratified_split(&labels, 0.2, 1);
    let fit: Vec<_> = fit_idx.iter().map(|&i| train[i].clone()).collect();
    let val: Vec<_> = val_idx.iter().map(|&i| train[i].clone()).collect();

    let config = QitConfig {
        n_qubits: 4,
        n_layers: 3,
        encoding: EncodingMode::Amplitude,
        pooling: PoolingMode::Max,
        n_classes: corpus.class_names.len(),
        patch_size: 32,
    };
    let mut model = QitModel::new(config, 42)?;
    model.projection.fit_input_normalization(
        fit.iter()
            .flat_map(|c| c.patches.iter().map(|p| p.values.as_slice())),
    )?;
    let before = evaluate(&model, &test)?;
    let train_config = TrainConfig {
        learning_rate: 0.01,
        ..TrainConfig::default()
    };
    let (model, history) = train_model(&fit, &val, model, &train_config, None)?;
    for r in &history.records {
        println!(
            "epoch {:>2}  loss {:.4}  val {:.3}  lr {}",
            r.epoch, r.train_loss, r.val_accuracy, r.lr
        );
    }
    let after = evaluate(&model, &test)?;
    println!(
        "test accuracy {:.3} -> {:.3} (best epoch {})",
        before.accuracy, after.accuracy, history.best_epoch
    );
    println!(
        "macro F1 {:.3}, {:.1}s",
        after.macro_f1,
        start.elapsed().as_secs_f64()
    );
    let path = std::env::temp_dir().join("qasc_example_model.qasc");
    model.save(&path)?;
    let reloaded = QitModel::load(&path)?;
    println!(
        "reloaded checkpoint accuracy {:.3}",
        evaluate(&reloaded, &test)?.accuracy
    );
    std::fs::remove_file(&path)?;
    Ok(())
}
