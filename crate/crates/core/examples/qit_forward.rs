//! One forward pass of the classifier with its intermediate quantities:
//! fidelity attention per layer, readout distributions, pooled features.

use qasc::audio::AudioConfig;
use qasc::experiment::{synthetic_corpus, SyntheticSpec};
use qasc::qit::{forward, EncodingMode, PoolingMode, QitConfig, QitModel};

fn main() -> qasc::Result<()> {
    let corpus = synthetic_corpus(&SyntheticSpec::default())?;
    let patches = AudioConfig::default()
        .extractor(32)?
        .patches(&corpus.clips[0].wave)?;
    let config = QitConfig {
        n_qubits: 4,
        n_layers: 2,
        encoding: EncodingMode::Amplitude,
        pooling: PoolingMode::Max,
        n_classes: corpus.class_names.len(),
        patch_size: 32,
    };
    let model = QitModel::new(config, 1)?;
    println!("{} parameters, {} patches", model.n_params(), patches.len());

    let out = forward(&patches, &model)?;
    for (l, layer) in out.trace.layers.iter().enumerate() {
        println!("layer {l} attention:");
        for i in 0..layer.attention.n {
            let row: Vec<String> = layer
                .attention
                .row(i)
                .iter()
                .map(|v| format!("{v:.3}"))
                .collect();
            println!("  [{}]", row.join(" "));
        }
    }
    for (i, d) in out.trace.distributions.iter().enumerate() {
        println!("patch {i} readout {:?}", &d.probs[..config.n_classes]);
    }
    println!("pooled {:?}", out.trace.pooled.z);
    println!("class probabilities {:?} -> {}", out.probs, out.label);
    Ok(())
}
