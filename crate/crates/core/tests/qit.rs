//! Classifier-level properties: fidelity attention, gradients against finite
//! differences, symmetry of the forward pass and checkpoint round trips.

use proptest::prelude::*;
use qasc::audio::MelPatch;
use qasc::qit::{
    attention_scores, clip_loss, forward, model_gradient, EncodingMode, PoolingMode, QitConfig,
    QitModel,
};
use qasc::qsim::{swap_test_estimate, QuantumState, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn oracle_fidelity(a: &QuantumState, b: &QuantumState) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
        acc += x.conj() * y;
    }
    acc.norm_sqr()
}

fn random_patches(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<MelPatch> {
    (0..n)
        .map(|_| {
            MelPatch::new(p, (0..p * p).map(|_| rng.random_range(-8.0..2.0)).collect()).unwrap()
        })
        .collect()
}

fn config(n_qubits: usize, encoding: EncodingMode, pooling: PoolingMode) -> QitConfig {
    QitConfig {
        n_qubits,
        n_layers: 2,
        encoding,
        pooling,
        n_classes: 3,
        patch_size: 4,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn attention_is_a_symmetric_fidelity_matrix(seed in any::<u64>(), n in 1usize..7, q in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states: Vec<_> = (0..n).map(|_| QuantumState::random(q, &mut rng)).collect();
        let a = attention_scores(&states).unwrap();
        for i in 0..n {
            prop_assert_eq!(a.get(i, i), 1.0);
            for j in 0..n {
                prop_assert_eq!(a.get(i, j), a.get(j, i));
                prop_assert!((0.0..=1.0).contains(&a.get(i, j)));
                if i != j {
                    prop_assert!((a.get(i, j) - oracle_fidelity(&states[i], &states[j])).abs() < 1e-12);
                }
            }
        }
        for i in 0..n {
            let row: f64 = a.row_normalized()[i * n..(i + 1) * n].iter().sum();
            prop_assert!((row - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn classifier_ignores_patch_order(seed in any::<u64>(), max_pool in any::<bool>()) {
        let pooling = if max_pool { PoolingMode::Max } else { PoolingMode::Mean };
        let model = QitModel::new(config(3, EncodingMode::Amplitude, pooling), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let patches = random_patches(&mut rng, 4, 4);
        let mut reversed = patches.clone();
        reversed.reverse();
        let a = forward(&patches, &model).unwrap().probs;
        let b = forward(&reversed, &model).unwrap().probs;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn swap_test_estimate_converges_to_fidelity() {
    let a = QuantumState::random_seeded(3, 1);
    let b = QuantumState::random_seeded(3, 2);
    let f = oracle_fidelity(&a, &b);
    let shots = 200_000;
    let est = swap_test_estimate(&a, &b, shots, 3).unwrap();
    // the estimate is 2·p̂ − 1, so its standard deviation is 2·sqrt(p(1−p)/shots)
    let p = 0.5 * (1.0 + f);
    let sd = 2.0 * (p * (1.0 - p) / shots as f64).sqrt();
    assert!((est - f).abs() < 5.0 * sd, "estimate {est} vs fidelity {f}");
}

#[test]
fn gradients_match_central_differences_in_every_mode() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (k, (encoding, pooling)) in [
        (EncodingMode::Amplitude, PoolingMode::Max),
        (EncodingMode::Amplitude, PoolingMode::Mean),
        (EncodingMode::Angle, PoolingMode::Max),
        (EncodingMode::Angle, PoolingMode::Mean),
    ]
    .into_iter()
    .enumerate()
    {
        let model = QitModel::new(config(2 + k % 2, encoding, pooling), k as u64).unwrap();
        let patches = random_patches(&mut rng, 3, 4);
        let label = k % 3;
        let g = model_gradient(&patches, label, &model)
            .unwrap()
            .gradient
            .to_flat();
        let flat = model.params_flat();
        let mut m = model.clone();
        let h = 1e-5;
        for (i, gi) in g.iter().enumerate() {
            let mut p = flat.clone();
            p[i] += h;
            m.set_params_flat(&p).unwrap();
            let up = clip_loss(&patches, label, &m).unwrap();
            p[i] -= 2.0 * h;
            m.set_params_flat(&p).unwrap();
            let down = clip_loss(&patches, label, &m).unwrap();
            let fd = (up - down) / (2.0 * h);
            let scale = gi.abs().max(fd.abs()).max(1e-6);
            assert!(
                (gi - fd).abs() / scale < 1e-4,
                "{encoding:?}/{pooling:?} param {i}: {gi} vs {fd}"
            );
        }
    }
}

#[test]
fn checkpoint_round_trip_reproduces_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let mut model = QitModel::new(config(4, EncodingMode::Angle, PoolingMode::Max), 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let patches = random_patches(&mut rng, 5, 4);
    model
        .projection
        .fit_input_normalization(patches.iter().map(|p| p.values.as_slice()))
        .unwrap();
    let path = dir.path().join("m.qasc");
    model.save(&path).unwrap();
    let back = QitModel::load(&path).unwrap();
    assert_eq!(back.params_flat(), model.params_flat());
    assert_eq!(
        forward(&patches, &back).unwrap().probs,
        forward(&patches, &model).unwrap().probs
    );
}

#[test]
fn mismatched_patch_size_is_rejected() {
    let model = QitModel::new(config(2, EncodingMode::Amplitude, PoolingMode::Mean), 1).unwrap();
    let wrong = vec![MelPatch::filled(5, 0.0)];
    assert!(forward(&wrong, &model).is_err());
    assert!(forward(&[], &model).is_err());
}
