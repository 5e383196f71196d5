/// Probabilities below this are clamped before the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|u| (u - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// −log(max(ŷ_label, 1e-12))
pub fn cross_entropy(probs: &[f64], label: usize) -> f64 {
    -probs[label].max(PROB_FLOOR).ln()
}

/// ∂CE/∂logits for a softmax head: ŷ − onehot(label). Zero when the clamp is
/// active, since the clamped loss is locally constant.
pub fn cross_entropy_logit_grad(probs: &[f64], label: usize) -> Vec<f64> {
    if probs[label] < PROB_FLOOR {
        return vec![0.0; probs.len()];
    }
    probs
        .iter()
        .enumerate()
        .map(|(j, p)| if j == label { p - 1.0 } else { *p })
        .collect()
}
