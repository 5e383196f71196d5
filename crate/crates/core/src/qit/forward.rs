use super::model::{EncodingMode, PoolingMode, QitModel};
use crate::audio::MelPatch;
use crate::error::{Error, Result};
use crate::qsim::{fidelity, measure_probabilities, OutcomeDistribution, QuantumState, C64};
use crate::train::softmax;

/// Pairwise fidelities `A[i][j] = |⟨ψ_i|ψ_j⟩|²`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionMatrix {
    pub n: usize,
    pub values: Vec<f64>,
}

impl AttentionMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Rows scaled to sum to one.
    pub fn row_normalized(&self) -> Vec<f64> {
        let mut w = self.values.clone();
        for i in 0..self.n {
            let s: f64 = self.row(i).iter().sum();
            w[i * self.n..(i + 1) * self.n]
                .iter_mut()
                .for_each(|x| *x /= s);
        }
        w
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PooledFeatures {
    pub z: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub label: usize,
}

/// What the encoder fed into the register for one patch.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedInput {
    /// Projection output before normalization.
    pub projected: Vec<f64>,
    pub projected_norm: f64,
    /// Amplitude mode only: the real unit vector loaded into the register,
    /// or `None` when the projection was numerically zero and |0⟩ was used.
    pub amplitudes: Option<Vec<f64>>,
    /// Embedding circuit angles actually used (θ_e, plus offsets in angle mode).
    pub angles: Vec<f64>,
}

/// Intermediate states of one encoder layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerTrace {
    pub input: Vec<QuantumState>,
    pub attention: AttentionMatrix,
    /// Row-normalized attention weights.
    pub weights: Vec<f64>,
    /// U_a|ψ_j⟩
    pub transformed: Vec<QuantumState>,
    /// Norm of each weighted sum before renormalization.
    pub mixed_norms: Vec<f64>,
    /// |ψ′_i⟩
    pub attended: Vec<QuantumState>,
    /// Norm of U_f|ψ′_i⟩ before the per-layer renormalization.
    pub output_norms: Vec<f64>,
    /// |ψ″_i⟩
    pub output: Vec<QuantumState>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    pub inputs: Vec<EncodedInput>,
    pub embedded: Vec<QuantumState>,
    pub layers: Vec<LayerTrace>,
    pub distributions: Vec<OutcomeDistribution>,
    pub pooled: PooledFeatures,
    /// Max pooling only: the patch that supplied each feature.
    pub pool_winners: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForwardOutput {
    pub probs: Vec<f64>,
    pub label: usize,
    pub logits: Vec<f64>,
    pub trace: ForwardTrace,
}

pub(crate) fn encode_with_input(
    patch: &MelPatch,
    model: &QitModel,
) -> Result<(QuantumState, EncodedInput)> {
    let cfg = &model.config;
    let projected = model.projection.apply(&patch.values)?;
    let projected_norm = projected.iter().map(|y| y * y).sum::<f64>().sqrt();
    let n = cfg.n_qubits;
    match cfg.encoding {
        EncodingMode::Amplitude => {
            let amplitudes = (projected_norm >= 1e-12).then(|| {
                projected
                    .iter()
                    .map(|y| y / projected_norm)
                    .collect::<Vec<_>>()
            });
            let loaded = match &amplitudes {
                Some(a) => {
                    QuantumState::from_amplitudes(n, a.iter().map(|&x| C64::new(x, 0.0)).collect())?
                }
                None => QuantumState::zero(n),
            };
            let state = model.embed_circuit.run(&model.theta_e, &loaded)?;
            Ok((
                state,
                EncodedInput {
                    projected,
                    projected_norm,
                    amplitudes,
                    angles: model.theta_e.clone(),
                },
            ))
        }
        EncodingMode::Angle => {
            let mut angles = model.theta_e.clone();
            for (a, y) in angles.iter_mut().zip(&projected) {
                *a += y;
            }
            let state = model.embed_circuit.run(&angles, &QuantumState::zero(n))?;
            Ok((
                state,
                EncodedInput {
                    projected,
                    projected_norm,
                    amplitudes: None,
                    angles,
                },
            ))
        }
    }
}

/// Maps one patch to the register state U_e(θ_e)|ψ_in⟩.
pub fn encode_patch(patch: &MelPatch, model: &QitModel) -> Result<QuantumState> {
    if patch.p != model.config.patch_size {
        return Err(Error::Projection(format!(
            "patch size {} does not match model patch size {}",
            patch.p, model.config.patch_size
        )));
    }
    encode_with_input(patch, model).map(|(s, _)| s)
}

/// Fidelity matrix of a token sequence. The diagonal is exactly 1.
pub fn attention_scores(states: &[QuantumState]) -> Result<AttentionMatrix> {
    let n = states.len();
    if n == 0 {
        return Err(Error::EmptySequence("attention needs at least one state"));
    }
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in i + 1..n {
            let f = fidelity(&states[i], &states[j])?;
            values[i * n + j] = f;
            values[j * n + i] = f;
        }
    }
    Ok(AttentionMatrix { n, values })
}

fn mix(weights: &[f64], transformed: &[QuantumState], i: usize) -> Vec<C64> {
    let n = transformed.len();
    let dim = transformed[0].dim();
    let mut u = vec![C64::new(0.0, 0.0); dim];
    for (j, t) in transformed.iter().enumerate() {
        let w = weights[i * n + j];
        for (uk, tk) in u.iter_mut().zip(t.amplitudes()) {
            *uk += tk * w;
        }
    }
    u
}

/// |ψ′_i⟩ ∝ Σ_j (α_ij / Σ_k α_ik) · U_a|ψ_j⟩, renormalized to unit norm.
/// If the weighted sum cancels to zero, U_a|ψ_i⟩ is used.
pub fn attend(
    states: &[QuantumState],
    attention: &AttentionMatrix,
    model: &QitModel,
    layer: usize,
) -> Result<Vec<QuantumState>> {
    let (attended, ..) = attend_traced(states, attention, model, layer)?;
    Ok(attended)
}

type AttendParts = (Vec<QuantumState>, Vec<f64>, Vec<QuantumState>, Vec<f64>);

fn attend_traced(
    states: &[QuantumState],
    attention: &AttentionMatrix,
    model: &QitModel,
    layer: usize,
) -> Result<AttendParts> {
    let n = states.len();
    if attention.n != n {
        return Err(Error::Attention(format!(
            "{n} states but a {}×{} matrix",
            attention.n, attention.n
        )));
    }
    if n == 0 {
        return Err(Error::EmptySequence("attention needs at least one state"));
    }
    let theta = model
        .theta_a
        .get(layer)
        .ok_or_else(|| Error::Attention(format!("no attention parameters for layer {layer}")))?;
    let weights = attention.row_normalized();
    let transformed = states
        .iter()
        .map(|s| model.attn_circuit.run(theta, s))
        .collect::<Result<Vec<_>>>()?;
    let mut attended = Vec::with_capacity(n);
    let mut norms = Vec::with_capacity(n);
    for i in 0..n {
        let u = mix(&weights, &transformed, i);
        let norm = crate::qsim::l2_norm(&u);
        norms.push(norm);
        match QuantumState::normalized(model.config.n_qubits, u)? {
            Some(s) => attended.push(s),
            None => attended.push(transformed[i].clone()),
        }
    }
    Ok((attended, weights, transformed, norms))
}

/// |ψ″⟩ = U_f(θ_f)|ψ′⟩ for encoder layer `layer`.
pub fn feedforward(state: &QuantumState, model: &QitModel, layer: usize) -> Result<QuantumState> {
    let theta = model.theta_f.get(layer).ok_or_else(|| {
        Error::InvalidConfig(format!("no feedforward parameters for layer {layer}"))
    })?;
    model.ffn_circuit.run(theta, state)
}

fn pool_traced(
    distributions: &[OutcomeDistribution],
    model: &QitModel,
) -> Result<(PooledFeatures, Vec<usize>)> {
    let c = model.config.n_classes;
    if distributions.is_empty() {
        return Err(Error::EmptySequence(
            "pooling needs at least one distribution",
        ));
    }
    if let Some(d) = distributions.iter().find(|d| d.len() < c) {
        return Err(Error::InvalidConfig(format!(
            "distribution has {} outcomes, need {c}",
            d.len()
        )));
    }
    let n = distributions.len();
    match model.config.pooling {
        PoolingMode::Mean => {
            let z = (0..c)
                .map(|j| distributions.iter().map(|d| d.probs[j]).sum::<f64>() / n as f64)
                .collect();
            Ok((PooledFeatures { z }, Vec::new()))
        }
        PoolingMode::Max => {
            let mut z = Vec::with_capacity(c);
            let mut winners = Vec::with_capacity(c);
            for j in 0..c {
                // first maximum wins ties
                let mut best = 0;
                for i in 1..n {
                    if distributions[i].probs[j] > distributions[best].probs[j] {
                        best = i;
                    }
                }
                z.push(distributions[best].probs[j]);
                winners.push(best);
            }
            Ok((PooledFeatures { z }, winners))
        }
    }
}

/// Aggregates the first C outcome probabilities of each patch by mean or
/// max over patches.
pub fn pool(distributions: &[OutcomeDistribution], model: &QitModel) -> Result<PooledFeatures> {
    pool_traced(distributions, model).map(|(z, _)| z)
}

/// Softmax over `W z + b`; ties in the argmax go to the lowest class index.
pub fn classify(z: &PooledFeatures, model: &QitModel) -> Result<Classification> {
    let c = model.config.n_classes;
    if z.z.len() != c {
        return Err(Error::InvalidArgument(format!(
            "pooled features have {} entries, need {c}",
            z.z.len()
        )));
    }
    let logits: Vec<f64> = (0..c)
        .map(|j| {
            model.head_b[j]
                + (0..c)
                    .map(|k| model.head_w[j * c + k] * z.z[k])
                    .sum::<f64>()
        })
        .collect();
    let probs = softmax(&logits);
    let label = argmax(&probs);
    Ok(Classification {
        logits,
        probs,
        label,
    })
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Full forward pass over one clip's patch sequence.
pub fn forward(patches: &[MelPatch], model: &QitModel) -> Result<ForwardOutput> {
    if patches.is_empty() {
        return Err(Error::EmptySequence("a clip needs at least one patch"));
    }
    let mut inputs = Vec::with_capacity(patches.len());
    let mut states = Vec::with_capacity(patches.len());
    for patch in patches {
        if patch.p != model.config.patch_size {
            return Err(Error::Projection(format!(
                "patch size {} does not match model patch size {}",
                patch.p, model.config.patch_size
            )));
        }
        let (s, input) = encode_with_input(patch, model)?;
        states.push(s);
        inputs.push(input);
    }
    let embedded = states.clone();

    let mut layers = Vec::with_capacity(model.config.n_layers);
    for layer in 0..model.config.n_layers {
        let attention = attention_scores(&states)?;
        let (attended, weights, transformed, mixed_norms) =
            attend_traced(&states, &attention, model, layer)?;
        let mut output = Vec::with_capacity(attended.len());
        let mut output_norms = Vec::with_capacity(attended.len());
        for s in &attended {
            let mut f = feedforward(s, model, layer)?;
            output_norms.push(f.norm());
            f.renormalize();
            output.push(f);
        }
        let input = std::mem::replace(&mut states, output.clone());
        layers.push(LayerTrace {
            input,
            attention,
            weights,
            transformed,
            mixed_norms,
            attended,
            output_norms,
            output,
        });
    }

    let distributions: Vec<OutcomeDistribution> =
        states.iter().map(measure_probabilities).collect();
    let (pooled, pool_winners) = pool_traced(&distributions, model)?;
    let class = classify(&pooled, model)?;
    Ok(ForwardOutput {
        probs: class.probs,
        label: class.label,
        logits: class.logits,
        trace: ForwardTrace {
            inputs,
            embedded,
            layers,
            distributions,
            pooled,
            pool_winners,
        },
    })
}
