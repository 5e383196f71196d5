//! Exact loss gradient of the QiT model.
//!
//! Classical parts (head, pooling, attention weights, normalizations,
//! projection) are differentiated by hand in reverse mode. Circuit
//! parameters are differentiated with the shift rule on amplitudes, which
//! also yields the cotangent flowing into each circuit's input state.

use rayon::prelude::*;

use super::forward::{forward, ForwardOutput};
use super::model::{EncodingMode, PoolingMode, QitModel};
use crate::audio::MelPatch;
use crate::error::Result;
use crate::qsim::{real_inner, shift_rule_vjp, QuantumState, C64};
use crate::train::{cross_entropy, cross_entropy_logit_grad};

/// Gradient with the same layout as [`QitModel::params_flat`].
#[derive(Clone, Debug, PartialEq)]
pub struct ModelGradient {
    pub projection_w: Vec<f64>,
    pub projection_b: Vec<f64>,
    pub theta_e: Vec<f64>,
    pub theta_a: Vec<Vec<f64>>,
    pub theta_f: Vec<Vec<f64>>,
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
}

impl ModelGradient {
    pub fn zeros_like(model: &QitModel) -> Self {
        Self {
            projection_w: vec![0.0; model.projection.weights.len()],
            projection_b: vec![0.0; model.projection.bias.len()],
            theta_e: vec![0.0; model.theta_e.len()],
            theta_a: model.theta_a.iter().map(|t| vec![0.0; t.len()]).collect(),
            theta_f: model.theta_f.iter().map(|t| vec![0.0; t.len()]).collect(),
            head_w: vec![0.0; model.head_w.len()],
            head_b: vec![0.0; model.head_b.len()],
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.projection_w);
        out.extend_from_slice(&self.projection_b);
        out.extend_from_slice(&self.theta_e);
        self.theta_a.iter().for_each(|t| out.extend_from_slice(t));
        self.theta_f.iter().for_each(|t| out.extend_from_slice(t));
        out.extend_from_slice(&self.head_w);
        out.extend_from_slice(&self.head_b);
        out
    }
}

#[derive(Clone, Debug)]
pub struct LossAndGradient {
    pub loss: f64,
    pub probs: Vec<f64>,
    pub gradient: ModelGradient,
}

fn zeros(dim: usize) -> Vec<C64> {
    vec![C64::new(0.0, 0.0); dim]
}

fn add_into(acc: &mut [f64], x: &[f64]) {
    acc.iter_mut().zip(x).for_each(|(a, b)| *a += b);
}

/// Backward through `v = u / ‖u‖` given `v` and `‖u‖`.
fn normalize_backward(v: &[C64], norm: f64, g_v: &[C64]) -> Vec<C64> {
    let proj = real_inner(v, g_v);
    v.iter()
        .zip(g_v)
        .map(|(vk, gk)| (gk - vk * proj) / norm)
        .collect()
}

/// Cross-entropy loss of one clip and its gradient over every parameter.
pub fn model_gradient(
    patches: &[MelPatch],
    label: usize,
    model: &QitModel,
) -> Result<LossAndGradient> {
    let out = forward(patches, model)?;
    let gradient = backward(patches, label, model, &out)?;
    Ok(LossAndGradient {
        loss: cross_entropy(&out.probs, label),
        probs: out.probs,
        gradient,
    })
}

fn backward(
    patches: &[MelPatch],
    label: usize,
    model: &QitModel,
    out: &ForwardOutput,
) -> Result<ModelGradient> {
    let cfg = &model.config;
    let c = cfg.n_classes;
    let dim = cfg.dim();
    let n = patches.len();
    let trace = &out.trace;
    let mut grad = ModelGradient::zeros_like(model);

    // head
    let g_logits = cross_entropy_logit_grad(&out.probs, label);
    let z = &trace.pooled.z;
    let mut g_z = vec![0.0; c];
    for j in 0..c {
        grad.head_b[j] = g_logits[j];
        for k in 0..c {
            grad.head_w[j * c + k] = g_logits[j] * z[k];
            g_z[k] += model.head_w[j * c + k] * g_logits[j];
        }
    }

    // pooling and measurement
    let final_states: &[QuantumState] = trace.layers.last().map_or(&trace.embedded, |l| &l.output);
    let mut g_states: Vec<Vec<C64>> = vec![zeros(dim); n];
    for j in 0..c {
        match cfg.pooling {
            PoolingMode::Mean => {
                for (i, s) in final_states.iter().enumerate() {
                    g_states[i][j] = s.amplitudes()[j] * (2.0 * g_z[j] / n as f64);
                }
            }
            PoolingMode::Max => {
                let i = trace.pool_winners[j];
                g_states[i][j] = final_states[i].amplitudes()[j] * (2.0 * g_z[j]);
            }
        }
    }

    // encoder layers in reverse
    for (l, layer) in trace.layers.iter().enumerate().rev() {
        let mut g_attended = Vec::with_capacity(n);
        for i in 0..n {
            let g_f = normalize_backward(
                layer.output[i].amplitudes(),
                layer.output_norms[i],
                &g_states[i],
            );
            let (gt, g_in) = shift_rule_vjp(
                &model.ffn_circuit,
                &model.theta_f[l],
                layer.attended[i].amplitudes(),
                &g_f,
            )?;
            add_into(&mut grad.theta_f[l], &gt);
            g_attended.push(g_in);
        }

        let w = &layer.weights;
        let mut g_t: Vec<Vec<C64>> = vec![zeros(dim); n];
        let mut g_w = vec![0.0; n * n];
        for i in 0..n {
            if layer.mixed_norms[i] < 1e-12 {
                // fallback branch: the output was U_a|ψ_i⟩ itself
                g_t[i]
                    .iter_mut()
                    .zip(&g_attended[i])
                    .for_each(|(a, b)| *a += b);
                continue;
            }
            let g_u = normalize_backward(
                layer.attended[i].amplitudes(),
                layer.mixed_norms[i],
                &g_attended[i],
            );
            for j in 0..n {
                let wij = w[i * n + j];
                g_t[j].iter_mut().zip(&g_u).for_each(|(a, b)| *a += b * wij);
                g_w[i * n + j] = real_inner(layer.transformed[j].amplitudes(), &g_u);
            }
        }

        let mut g_in: Vec<Vec<C64>> = Vec::with_capacity(n);
        for j in 0..n {
            let (ga, g_s) = shift_rule_vjp(
                &model.attn_circuit,
                &model.theta_a[l],
                layer.input[j].amplitudes(),
                &g_t[j],
            )?;
            add_into(&mut grad.theta_a[l], &ga);
            g_in.push(g_s);
        }

        // row normalization w_ij = A_ij / S_i, then A_ij = |⟨ψ_i|ψ_j⟩|²
        for i in 0..n {
            let row_sum: f64 = layer.attention.row(i).iter().sum();
            let dot: f64 = (0..n).map(|k| g_w[i * n + k] * w[i * n + k]).sum();
            for j in 0..n {
                if i == j {
                    continue;
                }
                let g_a = (g_w[i * n + j] - dot) / row_sum;
                if g_a == 0.0 {
                    continue;
                }
                let si = layer.input[i].amplitudes();
                let sj = layer.input[j].amplitudes();
                let cij = crate::qsim::inner(si, sj);
                let to_i = cij.conj() * (2.0 * g_a);
                let to_j = cij * (2.0 * g_a);
                for k in 0..dim {
                    g_in[i][k] += to_i * sj[k];
                    g_in[j][k] += to_j * si[k];
                }
            }
        }
        g_states = g_in;
    }

    // embedding and projection
    let d_out = model.projection.d_out;
    for (i, patch) in patches.iter().enumerate() {
        let input = &trace.inputs[i];
        let g_y: Vec<f64> = match cfg.encoding {
            EncodingMode::Amplitude => {
                let loaded: Vec<C64> = match &input.amplitudes {
                    Some(a) => a.iter().map(|&x| C64::new(x, 0.0)).collect(),
                    None => QuantumState::zero(cfg.n_qubits).into_amplitudes(),
                };
                let (ge, g_load) =
                    shift_rule_vjp(&model.embed_circuit, &model.theta_e, &loaded, &g_states[i])?;
                add_into(&mut grad.theta_e, &ge);
                match &input.amplitudes {
                    None => vec![0.0; d_out],
                    Some(a) => {
                        let g_a: Vec<f64> = g_load.iter().map(|g| g.re).collect();
                        let dot: f64 = a.iter().zip(&g_a).map(|(x, y)| x * y).sum();
                        a.iter()
                            .zip(&g_a)
                            .map(|(x, g)| (g - x * dot) / input.projected_norm)
                            .collect()
                    }
                }
            }
            EncodingMode::Angle => {
                let zero = QuantumState::zero(cfg.n_qubits).into_amplitudes();
                let (ge, _) =
                    shift_rule_vjp(&model.embed_circuit, &input.angles, &zero, &g_states[i])?;
                add_into(&mut grad.theta_e, &ge);
                ge[..d_out].to_vec()
            }
        };
        add_into(&mut grad.projection_b, &g_y);
        for (r, x) in model
            .projection
            .normalize_input(&patch.values)
            .into_iter()
            .enumerate()
        {
            if x == 0.0 {
                continue;
            }
            let row = &mut grad.projection_w[r * d_out..(r + 1) * d_out];
            row.iter_mut().zip(&g_y).for_each(|(w, g)| *w += x * g);
        }
    }
    Ok(grad)
}

/// Mean loss and mean flat gradient over a batch of labelled clips.
///
/// Per-clip gradients run in parallel and are summed in index order, so the
/// result is identical to a sequential evaluation.
pub fn batch_gradient(batch: &[(&[MelPatch], usize)], model: &QitModel) -> Result<(f64, Vec<f64>)> {
    let per_clip = batch
        .par_iter()
        .map(|(patches, label)| {
            model_gradient(patches, *label, model).map(|g| (g.loss, g.gradient.to_flat()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = vec![0.0; model.n_params()];
    let mut loss = 0.0;
    for (l, g) in &per_clip {
        loss += l;
        add_into(&mut total, g);
    }
    let scale = 1.0 / batch.len().max(1) as f64;
    total.iter_mut().for_each(|g| *g *= scale);
    Ok((loss * scale, total))
}

/// Cross-entropy of one clip, no gradient.
pub fn clip_loss(patches: &[MelPatch], label: usize, model: &QitModel) -> Result<f64> {
    Ok(cross_entropy(&forward(patches, model)?.probs, label))
}
