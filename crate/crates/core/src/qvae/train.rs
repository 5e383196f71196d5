use std::f64::consts::FRAC_PI_2;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{sample_latent, QvaeArch, QvaeModel};
use crate::audio::{AudioConfig, MelPatch};
use crate::error::{Error, Result};
use crate::qsim::{measure_probabilities, QuantumState};
use crate::seed::derive_seed_path;
use crate::train::{adam_step, AdamState};

/// Architecture and optimization settings of the per-class QVAEs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QvaeConfig {
    pub m_qubits: usize,
    pub enc_layers: usize,
    pub latent_dim: usize,
    pub hidden: usize,
    /// Weight of the KL term; 0 gives a plain autoencoder.
    pub beta: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub griffin_lim_iters: usize,
    /// Synthetic clips generated per real training clip.
    pub samples_per_real: f64,
}

impl Default for QvaeConfig {
    fn default() -> Self {
        let arch = QvaeArch::default();
        Self {
            m_qubits: arch.m_qubits,
            enc_layers: arch.enc_layers,
            latent_dim: arch.latent_dim,
            hidden: arch.hidden,
            beta: 1.0,
            learning_rate: 0.01,
            epochs: 100,
            batch_size: 8,
            griffin_lim_iters: 32,
            samples_per_real: 1.0,
        }
    }
}

impl QvaeConfig {
    pub fn arch(&self, patch_size: usize) -> QvaeArch {
        QvaeArch {
            m_qubits: self.m_qubits,
            enc_layers: self.enc_layers,
            latent_dim: self.latent_dim,
            hidden: self.hidden,
            patch_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(
                "beta must be a non-negative number".into(),
            ));
        }
        if !(self.learning_rate > 0.0) || self.batch_size == 0 || self.griffin_lim_iters == 0 {
            return Err(Error::InvalidConfig(
                "QVAE learning rate, batch size and iterations must be positive".into(),
            ));
        }
        if !(self.samples_per_real >= 0.0 && self.samples_per_real.is_finite()) {
            return Err(Error::InvalidConfig(
                "samples_per_real must be non-negative".into(),
            ));
        }
        self.arch(2).validate()
    }
}

/// Objective terms for one patch.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QvaeLoss {
    pub total: f64,
    pub reconstruction: f64,
    pub kl: f64,
}

impl QvaeLoss {
    fn add(&mut self, other: &QvaeLoss, w: f64) {
        self.total += w * other.total;
        self.reconstruction += w * other.reconstruction;
        self.kl += w * other.kl;
    }
}

impl QvaeModel {
    pub fn n_params(&self) -> usize {
        self.theta_enc.len() + self.decoder.n_params() + self.recognizer.n_params()
    }

    /// θ_enc, decoder, recognizer.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = self.theta_enc.clone();
        out.extend(self.decoder.params_flat());
        out.extend(self.recognizer.params_flat());
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::ParameterArity {
                expected: self.n_params(),
                got: flat.len(),
            });
        }
        let (enc, rest) = flat.split_at(self.theta_enc.len());
        let (dec, rec) = rest.split_at(self.decoder.n_params());
        self.theta_enc.copy_from_slice(enc);
        self.decoder.set_params_flat(dec);
        self.recognizer.set_params_flat(rec);
        Ok(())
    }
}

/// Reconstruction MSE (standardized units) plus `β·KL(q(z|x) ‖ N(0, I))`
/// for a fixed reparameterization noise `eps`.
pub fn qvae_objective(
    model: &QvaeModel,
    patch: &MelPatch,
    eps: &[f64],
    beta: f64,
) -> Result<QvaeLoss> {
    qvae_objective_gradient(model, patch, eps, beta, false).map(|(l, _)| l)
}

/// Objective and, if requested, its gradient in [`QvaeModel::params_flat`]
/// layout. The circuit part uses the ±π/2 shift rule on the measured
/// probabilities.
pub fn qvae_objective_gradient(
    model: &QvaeModel,
    patch: &MelPatch,
    eps: &[f64],
    beta: f64,
    with_grad: bool,
) -> Result<(QvaeLoss, Vec<f64>)> {
    if !with_grad {
        return Ok((objective_pass(model, patch, eps, beta, None)?, Vec::new()));
    }
    let mut grads = vec![0.0; model.n_params()];
    let loss = objective_pass(model, patch, eps, beta, Some((1.0, &mut grads)))?;
    Ok((loss, grads))
}

/// Adds `weight ·` the objective gradient into `grads` and returns the
/// objective. Lets a batch share one gradient buffer.
pub fn accumulate_qvae_gradient(
    model: &QvaeModel,
    patch: &MelPatch,
    eps: &[f64],
    beta: f64,
    weight: f64,
    grads: &mut [f64],
) -> Result<QvaeLoss> {
    if grads.len() != model.n_params() {
        return Err(Error::ParameterArity {
            expected: model.n_params(),
            got: grads.len(),
        });
    }
    objective_pass(model, patch, eps, beta, Some((weight, grads)))
}

fn objective_pass(
    model: &QvaeModel,
    patch: &MelPatch,
    eps: &[f64],
    beta: f64,
    grad: Option<(f64, &mut [f64])>,
) -> Result<QvaeLoss> {
    let l = model.arch.latent_dim;
    let p2 = model.arch.patch_size * model.arch.patch_size;
    if patch.values.len() != p2 {
        return Err(Error::Decoder {
            expected: p2,
            got: patch.values.len(),
        });
    }
    if eps.len() != l {
        return Err(Error::LatentArity {
            expected: l,
            got: eps.len(),
        });
    }
    let x = model.standardize(&patch.values);
    let (stats, rec_cache) = model.recognizer.forward_cached(&x)?;
    let (mu, logvar) = stats.split_at(l);
    let sigma: Vec<f64> = logvar.iter().map(|v| (0.5 * v).exp()).collect();
    let z: Vec<f64> = (0..l).map(|k| mu[k] + sigma[k] * eps[k]).collect();

    let angles = model.angles_for(&z)?;
    let ground = QuantumState::zero(model.arch.m_qubits);
    let probs = measure_probabilities(&model.enc_circuit.run(&angles, &ground)?).probs;
    let (y, dec_cache) = model.decoder.forward_cached(&probs)?;

    let reconstruction = y.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / p2 as f64;
    let kl = 0.5
        * (0..l)
            .map(|k| mu[k] * mu[k] + sigma[k] * sigma[k] - 1.0 - logvar[k])
            .sum::<f64>();
    let loss = QvaeLoss {
        total: reconstruction + beta * kl,
        reconstruction,
        kl,
    };
    let Some((weight, grads)) = grad else {
        return Ok(loss);
    };

    let n_enc = model.theta_enc.len();
    let n_dec = model.decoder.n_params();
    let g_y: Vec<f64> = y
        .iter()
        .zip(&x)
        .map(|(a, b)| weight * 2.0 * (a - b) / p2 as f64)
        .collect();
    let g_probs = model
        .decoder
        .backward(&dec_cache, &g_y, &mut grads[n_enc..n_enc + n_dec]);

    // d(Σ_j g_j P_j)/dθ_k is an expectation value, so the π/2 shift is exact
    let mut g_angles = vec![0.0; angles.len()];
    let mut shifted = angles.clone();
    for k in 0..angles.len() {
        shifted[k] = angles[k] + FRAC_PI_2;
        let plus = measure_probabilities(&model.enc_circuit.run(&shifted, &ground)?).probs;
        shifted[k] = angles[k] - FRAC_PI_2;
        let minus = measure_probabilities(&model.enc_circuit.run(&shifted, &ground)?).probs;
        shifted[k] = angles[k];
        g_angles[k] = (0..probs.len())
            .map(|j| g_probs[j] * (plus[j] - minus[j]) / 2.0)
            .sum();
        grads[k] += g_angles[k];
    }

    let wb = weight * beta;
    let mut g_stats = vec![0.0; 2 * l];
    for k in 0..l {
        let g_z = g_angles[k];
        g_stats[k] = g_z + wb * mu[k];
        g_stats[l + k] = g_z * eps[k] * 0.5 * sigma[k] + wb * 0.5 * (sigma[k] * sigma[k] - 1.0);
    }
    model
        .recognizer
        .backward(&rec_cache, &g_stats, &mut grads[n_enc + n_dec..]);
    Ok(loss)
}

/// Mean objective over `patches` with a fixed noise draw per patch.
fn evaluation_loss(
    model: &QvaeModel,
    patches: &[MelPatch],
    beta: f64,
    seed: u64,
) -> Result<QvaeLoss> {
    let losses = patches
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            qvae_objective(
                model,
                x,
                &sample_latent(model.latent_dim(), derive_seed_path(seed, &[3, i as u64])),
                beta,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut mean = QvaeLoss::default();
    losses
        .iter()
        .for_each(|l| mean.add(l, 1.0 / patches.len() as f64));
    Ok(mean)
}

/// Trains one QVAE on a set of patches (normally all patches of one class).
///
/// Returns the trained model and, per epoch, the mean objective after that
/// epoch's updates. The recorded objective uses one fixed noise draw per
/// patch so that the curve tracks the parameters rather than sampling noise.
pub fn train_qvae(
    patches: &[MelPatch],
    config: &QvaeConfig,
    audio: AudioConfig,
    seed: u64,
) -> Result<(QvaeModel, Vec<QvaeLoss>)> {
    config.validate()?;
    let first = patches
        .first()
        .ok_or_else(|| Error::InvalidTrainingSet("QVAE needs at least one patch".into()))?;
    let p = first.p;
    if patches.iter().any(|x| x.p != p) {
        return Err(Error::InvalidTrainingSet(
            "QVAE patches must share one size".into(),
        ));
    }
    let mut model = QvaeModel::new(config.arch(p), audio, derive_seed_path(seed, &[0]))?;
    let n_values = (patches.len() * p * p) as f64;
    let mean = patches.iter().flat_map(|x| &x.values).sum::<f64>() / n_values;
    let var = patches
        .iter()
        .flat_map(|x| &x.values)
        .map(|v| (v - mean).powi(2))
        .sum::<f64>()
        / n_values;
    model.griffin_lim_iters = config.griffin_lim_iters;
    model.shift = mean;
    model.scale = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };

    let mut params = model.params_flat();
    let mut adam = AdamState::new(params.len());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed_path(seed, &[1]));
    let mut order: Vec<usize> = (0..patches.len()).collect();
    let mut grads = vec![0.0; params.len()];
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            grads.fill(0.0);
            let w = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let eps = sample_latent(
                    config.latent_dim,
                    derive_seed_path(seed, &[2, epoch as u64, i as u64]),
                );
                accumulate_qvae_gradient(&model, &patches[i], &eps, config.beta, w, &mut grads)?;
            }
            adam_step(&mut params, &grads, &mut adam, config.learning_rate);
            model.set_params_flat(&params)?;
        }
        let epoch_loss = evaluation_loss(&model, patches, config.beta, seed)?;
        log::debug!("qvae epoch {epoch}: {:.5}", epoch_loss.total);
        history.push(epoch_loss);
    }
    model.trained = config.epochs > 0;
    Ok((model, history))
}
