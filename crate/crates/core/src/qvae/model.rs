use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use crate::audio::{AudioConfig, MelPatch};
use crate::error::{Error, Result};
use crate::qsim::{
    build_qasc_circuit, measure_probabilities, Circuit, OutcomeDistribution, QuantumState,
};

/// Architecture of one per-class QVAE.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QvaeArch {
    pub m_qubits: usize,
    pub enc_layers: usize,
    pub latent_dim: usize,
    pub hidden: usize,
    pub patch_size: usize,
}

impl Default for QvaeArch {
    fn default() -> Self {
        Self {
            m_qubits: 3,
            enc_layers: 2,
            latent_dim: 9,
            hidden: 64,
            patch_size: 32,
        }
    }
}

impl QvaeArch {
    pub fn validate(&self) -> Result<()> {
        if self.m_qubits < 1 || self.m_qubits > 12 {
            return Err(Error::InvalidConfig(format!(
                "m_qubits must be in 1..=12, got {}",
                self.m_qubits
            )));
        }
        if self.enc_layers < 1 || self.hidden < 1 || self.patch_size < 2 {
            return Err(Error::InvalidConfig(
                "QVAE layers, hidden width and patch size must be positive".into(),
            ));
        }
        if self.latent_dim != 3 * self.m_qubits {
            return Err(Error::InvalidConfig(format!(
                "latent_dim must equal the {} first-layer rotation angles",
                3 * self.m_qubits
            )));
        }
        Ok(())
    }
}

/// Quantum latent encoder, classical decoder to mel patches and the
/// recognizer used only during training.
///
/// Patches are modelled in standardized units: the recognizer sees
/// `(x − shift) / scale` and the decoder output is mapped back with
/// `shift + scale · y`.
#[derive(Clone, Debug, PartialEq)]
pub struct QvaeModel {
    pub arch: QvaeArch,
    pub audio: AudioConfig,
    pub enc_circuit: Circuit,
    pub theta_enc: Vec<f64>,
    /// `2^m → hidden → p²`
    pub decoder: Mlp,
    /// `p² → hidden → 2·latent_dim` (mean, then log-variance)
    pub recognizer: Mlp,
    pub shift: f64,
    pub scale: f64,
    pub griffin_lim_iters: usize,
    pub trained: bool,
}

impl QvaeModel {
    pub fn new(arch: QvaeArch, audio: AudioConfig, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let enc_circuit = build_qasc_circuit(arch.m_qubits, arch.enc_layers)?;
        let theta_enc = (0..enc_circuit.n_params())
            .map(|_| rand::Rng::random_range(&mut rng, -0.1..0.1))
            .collect();
        let p2 = arch.patch_size * arch.patch_size;
        let decoder = Mlp::new(&[1 << arch.m_qubits, arch.hidden, p2], 1.0, &mut rng);
        let recognizer = Mlp::new(&[p2, arch.hidden, 2 * arch.latent_dim], 0.1, &mut rng);
        Ok(Self {
            arch,
            audio,
            enc_circuit,
            theta_enc,
            decoder,
            recognizer,
            shift: 0.0,
            scale: 1.0,
            griffin_lim_iters: 32,
            trained: false,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.arch.latent_dim
    }

    pub(crate) fn angles_for(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.arch.latent_dim {
            return Err(Error::LatentArity {
                expected: self.arch.latent_dim,
                got: z.len(),
            });
        }
        let mut angles = self.theta_enc.clone();
        angles.iter_mut().zip(z).for_each(|(a, zk)| *a += zk);
        Ok(angles)
    }

    pub(crate) fn standardize(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .map(|v| (v - self.shift) / self.scale)
            .collect()
    }

    pub(crate) fn destandardize(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| self.shift + self.scale * v).collect()
    }
}

/// `z ~ N(0, I)` drawn from a seeded stream.
pub fn sample_latent(latent_dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..latent_dim)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect()
}

/// `U_enc(θ_enc)` with `z` added to the first-layer rotation angles, applied
/// to `|0…0⟩`.
pub fn encode_latent(z: &[f64], model: &QvaeModel) -> Result<QuantumState> {
    let angles = model.angles_for(z)?;
    model
        .enc_circuit
        .run(&angles, &QuantumState::zero(model.arch.m_qubits))
}

/// Decoder network applied to a measurement distribution.
pub fn decode(probs: &OutcomeDistribution, model: &QvaeModel) -> Result<MelPatch> {
    let y = model.decoder.forward(&probs.probs)?;
    MelPatch::new(model.arch.patch_size, model.destandardize(&y))
}

/// Latent vector to mel patch: encode, measure exactly, decode.
pub fn generate_patch(z: &[f64], model: &QvaeModel) -> Result<MelPatch> {
    decode(&measure_probabilities(&encode_latent(z, model)?), model)
}
