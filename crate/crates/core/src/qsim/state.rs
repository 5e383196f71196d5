use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance used when accepting externally supplied amplitudes as a unit state.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Dense pure state of `n_qubits` qubits, little-endian: qubit 0 is the least
/// significant bit of the basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl QuantumState {
    /// |0…0⟩
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0).expect("index 0 is always a valid basis state")
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::StateSize(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps amplitudes that already form a unit vector.
    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != 1usize << n_qubits {
            return Err(Error::StateSize(format!(
                "{} amplitudes cannot describe {n_qubits} qubits",
                amplitudes.len()
            )));
        }
        let state = Self {
            n_qubits,
            amplitudes,
        };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::StateSize(format!(
                "amplitudes have norm {norm}, expected 1"
            )));
        }
        Ok(state)
    }

    /// Normalizes arbitrary amplitudes. Returns `None` for the zero vector.
    pub fn normalized(n_qubits: usize, mut amplitudes: Vec<C64>) -> Result<Option<Self>> {
        if amplitudes.len() != 1usize << n_qubits {
            return Err(Error::StateSize(format!(
                "{} amplitudes cannot describe {n_qubits} qubits",
                amplitudes.len()
            )));
        }
        let norm = l2_norm(&amplitudes);
        if norm < 1e-12 {
            return Ok(None);
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(Some(Self {
            n_qubits,
            amplitudes,
        }))
    }

    /// Haar-like random state from normalized complex Gaussians.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Self {
        let amplitudes: Vec<C64> = (0..1usize << n_qubits)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::normalized(n_qubits, amplitudes)
            .expect("length matches")
            .expect("gaussian vector is nonzero with probability one")
    }

    pub fn random_seeded(n_qubits: usize, seed: u64) -> Self {
        Self::random(n_qubits, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amplitudes)
    }

    /// Rescales to unit norm; used after operations that are unitary only up
    /// to rounding.
    pub fn renormalize(&mut self) {
        let norm = self.norm();
        if norm > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= norm);
        }
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &QuantumState) -> Result<C64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::StateSize(format!(
                "cannot compare {}-qubit and {}-qubit states",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }
}

pub(crate) fn l2_norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Σ conj(a_k) b_k
pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Re⟨a, b⟩, the real pairing used for cotangents of complex vectors.
pub(crate) fn real_inner(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}
