use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::state::QuantumState;
use crate::error::{Error, Result};

/// Computational-basis outcome probabilities of a state.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    pub probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// p(j) = |⟨j|ψ⟩|²
pub fn measure_probabilities(state: &QuantumState) -> OutcomeDistribution {
    OutcomeDistribution {
        probs: state.amplitudes().iter().map(|a| a.norm_sqr()).collect(),
    }
}

/// |⟨a|b⟩|², the overlap a SWAP test estimates.
pub fn fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

/// Draws `shots` computational-basis measurements and returns per-outcome
/// counts. Deterministic for a fixed seed.
pub fn sample_outcomes(state: &QuantumState, shots: u64, seed: u64) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let dist = measure_probabilities(state);
    let mut cdf = Vec::with_capacity(dist.len());
    let mut acc = 0.0;
    for p in &dist.probs {
        acc += p;
        cdf.push(acc);
    }
    // outcomes past the last nonzero probability are unreachable even when
    // rounding leaves the cdf short of 1
    let last = dist.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; dist.len()];
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * acc;
        let idx = cdf.partition_point(|&c| c <= u).min(last);
        counts[idx] += 1;
    }
    Ok(counts)
}

/// Shot-based fidelity estimate from an ancilla SWAP test: the ancilla reads
/// 0 with probability (1 + F)/2, so F ≈ 2·p̂₀ − 1.
pub fn swap_test_estimate(
    a: &QuantumState,
    b: &QuantumState,
    shots: u64,
    seed: u64,
) -> Result<f64> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let f = fidelity(a, b)?;
    let p0 = 0.5 * (1.0 + f);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zeros = (0..shots).filter(|_| rng.random::<f64>() < p0).count();
    Ok((2.0 * zeros as f64 / shots as f64 - 1.0).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_1_SQRT_2;

    use super::*;
    use crate::qsim::{apply_gate, Gate, C64};

    fn bell() -> QuantumState {
        let h = FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        QuantumState::from_amplitudes(2, vec![C64::new(h, 0.0), z, z, C64::new(h, 0.0)]).unwrap()
    }

    #[test]
    fn basis_and_bell_distributions() {
        assert_eq!(
            measure_probabilities(&QuantumState::zero(2)).probs,
            vec![1.0, 0.0, 0.0, 0.0]
        );
        let p = measure_probabilities(&bell()).probs;
        for (a, b) in p.iter().zip([0.5, 0.0, 0.0, 0.5]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn fidelity_examples() {
        let zero = QuantumState::zero(1);
        let one = QuantumState::basis(1, 1).unwrap();
        let mut plus = QuantumState::zero(1);
        apply_gate(&mut plus, &Gate::h(0), 0.0).unwrap();
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fidelity(&zero, &one).unwrap(), 0.0);
        assert!((fidelity(&zero, &plus).unwrap() - 0.5).abs() < 1e-15);
        assert!(fidelity(&zero, &QuantumState::zero(2)).is_err());
    }

    #[test]
    fn sampling_contracts() {
        let counts = sample_outcomes(&QuantumState::zero(2), 500, 3).unwrap();
        assert_eq!(counts, vec![500, 0, 0, 0]);
        assert!(sample_outcomes(&QuantumState::zero(2), 0, 3).is_err());

        let a = sample_outcomes(&bell(), 10_000, 42).unwrap();
        let b = sample_outcomes(&bell(), 10_000, 42).unwrap();
        assert_eq!(a, b);
        let f0 = a[0] as f64 / 10_000.0;
        assert!((f0 - 0.5).abs() < 0.02, "{f0}");
        assert_eq!(a[1] + a[2], 0);
    }

    #[test]
    fn swap_test_estimator_converges() {
        let a = QuantumState::random_seeded(3, 1);
        let b = QuantumState::random_seeded(3, 2);
        let exact = fidelity(&a, &b).unwrap();
        let est = swap_test_estimate(&a, &b, 200_000, 9).unwrap();
        assert!((est - exact).abs() < 0.01, "{est} vs {exact}");
    }
}
