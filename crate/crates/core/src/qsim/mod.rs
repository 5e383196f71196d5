//! Dense statevector simulation of small parameterized circuits.
//!
//! States are little-endian (qubit 0 is the least significant bit of the
//! basis index) and rotations follow `R(θ) = exp(−iθP/2)`.

mod circuit;
mod gradient;
mod measure;
mod state;

pub use circuit::{apply_gate, build_qasc_circuit, run_circuit, Circuit, Gate, GateKind};
pub use gradient::{parameter_shift_gradient, shift_rule_vjp};
pub use measure::{
    fidelity, measure_probabilities, sample_outcomes, swap_test_estimate, OutcomeDistribution,
};
pub use state::{QuantumState, C64, NORM_TOLERANCE};

pub(crate) use state::{inner, l2_norm, real_inner};
