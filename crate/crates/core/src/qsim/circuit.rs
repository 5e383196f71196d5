use std::f64::consts::FRAC_1_SQRT_2;

use super::state::{QuantumState, C64};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Cnot,
    H,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz)
    }
}

/// One gate of a circuit. Rotations read their angle from `param` in the
/// circuit's parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
    pub param: Option<usize>,
}

impl Gate {
    pub fn rx(target: usize, param: usize) -> Self {
        Self::rotation(GateKind::Rx, target, param)
    }

    pub fn ry(target: usize, param: usize) -> Self {
        Self::rotation(GateKind::Ry, target, param)
    }

    pub fn rz(target: usize, param: usize) -> Self {
        Self::rotation(GateKind::Rz, target, param)
    }

    pub fn rotation(kind: GateKind, target: usize, param: usize) -> Self {
        Self {
            kind,
            target,
            control: None,
            param: Some(param),
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::Cnot,
            target,
            control: Some(control),
            param: None,
        }
    }

    pub fn h(target: usize) -> Self {
        Self {
            kind: GateKind::H,
            target,
            control: None,
            param: None,
        }
    }

    /// Checks the structural invariants and that every qubit index fits in
    /// `n_qubits`.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.target >= n_qubits {
            return Err(Error::InvalidGate(format!(
                "target qubit {} out of range for {n_qubits} qubits",
                self.target
            )));
        }
        match self.kind {
            GateKind::Cnot => {
                let control = self
                    .control
                    .ok_or_else(|| Error::InvalidGate("CNOT without a control qubit".into()))?;
                if control >= n_qubits {
                    return Err(Error::InvalidGate(format!(
                        "control qubit {control} out of range for {n_qubits} qubits"
                    )));
                }
                if control == self.target {
                    return Err(Error::InvalidGate(format!(
                        "control and target are both qubit {control}"
                    )));
                }
                if self.param.is_some() {
                    return Err(Error::InvalidGate("CNOT carries no parameter".into()));
                }
            }
            GateKind::H => {
                if self.control.is_some() || self.param.is_some() {
                    return Err(Error::InvalidGate(
                        "H takes neither control nor parameter".into(),
                    ));
                }
            }
            GateKind::Rx | GateKind::Ry | GateKind::Rz => {
                if self.param.is_none() {
                    return Err(Error::InvalidGate(format!(
                        "{:?} needs a parameter index",
                        self.kind
                    )));
                }
                if self.control.is_some() {
                    return Err(Error::InvalidGate("rotations are uncontrolled".into()));
                }
            }
        }
        Ok(())
    }
}

/// 2×2 matrix of a single-qubit gate, row-major. Rotations follow
/// R(θ) = exp(−iθP/2).
fn single_qubit_matrix(kind: GateKind, theta: f64) -> [C64; 4] {
    let (s, c) = (theta / 2.0).sin_cos();
    let zero = C64::new(0.0, 0.0);
    match kind {
        GateKind::Rx => [
            C64::new(c, 0.0),
            C64::new(0.0, -s),
            C64::new(0.0, -s),
            C64::new(c, 0.0),
        ],
        GateKind::Ry => [
            C64::new(c, 0.0),
            C64::new(-s, 0.0),
            C64::new(s, 0.0),
            C64::new(c, 0.0),
        ],
        GateKind::Rz => [C64::new(c, -s), zero, zero, C64::new(c, s)],
        GateKind::H => {
            let h = C64::new(FRAC_1_SQRT_2, 0.0);
            [h, h, h, -h]
        }
        GateKind::Cnot => unreachable!("CNOT is not a single-qubit gate"),
    }
}

/// Applies a gate to raw amplitudes without validation. The slice need not be
/// normalized, which lets cotangent vectors reuse the same kernels.
pub(crate) fn apply_gate_raw(amps: &mut [C64], gate: &Gate, theta: f64) {
    let t = 1usize << gate.target;
    match gate.kind {
        GateKind::Cnot => {
            let c = 1usize << gate.control.expect("validated CNOT");
            for i in 0..amps.len() {
                if i & c != 0 && i & t == 0 {
                    amps.swap(i, i | t);
                }
            }
        }
        kind => {
            let m = single_qubit_matrix(kind, theta);
            for i in 0..amps.len() {
                if i & t == 0 {
                    let j = i | t;
                    let (a, b) = (amps[i], amps[j]);
                    amps[i] = m[0] * a + m[1] * b;
                    amps[j] = m[2] * a + m[3] * b;
                }
            }
        }
    }
}

/// Applies one gate with explicit angle `theta` (ignored for CNOT and H).
pub fn apply_gate(state: &mut QuantumState, gate: &Gate, theta: f64) -> Result<()> {
    gate.validate(state.n_qubits())?;
    apply_gate_raw(state.amplitudes_mut(), gate, theta);
    Ok(())
}

/// An ordered gate list over `n_qubits` with a flat parameter vector of
/// length `n_params`.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    n_params: usize,
}

impl Circuit {
    pub fn new(n_qubits: usize, n_params: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
            n_params,
        }
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        if let Some(p) = gate.param {
            if p >= self.n_params {
                return Err(Error::InvalidGate(format!(
                    "parameter index {p} out of range for {} parameters",
                    self.n_params
                )));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    pub(crate) fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params {
            return Err(Error::ParameterArity {
                expected: self.n_params,
                got: params.len(),
            });
        }
        Ok(())
    }

    fn angle(gate: &Gate, params: &[f64]) -> f64 {
        gate.param.map_or(0.0, |p| params[p])
    }

    pub(crate) fn apply_raw(&self, params: &[f64], amps: &mut [C64]) {
        for gate in &self.gates {
            apply_gate_raw(amps, gate, Self::angle(gate, params));
        }
    }

    /// Applies U(θ)† by running the inverse gates in reverse order.
    #[cfg(test)]
    pub(crate) fn apply_adjoint_raw(&self, params: &[f64], amps: &mut [C64]) {
        for gate in self.gates.iter().rev() {
            apply_gate_raw(amps, gate, -Self::angle(gate, params));
        }
    }

    /// Runs the circuit on `initial`. Output norm matches the input norm up
    /// to rounding.
    pub fn run(&self, params: &[f64], initial: &QuantumState) -> Result<QuantumState> {
        self.check_params(params)?;
        if initial.n_qubits() != self.n_qubits {
            return Err(Error::StateSize(format!(
                "circuit acts on {} qubits, state has {}",
                self.n_qubits,
                initial.n_qubits()
            )));
        }
        let mut out = initial.clone();
        self.apply_raw(params, out.amplitudes_mut());
        Ok(out)
    }

    /// Appends all gates of `other`, offsetting its parameter indices past
    /// this circuit's parameters.
    pub fn concat(&self, other: &Circuit) -> Result<Circuit> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::InvalidConfig(
                "cannot concatenate circuits of different widths".into(),
            ));
        }
        let mut out = Circuit::new(self.n_qubits, self.n_params + other.n_params);
        out.gates = self.gates.clone();
        out.gates.extend(other.gates.iter().map(|g| Gate {
            param: g.param.map(|p| p + self.n_params),
            ..*g
        }));
        Ok(out)
    }
}

/// Free-function form of [`Circuit::run`].
pub fn run_circuit(
    circuit: &Circuit,
    params: &[f64],
    initial: &QuantumState,
) -> Result<QuantumState> {
    circuit.run(params, initial)
}

/// The layered ansatz used for every circuit in the model.
///
/// Each layer applies RX, RY, RZ to every qubit (parameter index
/// `layer·3n + 3q + r`), then CNOT(i, i+1) over adjacent pairs. From six
/// qubits up, each layer also gets CNOT(i, i+2) between qubits two positions
/// apart. Neither chain wraps around.
pub fn build_qasc_circuit(n_qubits: usize, n_layers: usize) -> Result<Circuit> {
    if n_layers < 1 {
        return Err(Error::InvalidConfig(
            "circuit needs at least one layer".into(),
        ));
    }
    if n_qubits < 1 {
        return Err(Error::InvalidConfig(
            "circuit needs at least one qubit".into(),
        ));
    }
    let per_layer = 3 * n_qubits;
    let mut circuit = Circuit::new(n_qubits, per_layer * n_layers);
    for layer in 0..n_layers {
        let base = layer * per_layer;
        for q in 0..n_qubits {
            circuit.push(Gate::rx(q, base + 3 * q))?;
            circuit.push(Gate::ry(q, base + 3 * q + 1))?;
            circuit.push(Gate::rz(q, base + 3 * q + 2))?;
        }
        for q in 0..n_qubits.saturating_sub(1) {
            circuit.push(Gate::cnot(q, q + 1))?;
        }
        if n_qubits >= 6 {
            for q in 0..n_qubits - 2 {
                circuit.push(Gate::cnot(q, q + 2))?;
            }
        }
    }
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rx_zero_is_identity() {
        let mut s = QuantumState::zero(1);
        apply_gate(&mut s, &Gate::rx(0, 0), 0.0).unwrap();
        assert_eq!(s, QuantumState::zero(1));
    }

    #[test]
    fn rx_pi_flips() {
        let mut s = QuantumState::zero(1);
        apply_gate(&mut s, &Gate::rx(0, 0), PI).unwrap();
        assert!((s.amplitudes()[1].norm_sqr() - 1.0).abs() < 1e-15);
        // global phase −i
        assert!((s.amplitudes()[1] - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn cnot_makes_bell_state() {
        let h = FRAC_1_SQRT_2;
        // kets written |q0 q1⟩: (|00⟩ + |10⟩)/√2 is basis indices 0 and 1
        let mut s =
            QuantumState::from_amplitudes(2, vec![c(h, 0.0), c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
                .unwrap();
        apply_gate(&mut s, &Gate::cnot(0, 1), 0.0).unwrap();
        let expected = [c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)];
        for (a, b) in s.amplitudes().iter().zip(expected) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn invalid_gates_are_rejected() {
        let mut s = QuantumState::zero(2);
        assert!(matches!(
            apply_gate(&mut s, &Gate::h(2), 0.0),
            Err(Error::InvalidGate(_))
        ));
        assert!(matches!(
            apply_gate(&mut s, &Gate::cnot(1, 1), 0.0),
            Err(Error::InvalidGate(_))
        ));
        assert!(matches!(
            apply_gate(&mut s, &Gate::cnot(3, 0), 0.0),
            Err(Error::InvalidGate(_))
        ));
        let bad = Gate {
            kind: GateKind::Rx,
            target: 0,
            control: None,
            param: None,
        };
        assert!(bad.validate(2).is_err());
        let mut circuit = Circuit::new(2, 1);
        assert!(circuit.push(Gate::ry(0, 1)).is_err());
    }

    #[test]
    fn layouts_match_construction_rule() {
        let c4 = build_qasc_circuit(4, 1).unwrap();
        assert_eq!(c4.n_params(), 12);
        assert_eq!(c4.count(GateKind::Cnot), 3);
        assert!(c4
            .gates()
            .iter()
            .filter(|g| g.kind == GateKind::Cnot)
            .all(|g| g.target == g.control.unwrap() + 1));

        let c6 = build_qasc_circuit(6, 1).unwrap();
        assert_eq!(c6.n_params(), 18);
        let cnots: Vec<_> = c6
            .gates()
            .iter()
            .filter(|g| g.kind == GateKind::Cnot)
            .map(|g| (g.control.unwrap(), g.target))
            .collect();
        assert_eq!(cnots.len(), 5 + 4);
        assert!(cnots.contains(&(0, 2)) && cnots.contains(&(3, 5)));
        assert!(!cnots.contains(&(5, 0)), "no wrap-around");

        assert_eq!(build_qasc_circuit(4, 3).unwrap().n_params(), 36);
        assert!(matches!(
            build_qasc_circuit(4, 0),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn rotations_precede_entanglers_within_a_layer() {
        let circuit = build_qasc_circuit(4, 2).unwrap();
        let kinds: Vec<_> = circuit.gates().iter().map(|g| g.kind).collect();
        assert!(kinds[..12].iter().all(|k| k.is_rotation()));
        assert!(kinds[12..15].iter().all(|k| *k == GateKind::Cnot));
        assert!(kinds[15..27].iter().all(|k| k.is_rotation()));
    }

    #[test]
    fn empty_circuit_is_identity() {
        let s = QuantumState::random_seeded(3, 7);
        let out = Circuit::new(3, 0).run(&[], &s).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn zero_angle_rotations_are_identity() {
        let mut circuit = Circuit::new(3, 9);
        for q in 0..3 {
            circuit.push(Gate::rx(q, 3 * q)).unwrap();
            circuit.push(Gate::ry(q, 3 * q + 1)).unwrap();
            circuit.push(Gate::rz(q, 3 * q + 2)).unwrap();
        }
        let out = circuit.run(&[0.0; 9], &QuantumState::zero(3)).unwrap();
        assert_eq!(out, QuantumState::zero(3));
    }

    #[test]
    fn arity_mismatch_is_reported() {
        let circuit = build_qasc_circuit(2, 1).unwrap();
        let err = circuit.run(&[0.0; 5], &QuantumState::zero(2)).unwrap_err();
        assert!(matches!(
            err,
            Error::ParameterArity {
                expected: 6,
                got: 5
            }
        ));
        assert!(circuit.run(&[0.0; 6], &QuantumState::zero(3)).is_err());
    }

    #[test]
    fn adjoint_inverts_circuit() {
        let circuit = build_qasc_circuit(3, 2).unwrap();
        let params: Vec<f64> = (0..circuit.n_params())
            .map(|k| 0.3 * k as f64 - 1.0)
            .collect();
        let s = QuantumState::random_seeded(3, 11);
        let mut amps = s.amplitudes().to_vec();
        circuit.apply_raw(&params, &mut amps);
        circuit.apply_adjoint_raw(&params, &mut amps);
        for (a, b) in amps.iter().zip(s.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
