//! Builds a Bell pair by hand, runs the layered ansatz, and compares exact
//! fidelity with a shot-based SWAP-test estimate.

use qasc::qsim::{
    apply_gate, build_qasc_circuit, fidelity, measure_probabilities, sample_outcomes,
    swap_test_estimate, Gate, GateKind, QuantumState,
};

fn main() -> qasc::Result<()> {
    let mut bell = QuantumState::zero(2);
    apply_gate(&mut bell, &Gate::h(0), 0.0)?;
    apply_gate(&mut bell, &Gate::cnot(0, 1), 0.0)?;
    println!(
        "Bell probabilities {:?}",
        measure_probabilities(&bell).probs
    );
    let counts = sample_outcomes(&bell, 1000, 1)?;
    println!("1000 shots: {counts:?}");

    let circuit = build_qasc_circuit(4, 3)?;
    println!(
        "4-qubit, 3-layer ansatz: {} gates, {} parameters, {} CNOTs",
        circuit.gates().len(),
        circuit.n_params(),
        circuit.count(GateKind::Cnot)
    );
    let params: Vec<f64> = (0..circuit.n_params()).map(|k| 0.1 * k as f64).collect();
    let a = circuit.run(&params, &QuantumState::zero(4))?;
    let b = circuit.run(&params, &QuantumState::random_seeded(4, 3))?;
    println!("output norm {:.15}", a.norm());

    let exact = fidelity(&a, &b)?;
    for shots in [100, 10_000, 1_000_000] {
        let est = swap_test_estimate(&a, &b, shots, 5)?;
        println!("SWAP test, {shots:>7} shots: {est:.4} (exact {exact:.4})");
    }
    Ok(())
}
