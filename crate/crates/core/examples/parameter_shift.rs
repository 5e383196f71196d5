//! Parameter-shift gradients of a circuit expectation, checked against
//! central differences, and the reverse-mode form used in training.

use qasc::qsim::{
    build_qasc_circuit, measure_probabilities, parameter_shift_gradient, shift_rule_vjp,
    QuantumState, C64,
};

/// ⟨Z⟩ on qubit 0.
fn z0(state: &QuantumState) -> f64 {
    measure_probabilities(state)
        .probs
        .iter()
        .enumerate()
        .map(|(i, p)| if i & 1 == 0 { *p } else { -*p })
        .sum()
}

fn main() -> qasc::Result<()> {
    let circuit = build_qasc_circuit(3, 2)?;
    let params: Vec<f64> = (0..circuit.n_params())
        .map(|k| (k as f64 * 0.7).sin())
        .collect();
    let init = QuantumState::zero(3);
    let shift = parameter_shift_gradient(&circuit, &params, &init, z0)?;

    let h = 1e-6;
    let mut worst = 0.0f64;
    for k in 0..params.len() {
        let mut p = params.clone();
        p[k] += h;
        let up = z0(&circuit.run(&p, &init)?);
        p[k] -= 2.0 * h;
        let down = z0(&circuit.run(&p, &init)?);
        worst = worst.max((shift[k] - (up - down) / (2.0 * h)).abs());
    }
    println!(
        "{} parameters, max |shift − FD| = {worst:.2e}",
        params.len()
    );

    // d⟨Z⟩/dψ̄ for ⟨ψ|Z|ψ⟩ is 2·Zψ; feeding it back reproduces the same gradient
    let out = circuit.run(&params, &init)?;
    let cotangent: Vec<C64> = out
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| if i & 1 == 0 { 2.0 * a } else { -2.0 * a })
        .collect();
    let (vjp, _) = shift_rule_vjp(&circuit, &params, init.amplitudes(), &cotangent)?;
    let diff = vjp
        .iter()
        .zip(&shift)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("reverse-mode vs shift rule: max difference {diff:.2e}");
    Ok(())
}
