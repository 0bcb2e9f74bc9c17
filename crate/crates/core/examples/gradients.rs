//! Reverse-mode weight gradients of a random mixture circuit against central
//! finite differences.

use spn_constraints::circuit::{mixture_circuit, Assignment, Variable};
use spn_constraints::oracle::seeded_rng;

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = seeded_rng(17);
    let circuit = mixture_circuit(Variable::numbered(5), 3, &mut rng)?;
    let query = Assignment::new().with(0, true).with(3, false);

    let (p, grad) = circuit.marginal_and_gradient(&query)?;
    println!("P(X1=1,X4=0) = {p:.12} over {} weights", grad.len());

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (k, g) in grad.iter().enumerate() {
        let mut w = circuit.weights().to_vec();
        w[k] += h;
        let up = circuit.with_weights(&w)?.marginal(&query)?;
        w[k] -= 2.0 * h;
        let down = circuit.with_weights(&w)?.marginal(&query)?;
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((g - fd).abs() / g.abs().max(1e-3));
    }
    println!("max relative error {worst:.2e}");
    assert!(worst < 1e-5);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
