//! Compiles `X1 ⟂ X2` against the 3-variable full-joint circuit and compares
//! the four residuals with the same equations written out by hand over the
//! eight state weights.

use rand::Rng;
use spn_constraints::circuit::{full_joint_circuit, Variable};
use spn_constraints::constraints::{compile, Independence};
use spn_constraints::oracle::seeded_rng;

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let vars = Variable::numbered(3);
    let mut circuit = full_joint_circuit(vars.clone(), &[0.125; 8])?;
    let system = compile(&Independence::marginal(0, 1).into(), &circuit)?;
    for line in system.render(&vars) {
        println!("{line}");
    }

    let mut rng = seeded_rng(5);
    let raw: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|x| x / s).collect();
    circuit.set_weights(&w)?;

    // state index = X1 + 2·X2 + 4·X3
    let p = |x1: bool, x2: bool| -> f64 {
        (0..8)
            .filter(|i| (i & 1 == 1) == x1 && (i & 2 == 2) == x2)
            .map(|i| w[i])
            .sum()
    };
    let p1 = |x1: bool| p(x1, true) + p(x1, false);
    let p2 = |x2: bool| p(true, x2) + p(false, x2);
    let by_hand = [
        p(true, true) - p1(true) * p2(true),
        p(true, false) - p1(true) * p2(false),
        p(false, true) - p1(false) * p2(true),
        p(false, false) - p1(false) * p2(false),
    ];
    for (got, want) in system.values(&circuit)?.iter().zip(by_hand) {
        println!("{got:+.3e}  {want:+.3e}");
        assert!((got - want).abs() < 1e-12);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
