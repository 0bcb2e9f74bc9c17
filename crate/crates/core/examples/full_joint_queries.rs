//! Marginal and conditional queries on a full-joint circuit, checked against
//! brute-force enumeration of the same table.

use spn_constraints::circuit::{full_joint_circuit, Assignment, Variable};
use spn_constraints::oracle::JointTable;

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    // X1 and X2 agree 80% of the time
    let probs = [0.4, 0.1, 0.1, 0.4];
    let vars = Variable::numbered(2);
    let circuit = full_joint_circuit(vars.clone(), &probs)?;
    let table = JointTable::new(vars, probs.to_vec())?;

    let x1 = Assignment::new().with(0, true);
    let x2 = Assignment::new().with(1, true);
    let not_x2 = Assignment::new().with(1, false);

    let queries = [
        ("P(X1=1)", circuit.marginal(&x1)?, table.marginal(&x1)?),
        (
            "P(X1=1 | X2=1)",
            circuit.conditional(&x1, &x2)?,
            table.conditional(&x1, &x2)?,
        ),
        (
            "P(X1=1 | X2=0)",
            circuit.conditional(&x1, &not_x2)?,
            table.conditional(&x1, &not_x2)?,
        ),
    ];
    for (name, got, want) in queries {
        println!("{name:<16} circuit {got:.12}  oracle {want:.12}");
        assert!((got - want).abs() < 1e-12);
    }
    assert!((circuit.conditional(&x1, &x2)? - 0.8).abs() < 1e-12);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
