//! Equality-constrained training by augmented Lagrangian: the fitted model
//! must give X1 the same distribution whether X2 is 0 or 1.

use spn_constraints::circuit::{full_joint_circuit, Variable};
use spn_constraints::constraints::{compile, ConditionalEquality, Constraint};
use spn_constraints::optimizer::{fit_hard, TrainConfig};
use spn_constraints::oracle::{check_constraint, enumerate_joint, sample_dataset, JointTable};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let vars = Variable::numbered(2);
    let truth = JointTable::new(vars.clone(), vec![0.4, 0.1, 0.1, 0.4])?;
    let data = sample_dataset(&truth, 1000, 42)?;
    let circuit = full_joint_circuit(vars.clone(), &[0.25; 4])?;

    let constraint: Constraint = ConditionalEquality::new(0, 1).into();
    println!("{}", constraint.render(&vars));
    let system = compile(&constraint, &circuit)?;
    let (fitted, report) = fit_hard(&circuit, &data, &system, &TrainConfig::hard())?;
    print!("{}", report.render());

    let check = check_constraint(&enumerate_joint(&fitted)?, &constraint, 1e-6)?;
    println!("oracle violation {:.2e}", check.max_violation);
    assert!(check.satisfied);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
