//! Do-queries on the chain X1 → X2. Intervening on the child leaves the
//! parent's distribution alone; intervening on the parent moves the child.

use spn_constraints::circuit::{full_joint_circuit, Assignment, Variable};
use spn_constraints::constraints::{compile, InterventionalEquality};
use spn_constraints::oracle::JointTable;

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    // P(X1=1)=0.6, P(X2=1|X1=1)=0.9, P(X2=1|X1=0)=0.2
    let probs = [0.32, 0.06, 0.08, 0.54];
    let vars = Variable::numbered(2);
    let chain = full_joint_circuit(vars.clone(), &probs)?;
    let table = JointTable::new(vars.clone(), probs.to_vec())?;

    let x1 = Assignment::new().with(0, true);
    let x2 = Assignment::new().with(1, true);
    let do_child = chain.interventional(&x1, 1, true, &[0])?;
    let see_child = chain.conditional(&x1, &x2)?;
    println!("P(X1=1 | do(X2=1)) = {do_child:.12}");
    println!("P(X1=1 | X2=1)     = {see_child:.12}");
    let oracle = table.intervene(1, true, &[0])?.marginal(&x1)?;
    assert!((do_child - oracle).abs() < 1e-12);

    let do_parent = chain.interventional(&x2, 0, true, &[])?;
    println!("P(X2=1 | do(X1=1)) = {do_parent:.12}");

    let constraint = InterventionalEquality {
        intervened: 1,
        parents: vec![0],
        targets: Some(vec![0]),
    };
    let system = compile(&constraint.into(), &chain)?;
    for (line, v) in system.render(&vars).iter().zip(system.values(&chain)?) {
        println!("{line}    = {v:+.1e}");
        assert!(v.abs() < 1e-12);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
