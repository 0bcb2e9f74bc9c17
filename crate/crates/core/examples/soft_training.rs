//! Penalized training: data where X1 and X2 are strongly dependent, fitted
//! under an independence constraint at increasing penalty weights.

use spn_constraints::circuit::{full_joint_circuit, Variable};
use spn_constraints::constraints::{compile, Independence};
use spn_constraints::optimizer::{fit_soft, TrainConfig};
use spn_constraints::oracle::{enumerate_joint, sample_dataset, JointTable};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let vars = Variable::numbered(2);
    let truth = JointTable::new(vars.clone(), vec![0.4, 0.1, 0.1, 0.4])?;
    let data = sample_dataset(&truth, 1000, 42)?;
    let circuit = full_joint_circuit(vars, &[0.25; 4])?;
    let system = compile(&Independence::marginal(0, 1).into(), &circuit)?;

    println!(
        "{:>8} {:>12} {:>12} {:>8}",
        "lambda", "loglik", "max|C|", "iters"
    );
    for lambda in [0.0, 1.0, 10.0, 100.0, 1000.0] {
        let config = TrainConfig::soft(vec![lambda; system.len()]);
        let (fitted, report) = fit_soft(&circuit, &data, &system, &config)?;
        println!(
            "{:>8} {:>12.6} {:>12.3e} {:>8}",
            lambda,
            report.final_log_likelihood,
            report.max_abs_residual(),
            report.iterations
        );
        if lambda == 1000.0 {
            let t = enumerate_joint(&fitted)?;
            let p = |a: usize| t.probs()[a];
            let gap = p(3) / (p(2) + p(3)) - p(1) / (p(0) + p(1));
            println!("P(X1=1|X2=1) - P(X1=1|X2=0) = {gap:.2e}");
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
