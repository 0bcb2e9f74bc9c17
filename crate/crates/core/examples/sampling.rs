//! Sampling a dataset from a model, fitting it back by maximum likelihood and
//! round-tripping the fitted model through its text format.

use spn_constraints::circuit::{full_joint_circuit, Variable};
use spn_constraints::dataio::{load_csv, load_model, log_likelihood};
use spn_constraints::optimizer::{fit_mle, TrainConfig};
use spn_constraints::oracle::{enumerate_joint, sample_dataset, JointTable};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let vars = Variable::list(&["rain", "sprinkler", "wet"])?;
    let probs = [0.30, 0.02, 0.05, 0.01, 0.03, 0.18, 0.16, 0.25];
    let truth = JointTable::new(vars.clone(), probs.to_vec())?;

    let data = sample_dataset(&truth, 5000, 9)?;
    let csv = data.to_csv();
    println!("{}", csv.lines().take(4).collect::<Vec<_>>().join("\n"));
    assert_eq!(load_csv(&csv)?, data);

    let start = full_joint_circuit(vars, &[0.125; 8])?;
    let (fitted, report) = fit_mle(&start, &data, &TrainConfig::mle())?;
    println!("{} after {} steps", report.termination, report.iterations);
    println!(
        "average log-likelihood {:.6}",
        log_likelihood(&fitted, &data)?
    );

    let text = fitted.to_text();
    let reloaded = load_model(&text)?;
    assert_eq!(reloaded.weights(), fitted.weights());
    for (p, q) in enumerate_joint(&reloaded)?.probs().iter().zip(probs) {
        println!("fitted {p:.4}  true {q:.4}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
