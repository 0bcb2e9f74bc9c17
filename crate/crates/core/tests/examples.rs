// Every example under examples/ runs to completion.

#[path = "../examples/full_joint_queries.rs"]
mod full_joint_queries;

#[test]
fn full_joint_queries_runs() {
    full_joint_queries::run().unwrap();
}

#[path = "../examples/golden_independence.rs"]
mod golden_independence;

#[test]
fn golden_independence_runs() {
    golden_independence::run().unwrap();
}

#[path = "../examples/gradients.rs"]
mod gradients;

#[test]
fn gradients_runs() {
    gradients::run().unwrap();
}

#[path = "../examples/soft_training.rs"]
mod soft_training;

#[test]
fn soft_training_runs() {
    soft_training::run().unwrap();
}

#[path = "../examples/hard_training.rs"]
mod hard_training;

#[test]
fn hard_training_runs() {
    hard_training::run().unwrap();
}

#[path = "../examples/interventions.rs"]
mod interventions;

#[test]
fn interventions_runs() {
    interventions::run().unwrap();
}

#[path = "../examples/sampling.rs"]
mod sampling;

#[test]
fn sampling_runs() {
    sampling::run().unwrap();
}

#[path = "../examples/validation.rs"]
mod validation;

#[test]
fn validation_runs() {
    validation::run().unwrap();
}
