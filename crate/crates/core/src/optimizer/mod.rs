//! Maximum-likelihood fitting of circuit weights, optionally under a
//! residual system.
//!
//! All three modes run projected gradient ascent on a penalized average
//! log-likelihood, keeping every sum node's weights on the probability
//! simplex after each step:
//!
//! * `mle`:  `L(w)`
//! * `soft`: `L(w) − Σ λ_k C_k(w)²`
//! * `hard`: augmented Lagrangian `L(w) − Σ λ_k C_k(w) − (μ/2) Σ C_k(w)²`,
//!   with multiplier updates `λ_k ← λ_k + μ C_k` between inner solves.

mod simplex;

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::circuit::{Assignment, Circuit, CircuitError};
use crate::constraints::ResidualSystem;
use crate::dataio::{DataError, Dataset, LOG_FLOOR};
use crate::oracle::seeded_rng;

pub use simplex::{project_blocks, project_simplex};

/// Maximum number of step halvings per iteration.
pub const MAX_HALVINGS: u32 = 20;
/// Penalty weight at which hard mode gives up.
pub const MU_LIMIT: f64 = 1e12;
const ARMIJO: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Mle,
    Soft,
    Hard,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Mle => "mle",
            Mode::Soft => "soft",
            Mode::Hard => "hard",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Init {
    /// Equal weights within each sum node.
    Uniform,
    /// Symmetric Dirichlet(1) per sum node from the seeded generator.
    Dirichlet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    /// Gradient steps (mle, soft) or outer multiplier updates (hard).
    pub max_iters: usize,
    /// Gradient steps per inner solve in hard mode.
    pub inner_iters: usize,
    pub step_size: f64,
    pub tol_grad: f64,
    pub tol_residual: f64,
    /// Soft-mode penalty weights, one per residual.
    pub penalty_weights: Vec<f64>,
    /// Hard mode: initial quadratic penalty `μ`.
    pub mu: f64,
    /// Hard mode: growth factor `ρ` applied to `μ` when the residual norm
    /// fails to halve.
    pub mu_growth: f64,
    /// Hard mode: initial multipliers; empty means all zero.
    pub multipliers: Vec<f64>,
    pub seed: u64,
    pub init: Init,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::Mle,
            max_iters: 20_000,
            inner_iters: 5_000,
            step_size: 0.05,
            tol_grad: 1e-9,
            tol_residual: 1e-8,
            penalty_weights: Vec::new(),
            mu: 10.0,
            mu_growth: 10.0,
            multipliers: Vec::new(),
            seed: 0,
            init: Init::Uniform,
        }
    }
}

impl TrainConfig {
    pub fn mle() -> Self {
        TrainConfig::default()
    }

    pub fn soft(penalty_weights: Vec<f64>) -> Self {
        TrainConfig {
            mode: Mode::Soft,
            penalty_weights,
            ..TrainConfig::default()
        }
    }

    pub fn hard() -> Self {
        TrainConfig {
            mode: Mode::Hard,
            max_iters: 60,
            ..TrainConfig::default()
        }
    }

    fn check(&self, residuals: usize) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.max_iters == 0 || self.inner_iters == 0 {
            return bad("iteration limits must be positive");
        }
        if !(self.step_size > 0.0 && self.tol_grad > 0.0 && self.tol_residual > 0.0) {
            return bad("step size and tolerances must be positive");
        }
        match self.mode {
            Mode::Mle => {}
            Mode::Soft => {
                if self.penalty_weights.len() != residuals {
                    return Err(TrainError::Config(format!(
                        "{} penalty weights for {} residuals",
                        self.penalty_weights.len(),
                        residuals
                    )));
                }
                if self
                    .penalty_weights
                    .iter()
                    .any(|l| !(*l >= 0.0 && l.is_finite()))
                {
                    return bad("penalty weights must be non-negative");
                }
            }
            Mode::Hard => {
                if !(self.mu > 0.0 && self.mu_growth > 1.0) {
                    return bad("hard mode needs mu > 0 and growth > 1");
                }
                if !self.multipliers.is_empty() && self.multipliers.len() != residuals {
                    return Err(TrainError::Config(format!(
                        "{} multipliers for {} residuals",
                        self.multipliers.len(),
                        residuals
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIters,
    NumericalFailure,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::MaxIters => "max-iters",
            Termination::NumericalFailure => "numerical-failure",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub mode: Mode,
    /// Accepted gradient steps over the whole run.
    pub iterations: usize,
    /// Multiplier updates (hard mode only).
    pub outer_iterations: usize,
    pub final_log_likelihood: f64,
    pub final_residuals: Vec<f64>,
    /// Objective value after every gradient step.
    pub trace: Vec<f64>,
    pub termination: Termination,
    /// Final Lagrange multipliers (hard mode only).
    pub multipliers: Vec<f64>,
    pub final_grad_norm: f64,
    /// Rows whose probability sits below the log floor at the final weights.
    pub zero_probability_rows: usize,
}

impl TrainReport {
    pub fn max_abs_residual(&self) -> f64 {
        self.final_residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Human-readable table followed by `key=value` lines.
    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("{:<22} {}\n", "mode", self.mode));
        s.push_str(&format!("{:<22} {}\n", "termination", self.termination));
        s.push_str(&format!("{:<22} {}\n", "iterations", self.iterations));
        if self.mode == Mode::Hard {
            s.push_str(&format!(
                "{:<22} {}\n",
                "outer iterations", self.outer_iterations
            ));
        }
        s.push_str(&format!(
            "{:<22} {:.12}\n",
            "log-likelihood", self.final_log_likelihood
        ));
        s.push_str(&format!(
            "{:<22} {:.3e}\n",
            "max |residual|",
            self.max_abs_residual()
        ));
        s.push_str(&format!(
            "{:<22} {:.3e}\n",
            "projected grad norm", self.final_grad_norm
        ));
        if self.zero_probability_rows > 0 {
            s.push_str(&format!(
                "{:<22} {}\n",
                "zero-probability rows", self.zero_probability_rows
            ));
        }
        for (k, r) in self.final_residuals.iter().enumerate() {
            s.push_str(&format!("  residual[{k}] = {r:+.6e}\n"));
        }
        s.push_str("--\n");
        s.push_str(&format!("mode={}\n", self.mode));
        s.push_str(&format!("termination={}\n", self.termination));
        s.push_str(&format!("iterations={}\n", self.iterations));
        s.push_str(&format!("outer_iterations={}\n", self.outer_iterations));
        s.push_str(&format!("log_likelihood={:e}\n", self.final_log_likelihood));
        s.push_str(&format!("max_abs_residual={:e}\n", self.max_abs_residual()));
        s.push_str(&format!("grad_norm={:e}\n", self.final_grad_norm));
        s.push_str(&format!(
            "zero_probability_rows={}\n",
            self.zero_probability_rows
        ));
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:e}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        s.push_str(&format!("residuals={}\n", join(&self.final_residuals)));
        s.push_str(&format!("multipliers={}\n", join(&self.multipliers)));
        s
    }
}

enum Penalty<'a> {
    None,
    Squared { lambda: &'a [f64] },
    Augmented { lambda: &'a [f64], mu: f64 },
}

/// Penalized log-likelihood over a fixed dataset.
struct Objective<'a> {
    rows: Vec<(Assignment, f64)>,
    counts: Vec<usize>,
    system: Option<&'a ResidualSystem>,
}

struct Evaluation {
    value: f64,
    log_likelihood: f64,
    grad: Vec<f64>,
}

impl<'a> Objective<'a> {
    fn new(data: &Dataset, system: Option<&'a ResidualSystem>) -> Self {
        let m = data.len() as f64;
        let (rows, counts) = data
            .counts()
            .into_iter()
            .map(|(a, n)| ((a, n as f64 / m), n))
            .unzip();
        Objective {
            rows,
            counts,
            system,
        }
    }

    fn log_likelihood(&self, c: &Circuit) -> Result<f64, CircuitError> {
        let z = c.partition()?;
        let mut ll = 0.0;
        for (row, frac) in &self.rows {
            ll += frac * (c.evaluate(row)? / z).max(LOG_FLOOR).ln();
        }
        Ok(ll)
    }

    fn penalty_value(residuals: &[f64], penalty: &Penalty) -> f64 {
        match penalty {
            Penalty::None => 0.0,
            Penalty::Squared { lambda } => {
                residuals.iter().zip(*lambda).map(|(c, l)| l * c * c).sum()
            }
            Penalty::Augmented { lambda, mu } => residuals
                .iter()
                .zip(*lambda)
                .map(|(c, l)| l * c + 0.5 * mu * c * c)
                .sum(),
        }
    }

    fn value(&self, c: &Circuit, penalty: &Penalty) -> Result<f64, CircuitError> {
        let ll = self.log_likelihood(c)?;
        let residuals = match (self.system, penalty) {
            (Some(s), Penalty::Squared { .. } | Penalty::Augmented { .. }) => s.values(c)?,
            _ => Vec::new(),
        };
        Ok(ll - Self::penalty_value(&residuals, penalty))
    }

    fn evaluate(&self, c: &Circuit, penalty: &Penalty) -> Result<Evaluation, CircuitError> {
        let n = c.num_weights();
        let (z, grad_z) = c.value_and_gradient(&Assignment::new())?;
        if !(z > 0.0 && z.is_finite()) {
            return Err(CircuitError::Degenerate(z));
        }
        let mut ll = 0.0;
        let mut grad = vec![0.0; n];
        for (row, frac) in &self.rows {
            let (s, gs) = c.value_and_gradient(row)?;
            let p = s / z;
            if p < LOG_FLOOR {
                ll += frac * LOG_FLOOR.ln();
                continue;
            }
            ll += frac * p.ln();
            for ((g, a), b) in grad.iter_mut().zip(&gs).zip(&grad_z) {
                *g += frac * (a / s - b / z);
            }
        }

        let mut value = ll;
        if let (Some(system), false) = (self.system, matches!(penalty, Penalty::None)) {
            let (r, jac) = system.values_and_jacobian(c)?;
            value -= Self::penalty_value(&r, penalty);
            for (k, row) in jac.iter().enumerate() {
                let coeff = match penalty {
                    Penalty::None => 0.0,
                    Penalty::Squared { lambda } => 2.0 * lambda[k] * r[k],
                    Penalty::Augmented { lambda, mu } => lambda[k] + mu * r[k],
                };
                if coeff != 0.0 {
                    for (g, j) in grad.iter_mut().zip(row) {
                        *g -= coeff * j;
                    }
                }
            }
        }
        Ok(Evaluation {
            value,
            log_likelihood: ll,
            grad,
        })
    }
}

fn projected_step(w: &[f64], g: &[f64], eta: f64, blocks: &[std::ops::Range<usize>]) -> Vec<f64> {
    let mut next: Vec<f64> = w.iter().zip(g).map(|(x, d)| x + eta * d).collect();
    project_blocks(&mut next, blocks);
    next
}

fn grad_norm(w: &[f64], g: &[f64], eta: f64, blocks: &[std::ops::Range<usize>]) -> f64 {
    let next = projected_step(w, g, eta, blocks);
    next.iter()
        .zip(w)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
        / eta
}

struct Ascent {
    converged: bool,
    failed: bool,
    grad_norm: f64,
}

/// Projected gradient ascent with backtracking. Each iteration starts from
/// the last accepted step (capped at `config.step_size`) doubled, and halves
/// it until the Armijo condition holds.
fn ascend(
    circuit: &mut Circuit,
    objective: &Objective,
    penalty: &Penalty,
    max_steps: usize,
    config: &TrainConfig,
    trace: &mut Vec<f64>,
) -> Result<Ascent, CircuitError> {
    let blocks = circuit.sum_blocks();
    let mut eval = objective.evaluate(circuit, penalty)?;
    let mut eta = config.step_size;
    let mut steps = 0;
    loop {
        if !eval.value.is_finite() || eval.grad.iter().any(|g| !g.is_finite()) {
            return Ok(Ascent {
                converged: false,
                failed: true,
                grad_norm: f64::NAN,
            });
        }
        let w = circuit.weights().to_vec();
        let norm = grad_norm(&w, &eval.grad, config.step_size, &blocks);
        if norm < config.tol_grad {
            return Ok(Ascent {
                converged: true,
                failed: false,
                grad_norm: norm,
            });
        }
        if steps >= max_steps {
            return Ok(Ascent {
                converged: false,
                failed: false,
                grad_norm: norm,
            });
        }

        eta = (2.0 * eta).min(config.step_size);
        let roundoff = 4.0 * f64::EPSILON * eval.value.abs().max(1.0);
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let next = projected_step(&w, &eval.grad, eta, &blocks);
            circuit.set_weights(&next)?;
            let value = objective.value(circuit, penalty)?;
            let gain: f64 = eval
                .grad
                .iter()
                .zip(next.iter().zip(&w))
                .map(|(g, (a, b))| g * (a - b))
                .sum();
            if value >= eval.value + ARMIJO * gain
                || (value >= eval.value - roundoff && eta < config.step_size * 1e-3)
            {
                accepted = Some(next);
                break;
            }
            eta *= 0.5;
        }
        match accepted {
            Some(_) => {
                eval = objective.evaluate(circuit, penalty)?;
                trace.push(eval.value);
                steps += 1;
            }
            None => {
                // no ascent direction left at working precision
                circuit.set_weights(&w)?;
                return Ok(Ascent {
                    converged: true,
                    failed: false,
                    grad_norm: norm,
                });
            }
        }
    }
}

/// Weights drawn per `config.init`.
pub fn initial_weights(circuit: &Circuit, config: &TrainConfig) -> Vec<f64> {
    let mut w = vec![0.0; circuit.num_weights()];
    let mut rng = seeded_rng(config.seed);
    for block in circuit.sum_blocks() {
        let k = block.len() as f64;
        match config.init {
            Init::Uniform => w[block].iter_mut().for_each(|x| *x = 1.0 / k),
            Init::Dirichlet => {
                let draws: Vec<f64> = (0..block.len())
                    .map(|_| -(1.0 - rng.random::<f64>()).ln())
                    .collect();
                let s: f64 = draws.iter().sum();
                for (x, d) in w[block].iter_mut().zip(draws) {
                    *x = d / s;
                }
            }
        }
    }
    w
}

fn prepare(
    circuit: &Circuit,
    data: &Dataset,
    config: &TrainConfig,
) -> Result<(Circuit, Dataset), TrainError> {
    if data.is_empty() {
        return Err(DataError::Empty.into());
    }
    let data = data.align_to(circuit.variables())?;
    let mut c = circuit.clone();
    c.set_weights(&initial_weights(circuit, config))?;
    Ok((c, data))
}

fn report(
    circuit: &Circuit,
    objective: &Objective,
    mode: Mode,
    trace: Vec<f64>,
    termination: Termination,
    grad_norm: f64,
) -> Result<TrainReport, TrainError> {
    let eval = objective.evaluate(circuit, &Penalty::None)?;
    let z = circuit.partition()?;
    let mut zero_rows = 0;
    for ((row, _), n) in objective.rows.iter().zip(&objective.counts) {
        if circuit.evaluate(row)? / z < LOG_FLOOR {
            zero_rows += n;
        }
    }
    let residuals = match objective.system {
        Some(s) => s.values(circuit)?,
        None => Vec::new(),
    };
    Ok(TrainReport {
        mode,
        iterations: trace.len(),
        outer_iterations: 0,
        final_log_likelihood: eval.log_likelihood,
        final_residuals: residuals,
        trace,
        termination,
        multipliers: Vec::new(),
        final_grad_norm: grad_norm,
        zero_probability_rows: zero_rows,
    })
}

fn finish(ascent: &Ascent) -> Termination {
    if ascent.failed {
        Termination::NumericalFailure
    } else if ascent.converged {
        Termination::Converged
    } else {
        Termination::MaxIters
    }
}

/// Unconstrained maximum likelihood.
pub fn fit_mle(
    circuit: &Circuit,
    data: &Dataset,
    config: &TrainConfig,
) -> Result<(Circuit, TrainReport), TrainError> {
    if config.mode != Mode::Mle {
        return Err(TrainError::Config(format!(
            "fit_mle called with mode {}",
            config.mode
        )));
    }
    config.check(0)?;
    let (mut c, data) = prepare(circuit, data, config)?;
    let objective = Objective::new(&data, None);
    let mut trace = Vec::new();
    let a = ascend(
        &mut c,
        &objective,
        &Penalty::None,
        config.max_iters,
        config,
        &mut trace,
    )?;
    let r = report(&c, &objective, Mode::Mle, trace, finish(&a), a.grad_norm)?;
    Ok((c, r))
}

/// Maximizes `L(w) − Σ λ_k C_k(w)²`.
pub fn fit_soft(
    circuit: &Circuit,
    data: &Dataset,
    system: &ResidualSystem,
    config: &TrainConfig,
) -> Result<(Circuit, TrainReport), TrainError> {
    if config.mode != Mode::Soft {
        return Err(TrainError::Config(format!(
            "fit_soft called with mode {}",
            config.mode
        )));
    }
    config.check(system.len())?;
    let (mut c, data) = prepare(circuit, data, config)?;
    let objective = Objective::new(&data, Some(system));
    let penalty = Penalty::Squared {
        lambda: &config.penalty_weights,
    };
    let mut trace = Vec::new();
    let a = ascend(
        &mut c,
        &objective,
        &penalty,
        config.max_iters,
        config,
        &mut trace,
    )?;
    let r = report(&c, &objective, Mode::Soft, trace, finish(&a), a.grad_norm)?;
    Ok((c, r))
}

/// Augmented-Lagrangian solve of `max L(w) s.t. C_k(w) = 0`.
pub fn fit_hard(
    circuit: &Circuit,
    data: &Dataset,
    system: &ResidualSystem,
    config: &TrainConfig,
) -> Result<(Circuit, TrainReport), TrainError> {
    if config.mode != Mode::Hard {
        return Err(TrainError::Config(format!(
            "fit_hard called with mode {}",
            config.mode
        )));
    }
    config.check(system.len())?;
    let (mut c, data) = prepare(circuit, data, config)?;
    let objective = Objective::new(&data, Some(system));
    let mut lambda = if config.multipliers.is_empty() {
        vec![0.0; system.len()]
    } else {
        config.multipliers.clone()
    };
    let mut mu = config.mu;
    let mut previous = f64::INFINITY;
    let mut trace = Vec::new();
    let mut termination = Termination::MaxIters;
    let mut outer = 0;
    let mut last_norm = f64::NAN;

    while outer < config.max_iters {
        outer += 1;
        let penalty = Penalty::Augmented {
            lambda: &lambda,
            mu,
        };
        let a = ascend(
            &mut c,
            &objective,
            &penalty,
            config.inner_iters,
            config,
            &mut trace,
        )?;
        last_norm = a.grad_norm;
        if a.failed {
            termination = Termination::NumericalFailure;
            break;
        }
        let r = system.values(&c)?;
        let violation = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !violation.is_finite() {
            termination = Termination::NumericalFailure;
            break;
        }
        if violation < config.tol_residual && a.converged {
            termination = Termination::Converged;
            break;
        }
        for (l, x) in lambda.iter_mut().zip(&r) {
            *l += mu * x;
        }
        if violation > 0.5 * previous {
            mu *= config.mu_growth;
        }
        previous = violation;
        if mu > MU_LIMIT {
            termination = Termination::NumericalFailure;
            break;
        }
    }

    let mut r = report(&c, &objective, Mode::Hard, trace, termination, last_norm)?;
    r.outer_iterations = outer;
    r.multipliers = lambda;
    Ok((c, r))
}

/// Dispatches on `config.mode`; `system` is required for soft and hard modes.
pub fn fit(
    circuit: &Circuit,
    data: &Dataset,
    system: Option<&ResidualSystem>,
    config: &TrainConfig,
) -> Result<(Circuit, TrainReport), TrainError> {
    match (config.mode, system) {
        (Mode::Mle, _) => fit_mle(circuit, data, config),
        (Mode::Soft, Some(s)) => fit_soft(circuit, data, s, config),
        (Mode::Hard, Some(s)) => fit_hard(circuit, data, s, config),
        (mode, None) => Err(TrainError::Config(format!("mode {mode} needs constraints"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{full_joint_circuit, Variable};
    use crate::constraints::{compile, ConditionalEquality, Constraint, Independence};
    use crate::oracle::{enumerate_joint, sample_dataset, JointTable};

    fn pair_data(seed: u64) -> Dataset {
        let t = JointTable::new(Variable::numbered(2), vec![0.4, 0.1, 0.1, 0.4]).unwrap();
        sample_dataset(&t, 1000, seed).unwrap()
    }

    fn pair_circuit() -> Circuit {
        full_joint_circuit(Variable::numbered(2), &[0.25; 4]).unwrap()
    }

    fn empirical(data: &Dataset) -> Vec<f64> {
        let mut f = vec![0.0; 4];
        for r in data.rows() {
            f[usize::from(r[0]) + 2 * usize::from(r[1])] += 1.0 / data.len() as f64;
        }
        f
    }

    #[test]
    fn mle_recovers_empirical_frequencies() {
        let data = pair_data(42);
        let (fitted, report) = fit_mle(&pair_circuit(), &data, &TrainConfig::mle()).unwrap();
        assert_eq!(report.termination, Termination::Converged);
        let table = enumerate_joint(&fitted).unwrap();
        for (p, f) in table.probs().iter().zip(empirical(&data)) {
            assert!((p - f).abs() < 1e-6, "{p} vs {f}");
        }
        assert_eq!(report.trace.len(), report.iterations);
    }

    #[test]
    fn mle_on_a_single_repeated_row() {
        let data = Dataset::new(Variable::numbered(2), vec![vec![true, true]; 10]).unwrap();
        let (fitted, _) = fit_mle(&pair_circuit(), &data, &TrainConfig::mle()).unwrap();
        let table = enumerate_joint(&fitted).unwrap();
        assert!((table.probs()[3] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mle_on_uniform_data_stays_uniform() {
        let rows = vec![
            vec![false, false],
            vec![true, false],
            vec![false, true],
            vec![true, true],
        ];
        let data = Dataset::new(Variable::numbered(2), rows).unwrap();
        let config = TrainConfig {
            init: Init::Dirichlet,
            seed: 3,
            ..TrainConfig::mle()
        };
        let (fitted, _) = fit_mle(&pair_circuit(), &data, &config).unwrap();
        for p in enumerate_joint(&fitted).unwrap().probs() {
            assert!((p - 0.25).abs() < 1e-6);
        }
    }

    #[test]
    fn soft_with_zero_penalty_matches_mle() {
        let data = pair_data(42);
        let c = pair_circuit();
        let system = compile(&Independence::marginal(0, 1).into(), &c).unwrap();
        let (mle, _) = fit_mle(&c, &data, &TrainConfig::mle()).unwrap();
        let (soft, _) = fit_soft(&c, &data, &system, &TrainConfig::soft(vec![0.0; 4])).unwrap();
        for (a, b) in mle.weights().iter().zip(soft.weights()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn soft_penalty_shrinks_residuals() {
        let data = pair_data(42);
        let c = pair_circuit();
        let system = compile(&Independence::marginal(0, 1).into(), &c).unwrap();
        let mut last = f64::INFINITY;
        for lambda in [0.0, 1.0, 10.0, 100.0, 1000.0] {
            let (_, r) = fit_soft(&c, &data, &system, &TrainConfig::soft(vec![lambda; 4])).unwrap();
            assert!(r.max_abs_residual() <= last + 1e-9);
            assert!(r.trace.last().unwrap() >= r.trace.first().unwrap());
            last = r.max_abs_residual();
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn soft_is_inactive_on_independent_data() {
        let rows = vec![
            vec![false, false],
            vec![true, false],
            vec![false, true],
            vec![true, true],
        ];
        let data = Dataset::new(Variable::numbered(2), rows).unwrap();
        let c = pair_circuit();
        let system = compile(&Independence::marginal(0, 1).into(), &c).unwrap();
        let (fitted, _) = fit_soft(&c, &data, &system, &TrainConfig::soft(vec![50.0; 4])).unwrap();
        for w in fitted.weights() {
            assert!((w - 0.25).abs() < 1e-4);
        }
    }

    #[test]
    fn hard_enforces_conditional_equality() {
        let data = pair_data(42);
        let c = pair_circuit();
        let constraint: Constraint = ConditionalEquality::new(0, 1).into();
        let system = compile(&constraint, &c).unwrap();
        let (fitted, r) = fit_hard(&c, &data, &system, &TrainConfig::hard()).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        let table = enumerate_joint(&fitted).unwrap();
        let check = crate::oracle::check_constraint(&table, &constraint, 1e-6).unwrap();
        assert!(check.satisfied, "{}", check.max_violation);
    }

    #[test]
    fn hard_terminates_on_infeasible_system() {
        use crate::constraints::{Provenance, Residual, ResidualSystem, ResidualTerm, Sign};
        let c = pair_circuit();
        let data = Dataset::new(Variable::numbered(2), vec![vec![true, true]; 5]).unwrap();
        let term = |v: bool| {
            let prov = Provenance {
                constraint: 0,
                kind: crate::constraints::ConstraintKind::Independence,
                case: String::new(),
                closed_world: false,
            };
            Residual {
                terms: vec![ResidualTerm::new(
                    Sign::Plus,
                    vec![Assignment::new().with(0, v)],
                )],
                provenance: prov,
            }
        };
        let system = ResidualSystem::new(vec![term(true), term(false)]);
        let config = TrainConfig {
            inner_iters: 200,
            ..TrainConfig::hard()
        };
        let (_, r) = fit_hard(&c, &data, &system, &config).unwrap();
        assert_eq!(r.termination, Termination::NumericalFailure);

        // Pr(X1=1) = 0 against data that only has X1=1 is reachable once every
        // row sits at the log floor
        let system = ResidualSystem::new(vec![term(true), term(true)]);
        let (_, r) = fit_hard(&c, &data, &system, &config).unwrap();
        assert!(r.outer_iterations <= config.max_iters);
        assert_eq!(r.zero_probability_rows, 5);
    }

    #[test]
    fn identical_seeds_give_identical_traces() {
        let data = pair_data(7);
        let c = pair_circuit();
        let system = compile(&Independence::marginal(0, 1).into(), &c).unwrap();
        let config = TrainConfig {
            init: Init::Dirichlet,
            seed: 11,
            ..TrainConfig::soft(vec![10.0; 4])
        };
        let (_, a) = fit_soft(&c, &data, &system, &config).unwrap();
        let (_, b) = fit_soft(&c, &data, &system, &config).unwrap();
        assert_eq!(a, b);
        let bits = |r: &TrainReport| r.trace.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn every_step_stays_on_the_simplex() {
        let mut rng = seeded_rng(2);
        let c = crate::circuit::mixture_circuit(Variable::numbered(3), 2, &mut rng).unwrap();
        let t = JointTable::new(
            Variable::numbered(3),
            vec![0.3, 0.1, 0.05, 0.05, 0.1, 0.1, 0.2, 0.1],
        )
        .unwrap();
        let data = sample_dataset(&t, 200, 5).unwrap();
        for steps in 1..=15 {
            let config = TrainConfig {
                max_iters: steps,
                init: Init::Dirichlet,
                ..TrainConfig::mle()
            };
            let (fitted, _) = fit_mle(&c, &data, &config).unwrap();
            for b in fitted.sum_blocks() {
                let w = &fitted.weights()[b];
                assert!(w.iter().all(|x| *x >= 0.0));
                assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn config_errors() {
        let data = pair_data(1);
        let c = pair_circuit();
        let system = compile(&Independence::marginal(0, 1).into(), &c).unwrap();
        assert!(matches!(
            fit_soft(&c, &data, &system, &TrainConfig::soft(vec![1.0; 3])),
            Err(TrainError::Config(_))
        ));
        let bad = TrainConfig {
            mu_growth: 1.0,
            ..TrainConfig::hard()
        };
        assert!(fit_hard(&c, &data, &system, &bad).is_err());
        assert!(fit(&c, &data, None, &TrainConfig::soft(vec![])).is_err());
    }
}
