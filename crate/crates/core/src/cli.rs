//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed validation or verification, 2 input
//! error, 3 training hit its iteration limit, 4 training failed numerically.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::circuit::{self, Assignment, Circuit, Variable};
use crate::constraints::{compile_all, parse_constraints, Constraint};
use crate::dataio::{load_csv, load_model};
use crate::optimizer::{fit, Init, Mode, Termination, TrainConfig};
use crate::oracle::{check_constraint, enumerate_joint, sample_dataset};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_MAX_ITERS: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "spnc",
    version,
    about = "Sum-product networks with probabilistic constraints"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Mle,
    Soft,
    Hard,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum InitArg {
    Uniform,
    Dirichlet,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check structural validity of a model file.
    Validate {
        #[arg(long)]
        model: PathBuf,
    },
    /// Fit model weights to a dataset.
    Train {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        constraints: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Penalty weights (soft) or initial multipliers (hard); one value is
        /// broadcast to every residual.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        lambda: Vec<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        tol_grad: Option<f64>,
        #[arg(long)]
        tol_residual: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "uniform")]
        init: InitArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate `P(...)`, `P(... | ...)` or `P(... | do(V=x) ; parents=...)`.
    Query {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        expr: String,
    },
    /// Check every constraint against the model.
    Verify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        constraints: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Print the residual system compiled from a constraint file.
    Compile {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        constraints: PathBuf,
    },
    /// Draw a CSV dataset from the model's joint distribution.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Input problem reported on stderr with exit code 2.
#[derive(Debug)]
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

type Outcome = Result<i32, InputError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(InputError(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INPUT
        }
    }
}

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn model(path: &Path) -> Result<Circuit, InputError> {
    load_model(&read(path)?).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn constraints(path: &Path, vars: &[Variable]) -> Result<Vec<Constraint>, InputError> {
    parse_constraints(&read(path)?, vars)
        .map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), InputError> {
    fs::write(path, text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    match command {
        Command::Validate { model } => {
            let text = read(&model)?;
            let c = circuit::parse_model(&text)
                .map_err(|e| InputError(format!("{}: {e}", model.display())))?;
            let report = c.validate();
            if report.is_valid() {
                writeln!(out, "valid")?;
                Ok(EXIT_OK)
            } else {
                for v in &report.violations {
                    writeln!(out, "{v}")?;
                }
                Ok(EXIT_FAILED)
            }
        }
        Command::Train {
            model: model_path,
            data,
            constraints: constraint_path,
            mode,
            lambda,
            max_iters,
            step,
            tol_grad,
            tol_residual,
            seed,
            init,
            out: out_path,
        } => {
            let c = model(&model_path)?;
            let dataset = load_csv(&read(&data)?)
                .map_err(|e| InputError(format!("{}: {e}", data.display())))?;
            let dataset = dataset.align_to(c.variables())?;
            let mode = match mode {
                ModeArg::Mle => Mode::Mle,
                ModeArg::Soft => Mode::Soft,
                ModeArg::Hard => Mode::Hard,
            };
            let system = match (mode, constraint_path) {
                (Mode::Mle, Some(_)) => {
                    writeln!(err, "warning: --constraints is ignored in mle mode")?;
                    None
                }
                (Mode::Mle, None) => None,
                (_, None) => return Err(InputError(format!("mode {mode} requires --constraints"))),
                (_, Some(p)) => Some(compile_all(&constraints(&p, c.variables())?, &c)?),
            };
            let k = system.as_ref().map_or(0, |s| s.len());
            let lambda = match lambda.len() {
                0 => Vec::new(),
                1 => vec![lambda[0]; k],
                n if n == k => lambda,
                n => return Err(InputError(format!("{n} --lambda values for {k} residuals"))),
            };
            let mut config = match mode {
                Mode::Mle => TrainConfig::mle(),
                Mode::Soft => {
                    if lambda.is_empty() && k > 0 {
                        return Err(InputError("soft mode requires --lambda".into()));
                    }
                    TrainConfig::soft(lambda)
                }
                Mode::Hard => TrainConfig {
                    multipliers: lambda,
                    ..TrainConfig::hard()
                },
            };
            if let Some(v) = max_iters {
                config.max_iters = v;
            }
            if let Some(v) = step {
                config.step_size = v;
            }
            if let Some(v) = tol_grad {
                config.tol_grad = v;
            }
            if let Some(v) = tol_residual {
                config.tol_residual = v;
            }
            config.seed = seed;
            config.init = match init {
                InitArg::Uniform => Init::Uniform,
                InitArg::Dirichlet => Init::Dirichlet,
            };
            let (fitted, report) = fit(&c, &dataset, system.as_ref(), &config)?;
            write_file(&out_path, &fitted.to_text())?;
            write!(out, "{}", report.render())?;
            Ok(match report.termination {
                Termination::Converged => EXIT_OK,
                Termination::MaxIters => EXIT_MAX_ITERS,
                Termination::NumericalFailure => EXIT_NUMERICAL,
            })
        }
        Command::Query { model: path, expr } => {
            let c = model(&path)?;
            let p = evaluate_query(&c, &expr)?;
            writeln!(out, "{}", format_probability(p))?;
            Ok(EXIT_OK)
        }
        Command::Verify {
            model: path,
            constraints: cpath,
            tol,
        } => {
            let c = model(&path)?;
            let list = constraints(&cpath, c.variables())?;
            writeln!(out, "{} constraints", list.len())?;
            let table = if c.num_variables() <= circuit::MAX_FULL_JOINT_VARIABLES {
                Some(enumerate_joint(&c)?)
            } else {
                None
            };
            let mut all = true;
            for constraint in &list {
                let violation = match &table {
                    Some(t) => check_constraint(t, constraint, tol)?.max_violation,
                    None => compile_all(std::slice::from_ref(constraint), &c)?
                        .values(&c)?
                        .iter()
                        .fold(0.0f64, |m, r| m.max(r.abs())),
                };
                let pass = violation <= tol;
                all &= pass;
                writeln!(
                    out,
                    "{}  {}  max_violation={:e}",
                    if pass { "PASS" } else { "FAIL" },
                    constraint.render(c.variables()),
                    violation
                )?;
            }
            Ok(if all { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Compile {
            model: path,
            constraints: cpath,
        } => {
            let c = model(&path)?;
            let system = compile_all(&constraints(&cpath, c.variables())?, &c)?;
            for line in system.render(c.variables()) {
                writeln!(out, "{line}")?;
            }
            Ok(EXIT_OK)
        }
        Command::Sample {
            model: path,
            n,
            seed,
            out: out_path,
        } => {
            if n == 0 {
                return Err(InputError("--n must be at least 1".into()));
            }
            let c = model(&path)?;
            let table = enumerate_joint(&c)?;
            let data = sample_dataset(&table, n, seed)?;
            write_file(&out_path, &data.to_csv())?;
            writeln!(out, "wrote {n} rows to {}", out_path.display())?;
            Ok(EXIT_OK)
        }
    }
}

/// Fixed notation with 12 significant digits.
pub fn format_probability(p: f64) -> String {
    if p == 0.0 || !p.is_finite() {
        return format!("{p:.11}");
    }
    let magnitude = p.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    format!("{p:.decimals$}")
}

#[derive(Debug, PartialEq)]
pub enum Query {
    Marginal(Assignment),
    Conditional(Assignment, Assignment),
    Interventional {
        target: Assignment,
        intervened: usize,
        value: bool,
        parents: Vec<usize>,
    },
}

/// Parses the query grammar against the circuit's variables.
pub fn parse_query(c: &Circuit, expr: &str) -> Result<Query, String> {
    let body = expr
        .trim()
        .strip_prefix("P(")
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| format!("expected `P(...)`, got `{expr}`"))?;
    let (head, rest) = match body.split_once('|') {
        Some((h, r)) => (h, Some(r.trim())),
        None => (body, None),
    };
    let target = parse_assignment(c, head)?;
    if target.is_empty() {
        return Err("empty query".into());
    }
    let Some(rest) = rest else {
        return Ok(Query::Marginal(target));
    };
    if let Some(after) = rest.strip_prefix("do(") {
        let (inner, tail) = after.split_once(')').ok_or("unterminated `do(`")?;
        let fixed = parse_assignment(c, inner)?;
        if fixed.len() != 1 {
            return Err("do(...) takes exactly one variable".into());
        }
        let (intervened, value) = fixed.iter().next().unwrap();
        let tail = tail.trim();
        let parents = match tail.strip_prefix(';') {
            Some(p) => {
                let p = p.trim();
                let list = p
                    .strip_prefix("parents")
                    .map(str::trim_start)
                    .and_then(|s| s.strip_prefix('='))
                    .ok_or("expected `parents=` after `;`")?;
                list.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|name| {
                        c.variable(name)
                            .map(|v| v.index())
                            .map_err(|e| e.to_string())
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
            None if tail.is_empty() => return Err("do-queries require `; parents=...`".into()),
            None => return Err(format!("unexpected `{tail}`")),
        };
        return Ok(Query::Interventional {
            target,
            intervened,
            value,
            parents,
        });
    }
    Ok(Query::Conditional(target, parse_assignment(c, rest)?))
}

fn parse_assignment(c: &Circuit, text: &str) -> Result<Assignment, String> {
    let mut a = Assignment::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| format!("expected `VAR=0|1`, got `{part}`"))?;
        let var = c.variable(name.trim()).map_err(|e| e.to_string())?.index();
        let value = match value.trim() {
            "0" => false,
            "1" => true,
            other => return Err(format!("value `{other}` is not 0 or 1")),
        };
        if a.get(var).is_some() {
            return Err(format!("`{}` assigned twice", name.trim()));
        }
        a.set(var, value);
    }
    Ok(a)
}

fn evaluate_query(c: &Circuit, expr: &str) -> Result<f64, InputError> {
    Ok(match parse_query(c, expr).map_err(InputError)? {
        Query::Marginal(a) => c.marginal(&a)?,
        Query::Conditional(t, e) => c.conditional(&t, &e)?,
        Query::Interventional {
            target,
            intervened,
            value,
            parents,
        } => c.interventional(&target, intervened, value, &parents)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::full_joint_circuit;

    #[test]
    fn probability_formatting() {
        assert_eq!(format_probability(0.5), "0.500000000000");
        assert_eq!(format_probability(0.8), "0.800000000000");
        assert_eq!(format_probability(1.0), "1.00000000000");
        assert_eq!(format_probability(0.0123), "0.0123000000000");
    }

    #[test]
    fn query_grammar() {
        let c = full_joint_circuit(Variable::numbered(3), &[0.125; 8]).unwrap();
        assert_eq!(
            parse_query(&c, "P(X1=1)").unwrap(),
            Query::Marginal(Assignment::new().with(0, true))
        );
        assert_eq!(
            parse_query(&c, "P(X1=1, X3=0 | X2=1)").unwrap(),
            Query::Conditional(
                Assignment::new().with(0, true).with(2, false),
                Assignment::new().with(1, true)
            )
        );
        assert_eq!(
            parse_query(&c, "P(X1=1 | do(X2=1) ; parents=X1,X3)").unwrap(),
            Query::Interventional {
                target: Assignment::new().with(0, true),
                intervened: 1,
                value: true,
                parents: vec![0, 2],
            }
        );
        assert!(parse_query(&c, "P(X1=1 | do(X2=1) ; parents=)").is_ok());
        for bad in [
            "X1=1",
            "P(X1=2)",
            "P(X9=1)",
            "P(X1=1 | do(X2=1))",
            "P()",
            "P(X1=1,X1=0)",
        ] {
            assert!(parse_query(&c, bad).is_err(), "{bad}");
        }
    }
}
