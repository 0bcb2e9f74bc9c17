//! Declared probabilistic constraints and their compilation into residual
//! systems.
//!
//! Every constraint is an equality between probabilities. Compilation
//! rewrites it into cross-multiplied form (no ratios), so each residual is a
//! signed sum of products of at most two normalized marginals. A weight vector
//! satisfies the constraint exactly when every residual is zero.

mod compile;
mod parse;
mod residual;

use std::fmt;

use thiserror::Error;

use crate::circuit::{Assignment, CircuitError, Variable};

pub use compile::{
    compile, compile_all, compile_conditional, compile_independence, compile_interventional,
    MAX_ENUMERATED,
};
pub use parse::{parse_constraints, ConstraintParseError};
pub use residual::{Provenance, Residual, ResidualSystem, ResidualTerm, Sign, DEGREE_EPS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstraintError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("invalid constraint: {0}")]
    Invalid(String),
    #[error("enumeration over {found} variables exceeds the limit of {limit}")]
    TooLarge { found: usize, limit: usize },
    #[error("direction must be a non-zero vector of length {expected}")]
    BadDirection { expected: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// `Pr(Y | A=0, ctx) = Pr(Y | A=1, ctx)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalEquality {
    pub target: usize,
    pub attribute: usize,
    /// Fixed context; must be empty when `condition_on_rest` is set.
    pub context: Assignment,
    /// Require the equality under every assignment of all remaining variables.
    pub condition_on_rest: bool,
}

/// `Pr(targets | do(A=0)) = Pr(targets | do(A=1))` given the parent set of `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterventionalEquality {
    pub intervened: usize,
    pub parents: Vec<usize>,
    /// Must contain every parent; `None` means every variable except `A`.
    pub targets: Option<Vec<usize>>,
}

/// What an independence statement is conditioned on.
#[derive(Clone, Debug, PartialEq)]
pub enum Given {
    Nothing,
    /// Conditional independence: one context per assignment of these variables.
    Variables(Vec<usize>),
    /// Context-specific independence under a single assignment.
    Context(Assignment),
}

/// `Pr(Xi, Xj | g) = Pr(Xi | g) Pr(Xj | g)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Independence {
    pub left: usize,
    pub right: usize,
    pub given: Given,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    ConditionalEquality(ConditionalEquality),
    InterventionalEquality(InterventionalEquality),
    Independence(Independence),
}

impl From<ConditionalEquality> for Constraint {
    fn from(c: ConditionalEquality) -> Self {
        Constraint::ConditionalEquality(c)
    }
}

impl From<InterventionalEquality> for Constraint {
    fn from(c: InterventionalEquality) -> Self {
        Constraint::InterventionalEquality(c)
    }
}

impl From<Independence> for Constraint {
    fn from(c: Independence) -> Self {
        Constraint::Independence(c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    Conditional,
    Interventional,
    Independence,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintKind::Conditional => "conditional-eq",
            ConstraintKind::Interventional => "interventional-eq",
            ConstraintKind::Independence => "independence",
        })
    }
}

impl Independence {
    pub fn marginal(left: usize, right: usize) -> Self {
        Independence {
            left,
            right,
            given: Given::Nothing,
        }
    }
}

impl ConditionalEquality {
    pub fn new(target: usize, attribute: usize) -> Self {
        ConditionalEquality {
            target,
            attribute,
            context: Assignment::new(),
            condition_on_rest: false,
        }
    }
}

impl InterventionalEquality {
    /// Targets resolved against `n` variables, sorted by index.
    pub fn resolved_targets(&self, n: usize) -> Vec<usize> {
        let mut t = match &self.targets {
            Some(t) => t.clone(),
            None => (0..n).filter(|&v| v != self.intervened).collect(),
        };
        t.sort_unstable();
        t.dedup();
        t
    }
}

fn name_of(vars: &[Variable], i: usize) -> String {
    vars.get(i)
        .map(|v| v.name().to_string())
        .unwrap_or_else(|| format!("#{i}"))
}

fn invalid(msg: impl Into<String>) -> ConstraintError {
    ConstraintError::Invalid(msg.into())
}

impl Constraint {
    pub fn kind(&self) -> ConstraintKind {
        match self {
            Constraint::ConditionalEquality(_) => ConstraintKind::Conditional,
            Constraint::InterventionalEquality(_) => ConstraintKind::Interventional,
            Constraint::Independence(_) => ConstraintKind::Independence,
        }
    }

    fn referenced(&self) -> Vec<usize> {
        match self {
            Constraint::ConditionalEquality(c) => {
                let mut v = vec![c.target, c.attribute];
                v.extend(c.context.vars());
                v
            }
            Constraint::InterventionalEquality(c) => {
                let mut v = vec![c.intervened];
                v.extend(&c.parents);
                v.extend(c.targets.iter().flatten());
                v
            }
            Constraint::Independence(c) => {
                let mut v = vec![c.left, c.right];
                match &c.given {
                    Given::Nothing => {}
                    Given::Variables(g) => v.extend(g),
                    Given::Context(a) => v.extend(a.vars()),
                }
                v
            }
        }
    }

    /// Checks the constraint's own invariants against a variable set.
    pub fn check(&self, vars: &[Variable]) -> Result<(), ConstraintError> {
        if let Some(&bad) = self.referenced().iter().find(|&&i| i >= vars.len()) {
            return Err(ConstraintError::UnknownVariable(format!("#{bad}")));
        }
        let name = |i| name_of(vars, i);
        match self {
            Constraint::ConditionalEquality(c) => {
                if c.target == c.attribute {
                    return Err(invalid(format!(
                        "target and attribute are both `{}`",
                        name(c.target)
                    )));
                }
                if let Some(v) = c
                    .context
                    .vars()
                    .find(|&v| v == c.target || v == c.attribute)
                {
                    return Err(invalid(format!("context assigns `{}`", name(v))));
                }
                if c.condition_on_rest && !c.context.is_empty() {
                    return Err(invalid(
                        "on-rest conditioning cannot be combined with a context",
                    ));
                }
            }
            Constraint::InterventionalEquality(c) => {
                if c.parents.contains(&c.intervened) {
                    return Err(invalid(format!(
                        "`{}` is listed among its own parents",
                        name(c.intervened)
                    )));
                }
                if let Some(t) = &c.targets {
                    if t.contains(&c.intervened) {
                        return Err(invalid(format!(
                            "targets include the intervened `{}`",
                            name(c.intervened)
                        )));
                    }
                    if let Some(&p) = c.parents.iter().find(|p| !t.contains(p)) {
                        return Err(invalid(format!(
                            "parent `{}` is not among the targets; Pr(A | parents) needs the parent values fixed",
                            name(p)
                        )));
                    }
                }
            }
            Constraint::Independence(c) => {
                if c.left == c.right {
                    return Err(invalid(format!(
                        "`{}` is independent of itself",
                        name(c.left)
                    )));
                }
                let given: Vec<usize> = match &c.given {
                    Given::Nothing => vec![],
                    Given::Variables(g) => g.clone(),
                    Given::Context(a) => a.vars().collect(),
                };
                if let Some(v) = given.iter().find(|&&v| v == c.left || v == c.right) {
                    return Err(invalid(format!("conditioning set contains `{}`", name(*v))));
                }
            }
        }
        Ok(())
    }

    /// Constraint text-format rendering.
    pub fn render(&self, vars: &[Variable]) -> String {
        let name = |i| name_of(vars, i);
        let ctx = |a: &Assignment| {
            a.iter()
                .map(|(v, x)| format!("{}={}", name(v), u8::from(x)))
                .collect::<Vec<_>>()
                .join(" ")
        };
        match self {
            Constraint::Independence(c) => {
                let head = format!("independence {} {}", name(c.left), name(c.right));
                match &c.given {
                    Given::Nothing => head,
                    Given::Variables(g) => format!(
                        "{head} given {}",
                        g.iter().map(|&v| name(v)).collect::<Vec<_>>().join(" ")
                    ),
                    Given::Context(a) => format!("{head} context {}", ctx(a)),
                }
            }
            Constraint::ConditionalEquality(c) => {
                let mut s = format!(
                    "conditional-eq {} wrt {}",
                    name(c.target),
                    name(c.attribute)
                );
                if !c.context.is_empty() {
                    s.push_str(&format!(" context {}", ctx(&c.context)));
                }
                if c.condition_on_rest {
                    s.push_str(" on-rest");
                }
                s
            }
            Constraint::InterventionalEquality(c) => {
                let list = |v: &[usize]| v.iter().map(|&i| name(i)).collect::<Vec<_>>().join(" ");
                let mut s = format!(
                    "interventional-eq {} parents {}",
                    name(c.intervened),
                    list(&c.parents)
                );
                if let Some(t) = &c.targets {
                    s = format!("{} targets {}", s.trim_end(), list(t));
                }
                s.trim_end().to_string()
            }
        }
    }
}
