//! Brute-force ground truth over exhaustive joint tables.
//!
//! Everything here sums table rows directly and never touches circuit
//! structure, so it can serve as an independent check on circuit inference,
//! constraint compilation and training.
//!
//! Random numbers come from xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`); a uniform `f64` is the top 53 bits
//! of one output scaled by `2^-53`.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use thiserror::Error;

use crate::circuit::{
    full_joint_circuit, Assignment, Circuit, CircuitError, Variable, MAX_FULL_JOINT_VARIABLES,
};
use crate::constraints::{Constraint, Given};
use crate::dataio::Dataset;

pub type SeededRng = Xoshiro256PlusPlus;

/// The generator used for every seeded operation in this crate.
pub fn seeded_rng(seed: u64) -> SeededRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("too many variables: {found} > {limit}")]
    TooManyVariables { found: usize, limit: usize },
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("unknown variable #{0}")]
    UnknownVariable(usize),
    #[error("conditioning event has zero probability")]
    ZeroEvidence,
    #[error("target and evidence overlap on variable #{0}")]
    Overlap(usize),
    #[error("Pr(A = value | parents) is zero for a parent configuration with positive mass")]
    ZeroDivisor,
    #[error("interventional table sums to {0}, expected 1")]
    NotNormalized(f64),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Probability of every complete assignment. Entry `a` holds the probability
/// of the state where the `k`-th listed variable takes bit `k` of `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable {
    variables: Vec<Variable>,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(variables: Vec<Variable>, probs: Vec<f64>) -> Result<Self, OracleError> {
        if variables.len() > MAX_FULL_JOINT_VARIABLES {
            return Err(OracleError::TooManyVariables {
                found: variables.len(),
                limit: MAX_FULL_JOINT_VARIABLES,
            });
        }
        if probs.len() != 1 << variables.len() {
            return Err(OracleError::InvalidTable(format!(
                "expected {} entries, found {}",
                1usize << variables.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(OracleError::InvalidTable(
                "entries must be non-negative".into(),
            ));
        }
        Ok(JointTable { variables, probs })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Entries divided by their sum.
    pub fn normalized(&self) -> Result<JointTable, OracleError> {
        let z = self.total();
        if z <= 0.0 {
            return Err(OracleError::InvalidTable("table has zero mass".into()));
        }
        Ok(JointTable {
            variables: self.variables.clone(),
            probs: self.probs.iter().map(|p| p / z).collect(),
        })
    }

    /// Full-joint circuit with this table as root weights. Requires the table's
    /// variables to have dense indices in order.
    pub fn to_circuit(&self) -> Result<Circuit, OracleError> {
        Ok(full_joint_circuit(self.variables.clone(), &self.probs)?)
    }

    fn position(&self, var: usize) -> Option<usize> {
        self.variables.iter().position(|v| v.index() == var)
    }

    /// Bit mask and value pattern selecting rows consistent with `q`.
    fn mask(&self, q: &Assignment) -> Result<(usize, usize), OracleError> {
        let mut mask = 0;
        let mut bits = 0;
        for (var, value) in q.iter() {
            let p = self
                .position(var)
                .ok_or(OracleError::UnknownVariable(var))?;
            mask |= 1 << p;
            if value {
                bits |= 1 << p;
            }
        }
        Ok((mask, bits))
    }

    /// Sum of the entries consistent with `query`.
    pub fn marginal(&self, query: &Assignment) -> Result<f64, OracleError> {
        let (mask, bits) = self.mask(query)?;
        Ok(self
            .probs
            .iter()
            .enumerate()
            .filter(|(a, _)| a & mask == bits)
            .map(|(_, p)| p)
            .sum())
    }

    pub fn conditional(
        &self,
        target: &Assignment,
        evidence: &Assignment,
    ) -> Result<f64, OracleError> {
        let joint = target.union(evidence).map_err(OracleError::Overlap)?;
        let denom = self.marginal(evidence)?;
        if denom == 0.0 {
            return Err(OracleError::ZeroEvidence);
        }
        Ok(self.marginal(&joint)? / denom)
    }

    /// The post-intervention table over the remaining variables:
    /// `p(r) = Pr(r, A=value) / Pr(A=value | pa(r))`.
    pub fn intervene(
        &self,
        intervened: usize,
        value: bool,
        parents: &[usize],
    ) -> Result<JointTable, OracleError> {
        let a_pos = self
            .position(intervened)
            .ok_or(OracleError::UnknownVariable(intervened))?;
        let parent_mask = parents.iter().try_fold(0usize, |m, &p| {
            if p == intervened {
                return Err(OracleError::InvalidTable(
                    "intervened variable listed among its parents".into(),
                ));
            }
            Ok(m | 1 << self.position(p).ok_or(OracleError::UnknownVariable(p))?)
        })?;
        let a_bit = usize::from(value) << a_pos;

        // Pr(pa) and Pr(pa, A=value) for every parent configuration present.
        let mut mass: HashMap<usize, (f64, f64)> = HashMap::new();
        for (a, p) in self.probs.iter().enumerate() {
            let e = mass.entry(a & parent_mask).or_default();
            e.0 += p;
            if a & (1 << a_pos) == a_bit {
                e.1 += p;
            }
        }

        let remaining: Vec<Variable> = self
            .variables
            .iter()
            .filter(|v| v.index() != intervened)
            .cloned()
            .collect();
        let mut probs = vec![0.0; 1 << remaining.len()];
        for (r, slot) in probs.iter_mut().enumerate() {
            // re-insert the intervened bit at its original position
            let low = r & ((1 << a_pos) - 1);
            let high = (r >> a_pos) << (a_pos + 1);
            let full = high | a_bit | low;
            let joint = self.probs[full];
            let (pa, pa_a) = mass[&(full & parent_mask)];
            if pa == 0.0 {
                continue;
            }
            if pa_a == 0.0 {
                return Err(OracleError::ZeroDivisor);
            }
            *slot = joint * pa / pa_a;
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(OracleError::NotNormalized(total));
        }
        JointTable::new(remaining, probs)
    }
}

/// Exhaustive table of normalized probabilities of `circuit`.
pub fn enumerate_joint(circuit: &Circuit) -> Result<JointTable, OracleError> {
    let n = circuit.num_variables();
    if n > MAX_FULL_JOINT_VARIABLES {
        return Err(OracleError::TooManyVariables {
            found: n,
            limit: MAX_FULL_JOINT_VARIABLES,
        });
    }
    let z = circuit.partition()?;
    let probs = (0..1usize << n)
        .map(|a| {
            let q: Assignment = (0..n).map(|i| (i, (a >> i) & 1 == 1)).collect();
            Ok(circuit.evaluate(&q)? / z)
        })
        .collect::<Result<Vec<_>, OracleError>>()?;
    JointTable::new(circuit.variables().to_vec(), probs)
}

/// Outcome of a direct check of a constraint on a table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Check {
    pub satisfied: bool,
    pub max_violation: f64,
}

/// Evaluates the constraint's defining equalities on the table:
///
/// * independence: `|Pr(a, b | g) − Pr(a | g)·Pr(b | g)|`
/// * conditional equality: `|Pr(y | A=1, ctx) − Pr(y | A=0, ctx)|`
/// * interventional equality: `|Pr(t | do(A=0)) − Pr(t | do(A=1))|`
///
/// Contexts (or parent configurations) where a conditioning event has zero
/// probability are skipped.
pub fn check_constraint(
    table: &JointTable,
    constraint: &Constraint,
    tol: f64,
) -> Result<Check, OracleError> {
    let mut worst: f64 = 0.0;
    let p = |q: &Assignment| table.marginal(q);
    match constraint {
        Constraint::Independence(c) => {
            let contexts: Vec<Assignment> = match &c.given {
                Given::Nothing => vec![Assignment::new()],
                Given::Context(a) => vec![a.clone()],
                Given::Variables(vs) => Assignment::enumerate(vs).collect(),
            };
            for g in contexts {
                let pg = p(&g)?;
                if pg == 0.0 {
                    continue;
                }
                for a in [true, false] {
                    for b in [true, false] {
                        let ab = p(&g.clone().with(c.left, a).with(c.right, b))? / pg;
                        let pa = p(&g.clone().with(c.left, a))? / pg;
                        let pb = p(&g.clone().with(c.right, b))? / pg;
                        worst = worst.max((ab - pa * pb).abs());
                    }
                }
            }
        }
        Constraint::ConditionalEquality(c) => {
            let contexts: Vec<Assignment> = if c.condition_on_rest {
                let rest: Vec<usize> = table
                    .variables()
                    .iter()
                    .map(|v| v.index())
                    .filter(|&v| v != c.target && v != c.attribute)
                    .collect();
                Assignment::enumerate(&rest).collect()
            } else {
                vec![c.context.clone()]
            };
            for ctx in contexts {
                let a1 = ctx.clone().with(c.attribute, true);
                let a0 = ctx.clone().with(c.attribute, false);
                let (m1, m0) = (p(&a1)?, p(&a0)?);
                if m1 == 0.0 || m0 == 0.0 {
                    continue;
                }
                for y in [true, false] {
                    let d1 = p(&a1.clone().with(c.target, y))? / m1;
                    let d0 = p(&a0.clone().with(c.target, y))? / m0;
                    worst = worst.max((d1 - d0).abs());
                }
            }
        }
        Constraint::InterventionalEquality(c) => {
            let targets = c.resolved_targets(table.variables().len());
            for t in Assignment::enumerate(&targets) {
                let pa = t.restrict(&c.parents);
                let (pa0, pa1) = (
                    p(&pa.clone().with(c.intervened, false))?,
                    p(&pa.clone().with(c.intervened, true))?,
                );
                if pa0 == 0.0 || pa1 == 0.0 {
                    continue;
                }
                let mass = p(&pa)?;
                let do0 = p(&t.clone().with(c.intervened, false))? * mass / pa0;
                let do1 = p(&t.clone().with(c.intervened, true))? * mass / pa1;
                worst = worst.max((do0 - do1).abs());
            }
        }
    }
    Ok(Check {
        satisfied: worst <= tol,
        max_violation: worst,
    })
}

/// `m` i.i.d. rows by inverse-CDF over the table entries.
pub fn sample_dataset(table: &JointTable, m: usize, seed: u64) -> Result<Dataset, OracleError> {
    let table = table.normalized()?;
    let mut cdf = Vec::with_capacity(table.probs.len());
    let mut acc = 0.0;
    for p in &table.probs {
        acc += p;
        cdf.push(acc);
    }
    let last_positive = table.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0);
    let n = table.variables.len();
    let mut rng = seeded_rng(seed);
    let rows = (0..m)
        .map(|_| {
            let u: f64 = rng.random();
            let state = cdf.partition_point(|c| *c <= u).min(last_positive);
            (0..n).map(|i| (state >> i) & 1 == 1).collect()
        })
        .collect();
    let vars = table
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| Variable::new(i, v.name()))
        .collect::<Result<Vec<_>, _>>()?;
    Dataset::new(vars, rows).map_err(|e| OracleError::InvalidTable(e.to_string()))
}
