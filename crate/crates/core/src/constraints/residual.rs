use std::collections::HashMap;

use crate::circuit::{Assignment, Circuit, CircuitError, Variable};

use super::{ConstraintError, ConstraintKind};

/// Coefficients below this magnitude count as zero in [`ResidualSystem::degree_probe`].
pub const DEGREE_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `sign · Π Pr(factor)`, with one or two factors.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualTerm {
    pub sign: Sign,
    pub factors: Vec<Assignment>,
}

impl ResidualTerm {
    pub fn new(sign: Sign, factors: Vec<Assignment>) -> Self {
        debug_assert!((1..=2).contains(&factors.len()));
        ResidualTerm { sign, factors }
    }
}

/// Where a residual came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    /// Position of the source constraint in the compiled list.
    pub constraint: usize,
    pub kind: ConstraintKind,
    /// Human-readable case, e.g. `X1=1,X2=0 | Z=1`.
    pub case: String,
    /// The residual relies on the no-unobserved-confounders premise of the
    /// do-formula. It cannot be checked from data.
    pub closed_world: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    pub terms: Vec<ResidualTerm>,
    pub provenance: Provenance,
}

impl Residual {
    /// `+P(X1=1,X2=1) -P(X1=1)*P(X2=1)`.
    pub fn render(&self, vars: &[Variable]) -> String {
        self.terms
            .iter()
            .map(|t| {
                let sign = match t.sign {
                    Sign::Plus => '+',
                    Sign::Minus => '-',
                };
                let factors: Vec<String> = t
                    .factors
                    .iter()
                    .map(|f| format!("P({})", f.display_with(vars)))
                    .collect();
                format!("{sign}{}", factors.join("*"))
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A list of residual functions `C_k(w)` whose common zeros are the
/// constraint-satisfying weightings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResidualSystem {
    residuals: Vec<Residual>,
}

impl ResidualSystem {
    pub fn new(residuals: Vec<Residual>) -> Self {
        ResidualSystem { residuals }
    }

    pub fn len(&self) -> usize {
        self.residuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }

    pub fn residuals(&self) -> &[Residual] {
        &self.residuals
    }

    pub fn extend(&mut self, other: ResidualSystem) {
        self.residuals.extend(other.residuals);
    }

    /// Unique factor assignments, in first-appearance order, and for each
    /// term the indices of its factors.
    fn factor_table(&self) -> (Vec<&Assignment>, HashMap<&Assignment, usize>) {
        let mut order = Vec::new();
        let mut index = HashMap::new();
        for f in self
            .residuals
            .iter()
            .flat_map(|r| &r.terms)
            .flat_map(|t| &t.factors)
        {
            index.entry(f).or_insert_with(|| {
                order.push(f);
                order.len() - 1
            });
        }
        (order, index)
    }

    fn combine(&self, index: &HashMap<&Assignment, usize>, value: &[f64]) -> Vec<f64> {
        self.residuals
            .iter()
            .map(|r| {
                r.terms
                    .iter()
                    .map(|t| {
                        t.sign.value() * t.factors.iter().map(|f| value[index[f]]).product::<f64>()
                    })
                    .sum()
            })
            .collect()
    }

    /// `C_k(w)` with every factor a normalized marginal of `circuit`.
    pub fn values(&self, circuit: &Circuit) -> Result<Vec<f64>, CircuitError> {
        let (order, index) = self.factor_table();
        let z = circuit.partition()?;
        let value = order
            .iter()
            .map(|q| Ok(circuit.evaluate(q)? / z))
            .collect::<Result<Vec<_>, CircuitError>>()?;
        Ok(self.combine(&index, &value))
    }

    /// Residual values and the Jacobian (row per residual, column per weight),
    /// by the product rule over exact marginal gradients.
    pub fn values_and_jacobian(
        &self,
        circuit: &Circuit,
    ) -> Result<(Vec<f64>, Vec<Vec<f64>>), CircuitError> {
        let (order, index) = self.factor_table();
        let evals = order
            .iter()
            .map(|q| circuit.marginal_and_gradient(q))
            .collect::<Result<Vec<_>, _>>()?;
        let value: Vec<f64> = evals.iter().map(|(p, _)| *p).collect();
        let values = self.combine(&index, &value);

        let n = circuit.num_weights();
        let jacobian = self
            .residuals
            .iter()
            .map(|r| {
                let mut row = vec![0.0; n];
                for t in &r.terms {
                    let s = t.sign.value();
                    match t.factors[..] {
                        [ref a] => {
                            let ga = &evals[index[a]].1;
                            for (x, g) in row.iter_mut().zip(ga) {
                                *x += s * g;
                            }
                        }
                        [ref a, ref b] => {
                            let (pa, ga) = &evals[index[a]];
                            let (pb, gb) = &evals[index[b]];
                            for ((x, da), db) in row.iter_mut().zip(ga).zip(gb) {
                                *x += s * (da * pb + pa * db);
                            }
                        }
                        _ => unreachable!("residual terms have one or two factors"),
                    }
                }
                row
            })
            .collect();
        Ok((values, jacobian))
    }

    pub fn jacobian(&self, circuit: &Circuit) -> Result<Vec<Vec<f64>>, CircuitError> {
        Ok(self.values_and_jacobian(circuit)?.1)
    }

    /// Residuals with every marginal replaced by the raw polynomial value
    /// `S_w(factor)` at the given weights (no normalization).
    pub fn unnormalized_values(
        &self,
        circuit: &Circuit,
        weights: &[f64],
    ) -> Result<Vec<f64>, CircuitError> {
        let (order, index) = self.factor_table();
        let value = order
            .iter()
            .map(|q| circuit.evaluate_with_weights(weights, q))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.combine(&index, &value))
    }

    /// Degree of each unnormalized residual along `w + t·direction`, from
    /// the cubic through `t = 0, 1, 2, 3`.
    pub fn degrees_along(
        &self,
        circuit: &Circuit,
        direction: &[f64],
    ) -> Result<Vec<usize>, ConstraintError> {
        let n = circuit.num_weights();
        if direction.len() != n || direction.iter().all(|d| *d == 0.0) {
            return Err(ConstraintError::BadDirection { expected: n });
        }
        let w = circuit.weights();
        let samples = (0..4)
            .map(|t| {
                let point: Vec<f64> = w
                    .iter()
                    .zip(direction)
                    .map(|(x, d)| x + t as f64 * d)
                    .collect();
                self.unnormalized_values(circuit, &point)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((0..self.len())
            .map(|k| {
                let f = [samples[0][k], samples[1][k], samples[2][k], samples[3][k]];
                cubic_degree(f)
            })
            .collect())
    }

    /// Highest degree over all residuals along `direction` (0 to 3).
    pub fn degree_probe(
        &self,
        circuit: &Circuit,
        direction: &[f64],
    ) -> Result<usize, ConstraintError> {
        Ok(self
            .degrees_along(circuit, direction)?
            .into_iter()
            .max()
            .unwrap_or(0))
    }

    pub fn render(&self, vars: &[Variable]) -> Vec<String> {
        self.residuals.iter().map(|r| r.render(vars)).collect()
    }
}

/// Degree of the interpolating cubic through `f(0..=3)`, via forward
/// differences expanded into monomial coefficients.
fn cubic_degree(f: [f64; 4]) -> usize {
    let d1 = f[1] - f[0];
    let d2 = f[2] - 2.0 * f[1] + f[0];
    let d3 = f[3] - 3.0 * f[2] + 3.0 * f[1] - f[0];
    let c3 = d3 / 6.0;
    let c2 = d2 / 2.0 - d3 / 2.0;
    let c1 = d1 - d2 / 2.0 + d3 / 3.0;
    [c1, c2, c3]
        .iter()
        .rposition(|c| c.abs() > DEGREE_EPS)
        .map_or(0, |i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_degrees() {
        let poly = |c: [f64; 4]| {
            let mut f = [0.0; 4];
            for (t, v) in f.iter_mut().enumerate() {
                let t = t as f64;
                *v = c[0] + c[1] * t + c[2] * t * t + c[3] * t * t * t;
            }
            f
        };
        assert_eq!(cubic_degree(poly([1.0, 0.0, 0.0, 0.0])), 0);
        assert_eq!(cubic_degree(poly([1.0, -2.0, 0.0, 0.0])), 1);
        assert_eq!(cubic_degree(poly([0.3, 0.0, 0.7, 0.0])), 2);
        assert_eq!(cubic_degree(poly([0.0, 0.0, 0.0, 0.01])), 3);
    }
}
