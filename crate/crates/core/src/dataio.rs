//! Complete binary datasets, CSV ingestion, average log-likelihood, and
//! model loading.

use std::collections::BTreeMap;
use std::collections::HashSet;

use thiserror::Error;

use crate::circuit::{
    self, Assignment, Circuit, CircuitError, ParseError, ValidationReport, Variable,
};

/// Lower bound applied to row probabilities inside the logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("dataset has no rows")]
    Empty,
    #[error("variable mismatch: {0}")]
    VariableMismatch(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("invalid model: {0}")]
    Invalid(ValidationReport),
}

/// Parses model text and rejects structurally invalid circuits.
pub fn load_model(text: &str) -> Result<Circuit, ModelError> {
    let c = circuit::parse_model(text)?;
    let report = c.validate();
    if report.is_valid() {
        Ok(c)
    } else {
        Err(ModelError::Invalid(report))
    }
}

/// Rows of complete binary assignments over a fixed variable list.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    variables: Vec<Variable>,
    rows: Vec<Vec<bool>>,
}

impl Dataset {
    pub fn new(variables: Vec<Variable>, rows: Vec<Vec<bool>>) -> Result<Self, DataError> {
        if let Some((i, r)) = rows
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != variables.len())
        {
            return Err(DataError::Parse {
                line: i + 2,
                column: r.len().min(variables.len()) + 1,
                message: format!("row has {} values, expected {}", r.len(), variables.len()),
            });
        }
        Ok(Dataset { variables, rows })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Reorders columns to follow `vars` (matched by name).
    pub fn align_to(&self, vars: &[Variable]) -> Result<Dataset, DataError> {
        let mine: HashSet<&str> = self.variables.iter().map(|v| v.name()).collect();
        let theirs: HashSet<&str> = vars.iter().map(|v| v.name()).collect();
        if mine != theirs {
            let mut missing: Vec<&str> = theirs.difference(&mine).copied().collect();
            let mut extra: Vec<&str> = mine.difference(&theirs).copied().collect();
            missing.sort_unstable();
            extra.sort_unstable();
            return Err(DataError::VariableMismatch(format!(
                "missing columns [{}], unexpected columns [{}]",
                missing.join(", "),
                extra.join(", ")
            )));
        }
        let column: Vec<usize> = vars
            .iter()
            .map(|v| {
                self.variables
                    .iter()
                    .position(|w| w.name() == v.name())
                    .unwrap()
            })
            .collect();
        let rows = self
            .rows
            .iter()
            .map(|r| column.iter().map(|&c| r[c]).collect())
            .collect();
        Ok(Dataset {
            variables: vars.to_vec(),
            rows,
        })
    }

    /// Row as an assignment keyed by column position.
    pub fn assignment(&self, row: usize) -> Assignment {
        self.rows[row].iter().copied().enumerate().collect()
    }

    /// Distinct rows with their multiplicities, in sorted row order.
    pub fn counts(&self) -> Vec<(Assignment, usize)> {
        let mut map: BTreeMap<&[bool], usize> = BTreeMap::new();
        for r in &self.rows {
            *map.entry(r.as_slice()).or_default() += 1;
        }
        map.into_iter()
            .map(|(r, n)| (r.iter().copied().enumerate().collect(), n))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self
            .variables
            .iter()
            .map(|v| v.name())
            .collect::<Vec<_>>()
            .join(",");
        out.push('\n');
        for r in &self.rows {
            let line: Vec<&str> = r.iter().map(|&b| if b { "1" } else { "0" }).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Parses a CSV with a header of variable names and 0/1 rows.
pub fn load_csv(text: &str) -> Result<Dataset, DataError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (h, header) = lines.next().ok_or(DataError::Parse {
        line: 1,
        column: 1,
        message: "missing header".into(),
    })?;
    let mut variables = Vec::new();
    for (col, name) in header.split(',').enumerate() {
        let name = name.trim();
        if variables.iter().any(|v: &Variable| v.name() == name) {
            return Err(DataError::DuplicateColumn(name.to_string()));
        }
        let v = Variable::new(col, name).map_err(|e| DataError::Parse {
            line: h + 1,
            column: col + 1,
            message: e.to_string(),
        })?;
        variables.push(v);
    }

    let mut rows = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != variables.len() {
            return Err(DataError::Parse {
                line: i + 1,
                column: fields.len().min(variables.len()) + 1,
                message: format!(
                    "row has {} values, expected {}",
                    fields.len(),
                    variables.len()
                ),
            });
        }
        let row = fields
            .iter()
            .enumerate()
            .map(|(c, f)| match f.trim() {
                "0" => Ok(false),
                "1" => Ok(true),
                "" => Err(DataError::Parse {
                    line: i + 1,
                    column: c + 1,
                    message: "missing value".into(),
                }),
                other => Err(DataError::Parse {
                    line: i + 1,
                    column: c + 1,
                    message: format!("non-binary token `{other}`"),
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Dataset::new(variables, rows)
}

/// Average log-likelihood `(1/m) Σ log max(Pr(row), 1e-12)`.
pub fn log_likelihood(circuit: &Circuit, data: &Dataset) -> Result<f64, DataError> {
    if data.is_empty() {
        return Err(DataError::Empty);
    }
    let data = data.align_to(circuit.variables())?;
    let z = circuit.partition()?;
    let mut total = 0.0;
    for (row, count) in data.counts() {
        let p = circuit.evaluate(&row)? / z;
        total += count as f64 * p.max(LOG_FLOOR).ln();
    }
    Ok(total / data.len() as f64)
}
