use std::collections::BTreeMap;

use super::Variable;

/// Partial assignment of binary values to variables, keyed by variable index.
/// Variables that are not mentioned are marginalized.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    values: BTreeMap<usize, bool>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: usize, value: bool) -> Self {
        self.set(var, value);
        self
    }

    pub fn set(&mut self, var: usize, value: bool) {
        self.values.insert(var, value);
    }

    pub fn get(&self, var: usize) -> Option<bool> {
        self.values.get(&var).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(variable index, value)` in ascending variable order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.values.iter().map(|(&k, &v)| (k, v))
    }

    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.keys().copied()
    }

    /// Union of two assignments; `Err(var)` names the first shared variable.
    pub fn union(&self, other: &Assignment) -> Result<Assignment, usize> {
        let mut out = self.clone();
        for (var, value) in other.iter() {
            if out.values.insert(var, value).is_some() {
                return Err(var);
            }
        }
        Ok(out)
    }

    /// Union where `other` wins on shared variables.
    pub fn merged(&self, other: &Assignment) -> Assignment {
        let mut out = self.clone();
        out.values.extend(other.iter());
        out
    }

    /// Keep only the listed variables.
    pub fn restrict(&self, vars: &[usize]) -> Assignment {
        Assignment {
            values: self
                .values
                .iter()
                .filter(|(k, _)| vars.contains(k))
                .map(|(&k, &v)| (k, v))
                .collect(),
        }
    }

    /// All `2^k` complete assignments of `vars`, in lexicographic order with the
    /// first listed variable most significant and 0 before 1.
    pub fn enumerate(vars: &[usize]) -> impl Iterator<Item = Assignment> + '_ {
        let k = vars.len();
        (0..1usize << k).map(move |code| {
            let mut a = Assignment::new();
            for (pos, &var) in vars.iter().enumerate() {
                a.set(var, (code >> (k - 1 - pos)) & 1 == 1);
            }
            a
        })
    }

    /// `X1=1,X2=0` using the given variable names.
    pub fn display_with(&self, vars: &[Variable]) -> String {
        self.iter()
            .map(|(var, value)| {
                let name = vars
                    .iter()
                    .find(|v| v.index() == var)
                    .map(|v| v.name().to_string())
                    .unwrap_or_else(|| format!("#{var}"));
                format!("{}={}", name, u8::from(value))
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl FromIterator<(usize, bool)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (usize, bool)>>(iter: I) -> Self {
        Assignment {
            values: iter.into_iter().collect(),
        }
    }
}
