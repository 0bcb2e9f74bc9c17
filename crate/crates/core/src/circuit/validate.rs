use std::fmt;

use super::{Circuit, NodeId, Slot, Variable};

/// Set of variable indices covered by a sub-circuit.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Scope {
    words: Vec<u64>,
}

impl Scope {
    pub fn singleton(var: usize) -> Self {
        let mut s = Scope::default();
        s.insert(var);
        s
    }

    pub fn insert(&mut self, var: usize) {
        let w = var / 64;
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        self.words[w] |= 1 << (var % 64);
    }

    pub fn contains(&self, var: usize) -> bool {
        self.words
            .get(var / 64)
            .is_some_and(|w| w & (1 << (var % 64)) != 0)
    }

    pub fn union_with(&mut self, other: &Scope) {
        if self.words.len() < other.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn is_disjoint(&self, other: &Scope) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    fn same_as(&self, other: &Scope) -> bool {
        let n = self.words.len().max(other.words.len());
        (0..n).all(|i| self.words.get(i).unwrap_or(&0) == other.words.get(i).unwrap_or(&0))
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64)
                .filter(move |b| bits & (1 << b) != 0)
                .map(move |b| w * 64 + b)
        })
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn render(&self, vars: &[Variable]) -> String {
        let names: Vec<_> = self
            .iter()
            .map(|i| {
                vars.get(i)
                    .map_or_else(|| format!("#{i}"), |v| v.name().to_string())
            })
            .collect();
        format!("{{{}}}", names.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Property {
    Acyclic,
    Reachable,
    Arity,
    WeightNonNegative,
    Completeness,
    Decomposability,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::Acyclic => "acyclicity",
            Property::Reachable => "reachability",
            Property::Arity => "arity",
            Property::WeightNonNegative => "non-negative weights",
            Property::Completeness => "completeness",
            Property::Decomposability => "decomposability",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub node: NodeId,
    pub property: Property,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "node {}: {} violated: {}",
            self.node, self.property, self.detail
        )
    }
}

/// Every structural violation found in a circuit; empty means valid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, property: Property) -> usize {
        self.violations
            .iter()
            .filter(|v| v.property == property)
            .count()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub(super) fn validate(c: &Circuit) -> ValidationReport {
    let mut out = Vec::new();
    let mut push = |i: usize, property, detail: String| {
        out.push(Violation {
            node: c.ids[i],
            property,
            detail,
        })
    };

    for (i, slot) in c.slots.iter().enumerate() {
        match slot {
            Slot::Product { children } if children.len() < 2 => push(
                i,
                Property::Arity,
                format!(
                    "product node has {} children, needs at least 2",
                    children.len()
                ),
            ),
            Slot::Sum { children, offset } => {
                if children.is_empty() {
                    push(i, Property::Arity, "sum node has no children".into());
                }
                let w = &c.weights[*offset..*offset + children.len()];
                if let Some(bad) = w.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
                    push(i, Property::WeightNonNegative, format!("weight {bad}"));
                }
            }
            _ => {}
        }
    }

    let mut ordered = vec![false; c.slots.len()];
    for &i in &c.order {
        ordered[i] = true;
    }
    for (i, _) in ordered.iter().enumerate().filter(|(_, o)| !**o) {
        push(
            i,
            Property::Acyclic,
            "node lies on or above a directed cycle".into(),
        );
    }

    let mut reached = vec![false; c.slots.len()];
    let mut stack = vec![c.root];
    while let Some(i) = stack.pop() {
        if std::mem::replace(&mut reached[i], true) {
            continue;
        }
        stack.extend(c.slots[i].children().iter().copied());
    }
    for (i, _) in reached.iter().enumerate().filter(|(_, r)| !**r) {
        push(i, Property::Reachable, "not reachable from the root".into());
    }

    let mut scopes: Vec<Scope> = vec![Scope::default(); c.slots.len()];
    for &i in &c.order {
        let mut scope = Scope::default();
        match &c.slots[i] {
            Slot::Leaf { var, .. } => scope.insert(*var),
            Slot::Sum { children, .. } => {
                for &ch in children {
                    scope.union_with(&scopes[ch]);
                }
                if let Some((a, b)) = children
                    .iter()
                    .skip(1)
                    .map(|&ch| (&scopes[children[0]], &scopes[ch]))
                    .find(|(a, b)| !a.same_as(b))
                {
                    push(
                        i,
                        Property::Completeness,
                        format!(
                            "children have scopes {} and {}",
                            a.render(&c.variables),
                            b.render(&c.variables)
                        ),
                    );
                }
            }
            Slot::Product { children } => {
                let mut overlap = None;
                for (k, &ch) in children.iter().enumerate() {
                    if overlap.is_none() && !scope.is_disjoint(&scopes[ch]) {
                        overlap = Some(k);
                    }
                    scope.union_with(&scopes[ch]);
                }
                if let Some(k) = overlap {
                    push(
                        i,
                        Property::Decomposability,
                        format!(
                            "child {} with scope {} overlaps its siblings",
                            c.ids[children[k]],
                            scopes[children[k]].render(&c.variables)
                        ),
                    );
                }
            }
        }
        scopes[i] = scope;
    }

    ValidationReport { violations: out }
}

impl Circuit {
    /// Scope of every node, or `None` for nodes on or above a cycle.
    pub fn scope(&self, id: NodeId) -> Option<Scope> {
        let target = self.ids.binary_search(&id).ok()?;
        let mut scopes: Vec<Option<Scope>> = vec![None; self.slots.len()];
        for &i in &self.order {
            let mut s = Scope::default();
            match &self.slots[i] {
                Slot::Leaf { var, .. } => s.insert(*var),
                other => {
                    for &ch in other.children() {
                        s.union_with(scopes[ch].as_ref()?);
                    }
                }
            }
            scopes[i] = Some(s);
        }
        scopes[target].take()
    }
}
