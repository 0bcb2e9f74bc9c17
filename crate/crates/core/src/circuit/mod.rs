//! Sum-product networks over binary variables.
//!
//! A [`Circuit`] is a rooted DAG of sum, product and indicator-leaf nodes. It
//! computes the network polynomial `S(x)`; every probability query is the
//! ratio of two evaluations of that polynomial, so circuits do not need to be
//! normalized. Structure is fixed at construction; the sum-edge weights live
//! in a flat vector that can be swapped out by the optimizer.

mod assignment;
mod build;
mod format;
mod validate;

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;

use thiserror::Error;

pub use assignment::Assignment;
pub use build::{full_joint_circuit, mixture_circuit, MAX_FULL_JOINT_VARIABLES};
pub use format::{parse_model, ParseError, FORMAT_VERSION};
pub use validate::{Property, Scope, ValidationReport, Violation};

/// Errors raised while building or querying a circuit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("invalid variable name `{0}`")]
    InvalidVariableName(String),
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("variable indices must be dense 0..{expected}, found index {found}")]
    NonDenseVariables { expected: usize, found: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("node {parent} references missing child {child}")]
    MissingChild { parent: NodeId, child: NodeId },
    #[error("root node {0} does not exist")]
    MissingRoot(NodeId),
    #[error("sum node {node} has {children} children but {weights} weights")]
    WeightArity {
        node: NodeId,
        children: usize,
        weights: usize,
    },
    #[error("weight vector has length {found}, circuit has {expected} sum edges")]
    WeightLength { expected: usize, found: usize },
    #[error("circuit contains a directed cycle")]
    Cyclic,
    #[error("circuit is invalid: {0}")]
    Invalid(ValidationReport),
    #[error("degenerate circuit: S(no evidence) = {0}")]
    Degenerate(f64),
    #[error("conditioning event has zero probability")]
    ZeroEvidence,
    #[error("target and evidence both assign variable `{0}`")]
    OverlappingQuery(String),
    #[error("too many variables to enumerate: {found} > {limit}")]
    TooManyVariables { found: usize, limit: usize },
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("intervention: {0}")]
    Intervention(String),
}

/// A binary variable. Indices are dense within one circuit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Variable {
    index: usize,
    name: String,
}

impl Variable {
    pub fn new(index: usize, name: impl Into<String>) -> Result<Self, CircuitError> {
        let name = name.into();
        if !is_identifier(&name) {
            return Err(CircuitError::InvalidVariableName(name));
        }
        Ok(Variable { index, name })
    }

    /// Variables `names[i]` with index `i`.
    pub fn list<S: AsRef<str>>(names: &[S]) -> Result<Vec<Variable>, CircuitError> {
        let vars = names
            .iter()
            .enumerate()
            .map(|(i, n)| Variable::new(i, n.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        check_variables(&vars)?;
        Ok(vars)
    }

    /// `X1, X2, ..., Xn`.
    pub fn numbered(n: usize) -> Vec<Variable> {
        (0..n)
            .map(|i| Variable {
                index: i,
                name: format!("X{}", i + 1),
            })
            .collect()
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn check_variables(vars: &[Variable]) -> Result<(), CircuitError> {
    let mut seen = HashMap::new();
    for (i, v) in vars.iter().enumerate() {
        if v.index != i {
            return Err(CircuitError::NonDenseVariables {
                expected: vars.len(),
                found: v.index,
            });
        }
        if seen.insert(v.name.as_str(), i).is_some() {
            return Err(CircuitError::DuplicateVariable(v.name.clone()));
        }
    }
    Ok(())
}

/// Node identifier as it appears in model files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    /// Value of the indicator under a (possibly missing) variable value.
    fn indicator(self, value: Option<bool>) -> f64 {
        match (self, value) {
            (_, None) => 1.0,
            (Polarity::Positive, Some(true)) | (Polarity::Negative, Some(false)) => 1.0,
            _ => 0.0,
        }
    }
}

/// A node as supplied to [`Circuit::new`] or returned by [`Circuit::node`].
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Sum {
        children: Vec<NodeId>,
        weights: Vec<f64>,
    },
    Product {
        children: Vec<NodeId>,
    },
    Leaf {
        var: usize,
        polarity: Polarity,
    },
}

#[derive(Clone, Debug)]
enum Slot {
    Sum { children: Vec<usize>, offset: usize },
    Product { children: Vec<usize> },
    Leaf { var: usize, polarity: Polarity },
}

impl Slot {
    fn children(&self) -> &[usize] {
        match self {
            Slot::Sum { children, .. } | Slot::Product { children } => children,
            Slot::Leaf { .. } => &[],
        }
    }
}

/// A sum-product network.
///
/// Nodes are stored in ascending id order; the flat weight vector follows the
/// same order (ascending sum-node id, then child position).
#[derive(Clone, Debug)]
pub struct Circuit {
    variables: Vec<Variable>,
    ids: Vec<NodeId>,
    slots: Vec<Slot>,
    weights: Vec<f64>,
    root: usize,
    /// Children-before-parents order over the acyclic part of the graph.
    order: Vec<usize>,
    acyclic: bool,
}

impl Circuit {
    /// Builds a circuit from explicit nodes. Referential problems (unknown
    /// ids, variables, weight arity) are errors; structural properties such as
    /// completeness are checked separately by [`Circuit::validate`].
    pub fn new(
        variables: Vec<Variable>,
        mut nodes: Vec<(NodeId, Node)>,
        root: NodeId,
    ) -> Result<Self, CircuitError> {
        check_variables(&variables)?;
        nodes.sort_by_key(|(id, _)| *id);
        for pair in nodes.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(CircuitError::DuplicateNode(pair[0].0));
            }
        }
        let ids: Vec<NodeId> = nodes.iter().map(|(id, _)| *id).collect();
        let position = |parent: NodeId, child: NodeId| {
            ids.binary_search(&child)
                .map_err(|_| CircuitError::MissingChild { parent, child })
        };

        let mut slots = Vec::with_capacity(nodes.len());
        let mut weights = Vec::new();
        for (id, node) in nodes {
            let slot = match node {
                Node::Sum {
                    children,
                    weights: w,
                } => {
                    if children.len() != w.len() {
                        return Err(CircuitError::WeightArity {
                            node: id,
                            children: children.len(),
                            weights: w.len(),
                        });
                    }
                    let offset = weights.len();
                    weights.extend_from_slice(&w);
                    Slot::Sum {
                        children: children
                            .iter()
                            .map(|&c| position(id, c))
                            .collect::<Result<_, _>>()?,
                        offset,
                    }
                }
                Node::Product { children } => Slot::Product {
                    children: children
                        .iter()
                        .map(|&c| position(id, c))
                        .collect::<Result<_, _>>()?,
                },
                Node::Leaf { var, polarity } => {
                    if var >= variables.len() {
                        return Err(CircuitError::UnknownVariable(format!("#{var}")));
                    }
                    Slot::Leaf { var, polarity }
                }
            };
            slots.push(slot);
        }
        let root = ids
            .binary_search(&root)
            .map_err(|_| CircuitError::MissingRoot(root))?;

        let (order, acyclic) = topological_order(&slots);
        Ok(Circuit {
            variables,
            ids,
            slots,
            weights,
            root,
            order,
            acyclic,
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn variable(&self, name: &str) -> Result<&Variable, CircuitError> {
        self.variables
            .iter()
            .find(|v| v.name == name)
            .ok_or_else(|| CircuitError::UnknownVariable(name.to_string()))
    }

    pub fn root(&self) -> NodeId {
        self.ids[self.root]
    }

    pub fn num_nodes(&self) -> usize {
        self.slots.len()
    }

    /// Node ids in ascending order.
    pub fn node_ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn node(&self, id: NodeId) -> Option<Node> {
        let i = self.ids.binary_search(&id).ok()?;
        Some(self.node_at(i))
    }

    fn node_at(&self, i: usize) -> Node {
        let ids = |c: &[usize]| c.iter().map(|&j| self.ids[j]).collect();
        match &self.slots[i] {
            Slot::Sum { children, offset } => Node::Sum {
                children: ids(children),
                weights: self.weights[*offset..*offset + children.len()].to_vec(),
            },
            Slot::Product { children } => Node::Product {
                children: ids(children),
            },
            Slot::Leaf { var, polarity } => Node::Leaf {
                var: *var,
                polarity: *polarity,
            },
        }
    }

    /// Number of sum edges, i.e. the length of the weight vector.
    pub fn num_weights(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: &[f64]) -> Result<(), CircuitError> {
        if weights.len() != self.weights.len() {
            return Err(CircuitError::WeightLength {
                expected: self.weights.len(),
                found: weights.len(),
            });
        }
        self.weights.copy_from_slice(weights);
        Ok(())
    }

    /// Same structure, different weights.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Circuit, CircuitError> {
        let mut c = self.clone();
        c.set_weights(weights)?;
        Ok(c)
    }

    /// `(sum node, child position)` label of every weight, in weight order.
    pub fn edges(&self) -> Vec<(NodeId, usize)> {
        let mut out = Vec::with_capacity(self.weights.len());
        for (i, slot) in self.slots.iter().enumerate() {
            if let Slot::Sum { children, .. } = slot {
                out.extend((0..children.len()).map(|k| (self.ids[i], k)));
            }
        }
        out
    }

    /// Weight ranges of each sum node, in weight order. Each range is one
    /// probability simplex for the optimizer.
    pub fn sum_blocks(&self) -> Vec<Range<usize>> {
        self.slots
            .iter()
            .filter_map(|s| match s {
                Slot::Sum { children, offset } => Some(*offset..*offset + children.len()),
                _ => None,
            })
            .collect()
    }

    /// Weight indices of the root's outgoing edges (empty if the root is not a sum).
    pub fn root_edges(&self) -> Range<usize> {
        match &self.slots[self.root] {
            Slot::Sum { children, offset } => *offset..*offset + children.len(),
            _ => 0..0,
        }
    }

    fn evidence(&self, assignment: &Assignment) -> Result<Vec<Option<bool>>, CircuitError> {
        let mut ev = vec![None; self.variables.len()];
        for (var, value) in assignment.iter() {
            if var >= ev.len() {
                return Err(CircuitError::UnknownVariable(format!("#{var}")));
            }
            ev[var] = Some(value);
        }
        Ok(ev)
    }

    fn forward(&self, weights: &[f64], evidence: &[Option<bool>]) -> Vec<f64> {
        let mut values = vec![0.0; self.slots.len()];
        for &i in &self.order {
            values[i] = match &self.slots[i] {
                Slot::Leaf { var, polarity } => polarity.indicator(evidence[*var]),
                Slot::Product { children } => children.iter().map(|&c| values[c]).product(),
                Slot::Sum { children, offset } => children
                    .iter()
                    .zip(&weights[*offset..])
                    .map(|(&c, w)| w * values[c])
                    .sum(),
            };
        }
        values
    }

    fn backward(&self, weights: &[f64], values: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; weights.len()];
        let mut upstream = vec![0.0; self.slots.len()];
        upstream[self.root] = 1.0;
        for &i in self.order.iter().rev() {
            let d = upstream[i];
            if d == 0.0 {
                continue;
            }
            match &self.slots[i] {
                Slot::Leaf { .. } => {}
                Slot::Sum { children, offset } => {
                    for (k, &c) in children.iter().enumerate() {
                        grad[offset + k] += d * values[c];
                        upstream[c] += d * weights[offset + k];
                    }
                }
                Slot::Product { children } => {
                    // product of the siblings of each child, without division
                    let n = children.len();
                    let mut prefix = vec![1.0; n + 1];
                    for k in 0..n {
                        prefix[k + 1] = prefix[k] * values[children[k]];
                    }
                    let mut suffix = 1.0;
                    for k in (0..n).rev() {
                        upstream[children[k]] += d * prefix[k] * suffix;
                        suffix *= values[children[k]];
                    }
                }
            }
        }
        grad
    }

    fn require_acyclic(&self) -> Result<(), CircuitError> {
        if self.acyclic {
            Ok(())
        } else {
            Err(CircuitError::Cyclic)
        }
    }

    /// Network polynomial at the indicator setting induced by `assignment`;
    /// unassigned variables have both indicators set to 1.
    pub fn evaluate(&self, assignment: &Assignment) -> Result<f64, CircuitError> {
        self.evaluate_with_weights(&self.weights, assignment)
    }

    /// [`Circuit::evaluate`] with an explicit weight vector (weights need not be
    /// non-negative).
    pub fn evaluate_with_weights(
        &self,
        weights: &[f64],
        assignment: &Assignment,
    ) -> Result<f64, CircuitError> {
        self.require_acyclic()?;
        if weights.len() != self.weights.len() {
            return Err(CircuitError::WeightLength {
                expected: self.weights.len(),
                found: weights.len(),
            });
        }
        let ev = self.evidence(assignment)?;
        Ok(self.forward(weights, &ev)[self.root])
    }

    /// `S(assignment)` and `∂S(assignment)/∂w` for every sum edge.
    pub fn value_and_gradient(
        &self,
        assignment: &Assignment,
    ) -> Result<(f64, Vec<f64>), CircuitError> {
        self.require_acyclic()?;
        let ev = self.evidence(assignment)?;
        let values = self.forward(&self.weights, &ev);
        let grad = self.backward(&self.weights, &values);
        Ok((values[self.root], grad))
    }

    pub fn gradient(&self, assignment: &Assignment) -> Result<Vec<f64>, CircuitError> {
        Ok(self.value_and_gradient(assignment)?.1)
    }

    /// Normalizing constant `S(∅)`; errors if it is not strictly positive.
    pub fn partition(&self) -> Result<f64, CircuitError> {
        let z = self.evaluate(&Assignment::new())?;
        if z > 0.0 && z.is_finite() {
            Ok(z)
        } else {
            Err(CircuitError::Degenerate(z))
        }
    }

    /// `S(query) / S(∅)`.
    pub fn marginal(&self, query: &Assignment) -> Result<f64, CircuitError> {
        let z = self.partition()?;
        Ok(self.evaluate(query)? / z)
    }

    /// `Pr(target | evidence)`.
    pub fn conditional(
        &self,
        target: &Assignment,
        evidence: &Assignment,
    ) -> Result<f64, CircuitError> {
        let joint = self.union(target, evidence)?;
        let denom = self.marginal(evidence)?;
        if denom == 0.0 {
            return Err(CircuitError::ZeroEvidence);
        }
        Ok(self.marginal(&joint)? / denom)
    }

    fn union(&self, a: &Assignment, b: &Assignment) -> Result<Assignment, CircuitError> {
        a.union(b).map_err(|var| {
            CircuitError::OverlappingQuery(
                self.variables
                    .get(var)
                    .map(|v| v.name.clone())
                    .unwrap_or_else(|| format!("#{var}")),
            )
        })
    }

    /// Normalized marginal and its exact gradient with respect to the weights,
    /// by the quotient rule over `S(query)` and `S(∅)`.
    pub fn marginal_and_gradient(
        &self,
        query: &Assignment,
    ) -> Result<(f64, Vec<f64>), CircuitError> {
        let (z, grad_z) = self.value_and_gradient(&Assignment::new())?;
        if !(z > 0.0 && z.is_finite()) {
            return Err(CircuitError::Degenerate(z));
        }
        let (s, grad_s) = self.value_and_gradient(query)?;
        let p = s / z;
        let grad = grad_s
            .iter()
            .zip(&grad_z)
            .map(|(gs, gz)| (gs - p * gz) / z)
            .collect();
        Ok((p, grad))
    }

    /// `Pr(target | do(intervened = value))` through the truncated
    /// factorization `Pr(x, A=a) / Pr(A=a | pa_A)`, summing over parent
    /// configurations not fixed by `target`.
    pub fn interventional(
        &self,
        target: &Assignment,
        intervened: usize,
        value: bool,
        parents: &[usize],
    ) -> Result<f64, CircuitError> {
        if target.get(intervened).is_some() {
            return Err(CircuitError::Intervention(
                "target assigns the intervened variable".into(),
            ));
        }
        if parents.contains(&intervened) {
            return Err(CircuitError::Intervention(
                "intervened variable listed among its parents".into(),
            ));
        }
        let free: Vec<usize> = parents
            .iter()
            .copied()
            .filter(|p| target.get(*p).is_none())
            .collect();
        if free.len() > 16 {
            return Err(CircuitError::TooManyVariables {
                found: free.len(),
                limit: 16,
            });
        }
        let mut total = 0.0;
        for config in Assignment::enumerate(&free) {
            let t = self.union(target, &config)?;
            let pa = t.restrict(parents);
            let joint = self.marginal(&t.with(intervened, value))?;
            let pa_mass = self.marginal(&pa)?;
            if pa_mass == 0.0 || joint == 0.0 {
                continue;
            }
            let given = self.marginal(&pa.with(intervened, value))? / pa_mass;
            if given == 0.0 {
                return Err(CircuitError::Intervention(
                    "Pr(A = value | parents) is zero on a positive-mass parent configuration"
                        .into(),
                ));
            }
            total += joint / given;
        }
        Ok(total)
    }

    /// Resolve `(name, value)` pairs into an assignment over this circuit.
    pub fn assignment(&self, pairs: &[(&str, u8)]) -> Result<Assignment, CircuitError> {
        let mut a = Assignment::new();
        for &(name, value) in pairs {
            let v = self.variable(name)?;
            a.set(v.index, value != 0);
        }
        Ok(a)
    }

    /// `P(X1=1,X2=0)`-style rendering of an assignment.
    pub fn display_assignment(&self, a: &Assignment) -> String {
        a.display_with(&self.variables)
    }

    pub fn validate(&self) -> ValidationReport {
        validate::validate(self)
    }

    /// Errors with the full report if the circuit is invalid.
    pub fn validated(self) -> Result<Self, CircuitError> {
        let report = self.validate();
        if report.is_valid() {
            Ok(self)
        } else {
            Err(CircuitError::Invalid(report))
        }
    }

    pub fn to_text(&self) -> String {
        format::serialize(self)
    }
}

/// Kahn's algorithm over the child relation. Returns nodes in
/// children-before-parents order and whether every node was ordered.
fn topological_order(slots: &[Slot]) -> (Vec<usize>, bool) {
    let n = slots.len();
    let mut pending: Vec<usize> = slots.iter().map(|s| s.children().len()).collect();
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, s) in slots.iter().enumerate() {
        for &c in s.children() {
            parents[c].push(i);
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| pending[i] == 0).rev().collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop() {
        order.push(i);
        for &p in &parents[i] {
            pending[p] -= 1;
            if pending[p] == 0 {
                ready.push(p);
            }
        }
    }
    let acyclic = order.len() == n;
    (order, acyclic)
}
