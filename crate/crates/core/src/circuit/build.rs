use rand::seq::SliceRandom;
use rand::Rng;

use super::{Circuit, CircuitError, Node, NodeId, Polarity, Variable};

pub const MAX_FULL_JOINT_VARIABLES: usize = 20;

/// Leaf ids are `2i` (positive) and `2i + 1` (negative) for variable `i`.
fn leaves(n: usize) -> Vec<(NodeId, Node)> {
    (0..n)
        .flat_map(|i| {
            [
                (
                    NodeId(2 * i),
                    Node::Leaf {
                        var: i,
                        polarity: Polarity::Positive,
                    },
                ),
                (
                    NodeId(2 * i + 1),
                    Node::Leaf {
                        var: i,
                        polarity: Polarity::Negative,
                    },
                ),
            ]
        })
        .collect()
}

fn literal(var: usize, value: bool) -> NodeId {
    NodeId(2 * var + usize::from(!value))
}

/// Canonical circuit: a root sum over all `2^n` complete products, with the
/// edge into the product for state `a` weighted by `probs[a]` (bit `i` of `a`
/// is the value of variable `i`).
pub fn full_joint_circuit(
    variables: Vec<Variable>,
    probs: &[f64],
) -> Result<Circuit, CircuitError> {
    let n = variables.len();
    if n > MAX_FULL_JOINT_VARIABLES {
        return Err(CircuitError::TooManyVariables {
            found: n,
            limit: MAX_FULL_JOINT_VARIABLES,
        });
    }
    if n == 0 {
        return Err(CircuitError::InvalidTable("no variables".into()));
    }
    if probs.len() != 1 << n {
        return Err(CircuitError::InvalidTable(format!(
            "expected {} entries, found {}",
            1usize << n,
            probs.len()
        )));
    }
    if let Some(bad) = probs.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
        return Err(CircuitError::InvalidTable(format!(
            "entry {bad} is not a non-negative number"
        )));
    }

    let mut nodes = leaves(n);
    let root = NodeId(2 * n + (1 << n));
    let children: Vec<NodeId> = if n == 1 {
        // a product of one leaf is the leaf itself
        vec![literal(0, false), literal(0, true)]
    } else {
        (0..1usize << n)
            .map(|state| {
                let id = NodeId(2 * n + state);
                let lits = (0..n).map(|i| literal(i, (state >> i) & 1 == 1)).collect();
                nodes.push((id, Node::Product { children: lits }));
                id
            })
            .collect()
    };
    nodes.push((
        root,
        Node::Sum {
            children,
            weights: probs.to_vec(),
        },
    ));
    Circuit::new(variables, nodes, root)
}

/// Random two-level sum-of-products circuit: a root mixture of `components`
/// products, each of which factorizes the variables into random blocks of one
/// or two variables with a full-joint sum per block. Weights are drawn
/// uniformly from `[0.05, 1)` and are not normalized.
pub fn mixture_circuit<R: Rng + ?Sized>(
    variables: Vec<Variable>,
    components: usize,
    rng: &mut R,
) -> Result<Circuit, CircuitError> {
    let n = variables.len();
    if n == 0 || components == 0 {
        return Err(CircuitError::InvalidTable("empty mixture".into()));
    }
    let mut nodes = leaves(n);
    let mut next = 2 * n;
    let mut fresh = || {
        next += 1;
        NodeId(next - 1)
    };
    let weight = |rng: &mut R, k: usize| -> Vec<f64> {
        (0..k).map(|_| rng.random_range(0.05..1.0)).collect()
    };

    let mut roots = Vec::with_capacity(components);
    for _ in 0..components {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let mut blocks = Vec::new();
        let mut rest = &perm[..];
        while !rest.is_empty() {
            let size = if rest.len() >= 2 && rng.random_bool(0.5) {
                2
            } else {
                1
            };
            let (block, tail) = rest.split_at(size);
            blocks.push(block.to_vec());
            rest = tail;
        }
        let mut block_roots = Vec::new();
        for block in blocks {
            let children: Vec<NodeId> = match block[..] {
                [v] => vec![literal(v, true), literal(v, false)],
                [a, b] => (0..4)
                    .map(|s| {
                        let id = fresh();
                        nodes.push((
                            id,
                            Node::Product {
                                children: vec![literal(a, s & 1 == 1), literal(b, s & 2 == 2)],
                            },
                        ));
                        id
                    })
                    .collect(),
                _ => unreachable!(),
            };
            let id = fresh();
            let w = weight(rng, children.len());
            nodes.push((
                id,
                Node::Sum {
                    children,
                    weights: w,
                },
            ));
            block_roots.push(id);
        }
        if block_roots.len() == 1 {
            roots.push(block_roots[0]);
        } else {
            let id = fresh();
            nodes.push((
                id,
                Node::Product {
                    children: block_roots,
                },
            ));
            roots.push(id);
        }
    }
    let root = fresh();
    let w = weight(rng, roots.len());
    nodes.push((
        root,
        Node::Sum {
            children: roots,
            weights: w,
        },
    ));
    Circuit::new(variables, nodes, root)
}
