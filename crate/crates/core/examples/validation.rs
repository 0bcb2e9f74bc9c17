//! Structural checks: a sum node whose children cover different variables and
//! a product node that uses the same variable twice.

use spn_constraints::circuit::{Circuit, Node, NodeId, Polarity, Variable};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let vars = Variable::numbered(2);
    let leaf = |v: usize, polarity| Node::Leaf { var: v, polarity };
    let nodes = vec![
        (NodeId(0), leaf(0, Polarity::Positive)),
        (NodeId(1), leaf(0, Polarity::Negative)),
        (NodeId(2), leaf(1, Polarity::Positive)),
        (
            NodeId(3),
            Node::Product {
                children: vec![NodeId(0), NodeId(1)],
            },
        ),
        (
            NodeId(4),
            Node::Sum {
                children: vec![NodeId(3), NodeId(2)],
                weights: vec![0.5, 0.5],
            },
        ),
    ];
    let circuit = Circuit::new(vars, nodes, NodeId(4))?;
    let report = circuit.validate();
    for v in &report.violations {
        println!("{v}");
    }
    assert!(!report.is_valid());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
