//! Line-oriented model text format.
//!
//! ```text
//! spn 1
//! var 0 X1
//! leaf 0 X1 +
//! leaf 1 X1 -
//! sum 2 1:2.9999999999999999e-1 0:6.9999999999999996e-1
//! root 2
//! ```
//!
//! `#` starts a comment. Children must be declared before their parents.

use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

use super::{Circuit, Node, NodeId, Polarity, Slot, Variable};

pub const FORMAT_VERSION: &str = "spn 1";

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

pub(super) fn serialize(c: &Circuit) -> String {
    let mut out = String::from(FORMAT_VERSION);
    out.push('\n');
    for v in &c.variables {
        let _ = writeln!(out, "var {} {}", v.index(), v.name());
    }
    for &i in &c.order {
        let id = c.ids[i];
        match &c.slots[i] {
            Slot::Leaf { var, polarity } => {
                let sign = match polarity {
                    Polarity::Positive => '+',
                    Polarity::Negative => '-',
                };
                let _ = writeln!(out, "leaf {id} {} {sign}", c.variables[*var].name());
            }
            Slot::Product { children } => {
                let _ = write!(out, "prod {id}");
                for &ch in children {
                    let _ = write!(out, " {}", c.ids[ch]);
                }
                out.push('\n');
            }
            Slot::Sum { children, offset } => {
                let _ = write!(out, "sum {id}");
                for (k, &ch) in children.iter().enumerate() {
                    let _ = write!(out, " {}:{:.16e}", c.ids[ch], c.weights[offset + k]);
                }
                out.push('\n');
            }
        }
    }
    let _ = writeln!(out, "root {}", c.root());
    out
}

/// Parses model text into a circuit. Structural validity (completeness,
/// weight signs, ...) is not checked here; see [`Circuit::validate`].
pub fn parse_model(text: &str) -> Result<Circuit, ParseError> {
    let mut variables: Vec<Variable> = Vec::new();
    let mut nodes: Vec<(NodeId, Node)> = Vec::new();
    let mut declared: HashSet<NodeId> = HashSet::new();
    let mut root: Option<(NodeId, usize)> = None;
    let mut header = false;
    let mut last_line = 0;

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        last_line = line_no;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !header {
            if tokens != ["spn", "1"] {
                return Err(err(
                    line_no,
                    format!("expected `{FORMAT_VERSION}` header, found `{line}`"),
                ));
            }
            header = true;
            continue;
        }
        let parse_id = |tok: &str| -> Result<NodeId, ParseError> {
            tok.parse::<usize>()
                .map(NodeId)
                .map_err(|_| err(line_no, format!("invalid node id `{tok}`")))
        };
        let child = |tok: &str| -> Result<NodeId, ParseError> {
            let id = parse_id(tok)?;
            if declared.contains(&id) {
                Ok(id)
            } else {
                Err(err(
                    line_no,
                    format!("child id {id} is not declared before use"),
                ))
            }
        };

        match tokens[0] {
            "var" => {
                let [_, index, name] = tokens[..] else {
                    return Err(err(line_no, "expected `var <index> <name>`"));
                };
                let index: usize = index
                    .parse()
                    .map_err(|_| err(line_no, format!("invalid variable index `{index}`")))?;
                if index != variables.len() {
                    return Err(err(
                        line_no,
                        format!(
                            "variable index {index} out of sequence, expected {}",
                            variables.len()
                        ),
                    ));
                }
                if variables.iter().any(|v| v.name() == name) {
                    return Err(err(line_no, format!("duplicate variable `{name}`")));
                }
                variables
                    .push(Variable::new(index, name).map_err(|e| err(line_no, e.to_string()))?);
            }
            "leaf" => {
                let [_, id, name, sign] = tokens[..] else {
                    return Err(err(line_no, "expected `leaf <id> <var-name> <+|->`"));
                };
                let id = parse_id(id)?;
                let var = variables
                    .iter()
                    .find(|v| v.name() == name)
                    .ok_or_else(|| err(line_no, format!("unknown variable `{name}`")))?
                    .index();
                let polarity = match sign {
                    "+" => Polarity::Positive,
                    "-" => Polarity::Negative,
                    other => return Err(err(line_no, format!("invalid polarity `{other}`"))),
                };
                declare(&mut declared, id, line_no)?;
                nodes.push((id, Node::Leaf { var, polarity }));
            }
            "prod" => {
                if tokens.len() < 2 {
                    return Err(err(line_no, "expected `prod <id> <child-id> ...`"));
                }
                let id = parse_id(tokens[1])?;
                let children = tokens[2..]
                    .iter()
                    .map(|t| child(t))
                    .collect::<Result<Vec<_>, _>>()?;
                declare(&mut declared, id, line_no)?;
                nodes.push((id, Node::Product { children }));
            }
            "sum" => {
                if tokens.len() < 2 {
                    return Err(err(line_no, "expected `sum <id> <child-id>:<weight> ...`"));
                }
                let id = parse_id(tokens[1])?;
                let mut children = Vec::new();
                let mut weights = Vec::new();
                for tok in &tokens[2..] {
                    let (c, w) = tok.split_once(':').ok_or_else(|| {
                        err(
                            line_no,
                            format!("expected `<child-id>:<weight>`, found `{tok}`"),
                        )
                    })?;
                    children.push(child(c)?);
                    weights.push(
                        w.parse::<f64>()
                            .map_err(|_| err(line_no, format!("invalid weight `{w}`")))?,
                    );
                }
                declare(&mut declared, id, line_no)?;
                nodes.push((id, Node::Sum { children, weights }));
            }
            "root" => {
                let [_, id] = tokens[..] else {
                    return Err(err(line_no, "expected `root <id>`"));
                };
                if root.is_some() {
                    return Err(err(line_no, "root declared twice"));
                }
                let id = parse_id(id)?;
                if !declared.contains(&id) {
                    return Err(err(line_no, format!("root id {id} is not declared")));
                }
                root = Some((id, line_no));
            }
            other => return Err(err(line_no, format!("unknown directive `{other}`"))),
        }
    }

    if !header {
        return Err(err(
            last_line.max(1),
            format!("missing `{FORMAT_VERSION}` header"),
        ));
    }
    let (root, root_line) = root.ok_or_else(|| err(last_line, "missing `root` line"))?;
    Circuit::new(variables, nodes, root).map_err(|e| err(root_line, e.to_string()))
}

fn declare(declared: &mut HashSet<NodeId>, id: NodeId, line: usize) -> Result<(), ParseError> {
    if declared.insert(id) {
        Ok(())
    } else {
        Err(err(line, format!("node id {id} declared twice")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{full_joint_circuit, Assignment, Property};

    #[test]
    fn round_trip_is_bit_exact() {
        let probs = [0.1, 0.2, 0.3, 0.05, 0.05, 0.1, 0.15, 0.05];
        let c = full_joint_circuit(Variable::numbered(3), &probs).unwrap();
        let text = c.to_text();
        let back = parse_model(&text).unwrap();
        assert_eq!(back.weights(), c.weights());
        assert_eq!(back.node_ids(), c.node_ids());
        for id in c.node_ids() {
            assert_eq!(back.node(*id), c.node(*id));
        }
        for a in Assignment::enumerate(&[0, 1, 2]) {
            assert_eq!(
                back.evaluate(&a).unwrap().to_bits(),
                c.evaluate(&a).unwrap().to_bits()
            );
        }
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn weights_use_seventeen_digits() {
        let c = full_joint_circuit(Variable::numbered(1), &[0.3, 0.7]).unwrap();
        let text = c.to_text();
        assert!(
            text.contains("sum 4 1:2.9999999999999999e-1 0:6.9999999999999996e-1"),
            "{text}"
        );
    }

    #[test]
    fn missing_child_is_cited() {
        let text = "spn 1\nvar 0 A\nleaf 0 A +\nsum 1 0:0.5 9:0.5\nroot 1\n";
        let e = parse_model(text).unwrap_err();
        assert_eq!(e.line, 4);
        assert!(e.message.contains('9'), "{e}");
    }

    #[test]
    fn negative_weight_fails_validation() {
        let text = "spn 1\nvar 0 A\nleaf 0 A +\nleaf 1 A -\nsum 2 0:-0.5 1:1.5\nroot 2\n";
        let c = parse_model(text).unwrap();
        assert_eq!(c.validate().count(Property::WeightNonNegative), 1);
    }

    #[test]
    fn comments_and_errors() {
        let text =
            "# model\nspn 1 # header\nvar 0 A\n\nleaf 0 A +\nleaf 1 A -\nsum 2 0:1 1:1\nroot 2\n";
        assert!(parse_model(text).is_ok());
        assert_eq!(parse_model("spn 2\n").unwrap_err().line, 1);
        assert_eq!(parse_model("spn 1\nvar 1 A\n").unwrap_err().line, 2);
        assert_eq!(
            parse_model("spn 1\nvar 0 A\nleaf 0 B +\n")
                .unwrap_err()
                .line,
            3
        );
        assert_eq!(
            parse_model("spn 1\nvar 0 A\nleaf 0 A +\nleaf 0 A -\n")
                .unwrap_err()
                .line,
            4
        );
        assert!(parse_model("spn 1\nvar 0 A\nleaf 0 A +\n")
            .unwrap_err()
            .message
            .contains("root"));
        assert_eq!(
            parse_model("spn 1\nvar 0 A\nleaf 0 A +\nsum 1 0:x\n")
                .unwrap_err()
                .line,
            4
        );
    }
}
