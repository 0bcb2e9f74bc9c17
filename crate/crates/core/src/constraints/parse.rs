//! Constraint text format, one constraint per line:
//!
//! ```text
//! independence X1 X2
//! independence X1 X2 given Z W
//! independence X1 X2 context Z=1 W=0
//! conditional-eq Y wrt A context Z=1
//! conditional-eq Y wrt A on-rest
//! interventional-eq A parents P1 P2, targets P1 P2 Y
//! ```
//!
//! Blank lines and `#` comments are ignored. Commas are separators.

use thiserror::Error;

use crate::circuit::{Assignment, Variable};

use super::{ConditionalEquality, Constraint, Given, Independence, InterventionalEquality};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ConstraintParseError {
    pub line: usize,
    pub message: String,
}

pub fn parse_constraints(
    text: &str,
    vars: &[Variable],
) -> Result<Vec<Constraint>, ConstraintParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").replace(',', " ");
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let c = parse_line(&tokens, vars).map_err(|message| ConstraintParseError {
            line: i + 1,
            message,
        })?;
        c.check(vars).map_err(|e| ConstraintParseError {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(c);
    }
    Ok(out)
}

fn var(vars: &[Variable], name: &str) -> Result<usize, String> {
    vars.iter()
        .find(|v| v.name() == name)
        .map(|v| v.index())
        .ok_or_else(|| format!("unknown variable `{name}`"))
}

fn binding(vars: &[Variable], tok: &str) -> Result<(usize, bool), String> {
    let (name, value) = tok
        .split_once('=')
        .ok_or_else(|| format!("expected `<var>=<0|1>`, found `{tok}`"))?;
    let value = match value {
        "0" => false,
        "1" => true,
        other => return Err(format!("value `{other}` is not 0 or 1")),
    };
    Ok((var(vars, name)?, value))
}

fn context(vars: &[Variable], toks: &[&str]) -> Result<Assignment, String> {
    if toks.is_empty() {
        return Err("`context` needs at least one `<var>=<0|1>`".into());
    }
    let mut a = Assignment::new();
    for t in toks {
        let (v, x) = binding(vars, t)?;
        if a.get(v).is_some() {
            return Err(format!("variable `{}` assigned twice", vars[v].name()));
        }
        a.set(v, x);
    }
    Ok(a)
}

fn parse_line(tokens: &[&str], vars: &[Variable]) -> Result<Constraint, String> {
    match tokens[0] {
        "independence" => {
            let [_, left, right, rest @ ..] = tokens else {
                return Err("expected `independence <left> <right> ...`".into());
            };
            let given = match rest {
                [] => Given::Nothing,
                ["given", vs @ ..] if !vs.is_empty() => {
                    Given::Variables(vs.iter().map(|v| var(vars, v)).collect::<Result<_, _>>()?)
                }
                ["context", bs @ ..] => Given::Context(context(vars, bs)?),
                _ => return Err(format!("unexpected `{}`", rest.join(" "))),
            };
            Ok(Independence {
                left: var(vars, left)?,
                right: var(vars, right)?,
                given,
            }
            .into())
        }
        "conditional-eq" => {
            let [_, target, "wrt", attribute, rest @ ..] = tokens else {
                return Err("expected `conditional-eq <target> wrt <attribute> ...`".into());
            };
            let (rest, on_rest) = match rest {
                [head @ .., "on-rest"] => (head, true),
                _ => (rest, false),
            };
            let ctx = match rest {
                [] => Assignment::new(),
                ["context", bs @ ..] => context(vars, bs)?,
                _ => return Err(format!("unexpected `{}`", rest.join(" "))),
            };
            Ok(ConditionalEquality {
                target: var(vars, target)?,
                attribute: var(vars, attribute)?,
                context: ctx,
                condition_on_rest: on_rest,
            }
            .into())
        }
        "interventional-eq" => {
            let [_, intervened, "parents", rest @ ..] = tokens else {
                return Err("expected `interventional-eq <var> parents ... targets ...`".into());
            };
            let split = rest.iter().position(|t| *t == "targets");
            let (parents, targets) = match split {
                Some(k) => (&rest[..k], Some(&rest[k + 1..])),
                None => (rest, None),
            };
            let parents = parents
                .iter()
                .map(|v| var(vars, v))
                .collect::<Result<_, _>>()?;
            let targets = match targets {
                Some([]) => return Err("`targets` needs at least one variable".into()),
                Some(ts) => Some(ts.iter().map(|v| var(vars, v)).collect::<Result<_, _>>()?),
                None => None,
            };
            Ok(InterventionalEquality {
                intervened: var(vars, intervened)?,
                parents,
                targets,
            }
            .into())
        }
        other => Err(format!("unknown constraint `{other}`")),
    }
}
