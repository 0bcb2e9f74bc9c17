use crate::circuit::{Assignment, Circuit, Variable};

use super::residual::{Provenance, Residual, ResidualSystem, ResidualTerm, Sign};
use super::{
    ConditionalEquality, Constraint, ConstraintError, ConstraintKind, Given, Independence,
    InterventionalEquality,
};

/// Largest variable set a compiler will enumerate assignments over.
pub const MAX_ENUMERATED: usize = 16;

/// Value order for the constrained variables themselves: 1 before 0.
const VALUES: [bool; 2] = [true, false];

fn check_size(found: usize) -> Result<(), ConstraintError> {
    if found > MAX_ENUMERATED {
        Err(ConstraintError::TooLarge {
            found,
            limit: MAX_ENUMERATED,
        })
    } else {
        Ok(())
    }
}

fn term(sign: Sign, factors: Vec<Assignment>) -> ResidualTerm {
    ResidualTerm::new(sign, factors)
}

fn provenance(index: usize, kind: ConstraintKind, case: String) -> Provenance {
    Provenance {
        constraint: index,
        kind,
        case,
        closed_world: kind == ConstraintKind::Interventional,
    }
}

fn case(vars: &[Variable], head: &Assignment, ctx: &Assignment) -> String {
    if ctx.is_empty() {
        head.display_with(vars)
    } else {
        format!("{} | {}", head.display_with(vars), ctx.display_with(vars))
    }
}

/// Cross-multiplied conditional equality: for each target value `y` (and each
/// context),
/// `Pr(Y=y, A=1, ctx)·Pr(A=0, ctx) − Pr(Y=y, A=0, ctx)·Pr(A=1, ctx)`.
pub fn compile_conditional(
    c: &ConditionalEquality,
    circuit: &Circuit,
) -> Result<ResidualSystem, ConstraintError> {
    compile_conditional_at(c, circuit, 0)
}

fn compile_conditional_at(
    c: &ConditionalEquality,
    circuit: &Circuit,
    index: usize,
) -> Result<ResidualSystem, ConstraintError> {
    let vars = circuit.variables();
    Constraint::ConditionalEquality(c.clone()).check(vars)?;
    let contexts: Vec<Assignment> = if c.condition_on_rest {
        let rest: Vec<usize> = (0..vars.len())
            .filter(|&v| v != c.target && v != c.attribute)
            .collect();
        check_size(rest.len())?;
        Assignment::enumerate(&rest).collect()
    } else {
        vec![c.context.clone()]
    };

    let mut out = Vec::with_capacity(2 * contexts.len());
    for ctx in &contexts {
        let a1 = ctx.clone().with(c.attribute, true);
        let a0 = ctx.clone().with(c.attribute, false);
        for y in VALUES {
            let y1 = a1.clone().with(c.target, y);
            let y0 = a0.clone().with(c.target, y);
            out.push(Residual {
                terms: vec![
                    term(Sign::Plus, vec![y1, a0.clone()]),
                    term(Sign::Minus, vec![y0, a1.clone()]),
                ],
                provenance: provenance(
                    index,
                    ConstraintKind::Conditional,
                    case(vars, &Assignment::new().with(c.target, y), ctx),
                ),
            });
        }
    }
    Ok(ResidualSystem::new(out))
}

/// Independence in product form: for each `(a, b)` and each context `g`,
/// `Pr(Xi=a, Xj=b, g)·Pr(g) − Pr(Xi=a, g)·Pr(Xj=b, g)`. With no context the
/// `Pr(g) = 1` factor is dropped, giving `Pr(Xi=a, Xj=b) − Pr(Xi=a)·Pr(Xj=b)`.
pub fn compile_independence(
    c: &Independence,
    circuit: &Circuit,
) -> Result<ResidualSystem, ConstraintError> {
    compile_independence_at(c, circuit, 0)
}

fn compile_independence_at(
    c: &Independence,
    circuit: &Circuit,
    index: usize,
) -> Result<ResidualSystem, ConstraintError> {
    let vars = circuit.variables();
    Constraint::Independence(c.clone()).check(vars)?;
    let contexts: Vec<Assignment> = match &c.given {
        Given::Nothing => vec![Assignment::new()],
        Given::Context(a) => vec![a.clone()],
        Given::Variables(g) => {
            let mut g = g.clone();
            g.sort_unstable();
            g.dedup();
            check_size(g.len())?;
            Assignment::enumerate(&g).collect()
        }
    };

    let mut out = Vec::with_capacity(4 * contexts.len());
    for g in &contexts {
        for a in VALUES {
            for b in VALUES {
                let ab = g.clone().with(c.left, a).with(c.right, b);
                let ag = g.clone().with(c.left, a);
                let bg = g.clone().with(c.right, b);
                let first = if g.is_empty() {
                    vec![ab.clone()]
                } else {
                    vec![ab.clone(), g.clone()]
                };
                out.push(Residual {
                    terms: vec![term(Sign::Plus, first), term(Sign::Minus, vec![ag, bg])],
                    provenance: provenance(
                        index,
                        ConstraintKind::Independence,
                        case(vars, &ab.restrict(&[c.left, c.right]), g),
                    ),
                });
            }
        }
    }
    Ok(ResidualSystem::new(out))
}

/// Cross-multiplied do-formula equality: for each complete assignment `t` of
/// the targets, with `pa` the parent values inside `t`,
/// `Pr(t, A=0)·Pr(A=1, pa) − Pr(t, A=1)·Pr(A=0, pa)`.
pub fn compile_interventional(
    c: &InterventionalEquality,
    circuit: &Circuit,
) -> Result<ResidualSystem, ConstraintError> {
    compile_interventional_at(c, circuit, 0)
}

fn compile_interventional_at(
    c: &InterventionalEquality,
    circuit: &Circuit,
    index: usize,
) -> Result<ResidualSystem, ConstraintError> {
    let vars = circuit.variables();
    Constraint::InterventionalEquality(c.clone()).check(vars)?;
    let targets = c.resolved_targets(vars.len());
    check_size(targets.len())?;

    let mut out = Vec::with_capacity(1 << targets.len());
    for t in Assignment::enumerate(&targets) {
        let pa = t.restrict(&c.parents);
        out.push(Residual {
            terms: vec![
                term(
                    Sign::Plus,
                    vec![
                        t.clone().with(c.intervened, false),
                        pa.clone().with(c.intervened, true),
                    ],
                ),
                term(
                    Sign::Minus,
                    vec![
                        t.clone().with(c.intervened, true),
                        pa.clone().with(c.intervened, false),
                    ],
                ),
            ],
            provenance: provenance(index, ConstraintKind::Interventional, t.display_with(vars)),
        });
    }
    Ok(ResidualSystem::new(out))
}

pub fn compile(c: &Constraint, circuit: &Circuit) -> Result<ResidualSystem, ConstraintError> {
    compile_indexed(c, circuit, 0)
}

fn compile_indexed(
    c: &Constraint,
    circuit: &Circuit,
    index: usize,
) -> Result<ResidualSystem, ConstraintError> {
    match c {
        Constraint::ConditionalEquality(c) => compile_conditional_at(c, circuit, index),
        Constraint::InterventionalEquality(c) => compile_interventional_at(c, circuit, index),
        Constraint::Independence(c) => compile_independence_at(c, circuit, index),
    }
}

/// Compiles every constraint, concatenating residuals in constraint order.
pub fn compile_all(
    constraints: &[Constraint],
    circuit: &Circuit,
) -> Result<ResidualSystem, ConstraintError> {
    let mut system = ResidualSystem::default();
    for (i, c) in constraints.iter().enumerate() {
        system.extend(compile_indexed(c, circuit, i)?);
    }
    Ok(system)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::full_joint_circuit;

    fn pair(w: [f64; 4]) -> Circuit {
        full_joint_circuit(Variable::numbered(2), &w).unwrap()
    }

    #[test]
    fn conditional_counts_and_values() {
        let c = pair([0.4, 0.1, 0.1, 0.4]);
        let sys = compile_conditional(&ConditionalEquality::new(0, 1), &c).unwrap();
        assert_eq!(sys.len(), 2);
        let v = sys.values(&c).unwrap();
        // Pr(X1=1,X2=1)·Pr(X2=0) − Pr(X1=1,X2=0)·Pr(X2=1) = 0.4·0.5 − 0.1·0.5
        assert!((v[0] - 0.15).abs() < 1e-15);
        assert!((v[1] + 0.15).abs() < 1e-15);

        let u = pair([0.25; 4]);
        assert!(sys.values(&u).unwrap().iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn conditional_on_rest_enumerates() {
        let c = full_joint_circuit(Variable::numbered(4), &[1.0 / 16.0; 16]).unwrap();
        let con = ConditionalEquality {
            condition_on_rest: true,
            ..ConditionalEquality::new(0, 1)
        };
        assert_eq!(compile_conditional(&con, &c).unwrap().len(), 2 * 4);
    }

    #[test]
    fn independence_counts_and_values() {
        let c = pair([0.4, 0.1, 0.1, 0.4]);
        let sys = compile_independence(&Independence::marginal(0, 1), &c).unwrap();
        assert_eq!(sys.len(), 4);
        let v = sys.values(&c).unwrap();
        assert!((v[0] - 0.15).abs() < 1e-15);
        assert_eq!(
            sys.render(c.variables())[0],
            "+P(X1=1,X2=1) -P(X1=1)*P(X2=1)"
        );

        let three = full_joint_circuit(Variable::numbered(3), &[0.125; 8]).unwrap();
        let given = Independence {
            left: 0,
            right: 1,
            given: Given::Variables(vec![2]),
        };
        let sys = compile_independence(&given, &three).unwrap();
        assert_eq!(sys.len(), 8);
        assert_eq!(
            sys.render(three.variables())[0],
            "+P(X1=1,X2=1,X3=0)*P(X3=0) -P(X1=1,X3=0)*P(X2=1,X3=0)"
        );
    }

    #[test]
    fn interventional_counts() {
        let c = full_joint_circuit(Variable::numbered(4), &[1.0 / 16.0; 16]).unwrap();
        for k in 1..=3 {
            let targets: Vec<usize> = (1..=k).collect();
            let con = InterventionalEquality {
                intervened: 0,
                parents: vec![1],
                targets: Some(targets),
            };
            let sys = compile_interventional(&con, &c).unwrap();
            assert_eq!(sys.len(), 1 << k);
            assert!(sys.residuals().iter().all(|r| r.provenance.closed_world));
        }
    }

    #[test]
    fn interventional_without_parents_is_conditioning() {
        let c = pair([0.4, 0.1, 0.2, 0.3]);
        let int = compile_interventional(
            &InterventionalEquality {
                intervened: 1,
                parents: vec![],
                targets: Some(vec![0]),
            },
            &c,
        )
        .unwrap();
        let cond = compile_conditional(&ConditionalEquality::new(0, 1), &c).unwrap();
        let vi = int.values(&c).unwrap();
        let vc = cond.values(&c).unwrap();
        // targets enumerate X1=0 then X1=1; conditional lists y=1 then y=0
        assert_eq!(vi[0], -vc[1]);
        assert_eq!(vi[1], -vc[0]);
    }

    #[test]
    fn enumeration_caps() {
        use rand::SeedableRng;
        let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(1);
        let c = crate::circuit::mixture_circuit(Variable::numbered(19), 1, &mut rng).unwrap();
        let con = ConditionalEquality {
            condition_on_rest: true,
            ..ConditionalEquality::new(0, 1)
        };
        assert!(matches!(
            compile_conditional(&con, &c),
            Err(ConstraintError::TooLarge { found: 17, .. })
        ));
        let big = Independence {
            left: 0,
            right: 1,
            given: Given::Variables((2..19).collect()),
        };
        assert!(matches!(
            compile_independence(&big, &c),
            Err(ConstraintError::TooLarge { found: 17, .. })
        ));
        let wide = InterventionalEquality {
            intervened: 0,
            parents: vec![],
            targets: None,
        };
        assert!(matches!(
            compile_interventional(&wide, &c),
            Err(ConstraintError::TooLarge { found: 18, .. })
        ));
    }
}
