use proptest::prelude::*;
use rand::Rng;
use spn_constraints::circuit::{
    full_joint_circuit, mixture_circuit, parse_model, Assignment, Circuit, Variable,
};
use spn_constraints::dataio::{load_csv, log_likelihood};
use spn_constraints::oracle::seeded_rng;

fn mixture(seed: u64, n: usize) -> Circuit {
    let mut rng = seeded_rng(seed);
    let k = rng.random_range(1..=3);
    mixture_circuit(Variable::numbered(n), k, &mut rng).unwrap()
}

fn partial(code: &[u8]) -> Assignment {
    code.iter()
        .enumerate()
        .filter(|(_, x)| **x > 0)
        .map(|(v, x)| (v, *x == 2))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn marginalizing_a_variable_sums_its_states(seed in 0u64..10_000, n in 2usize..6, code in proptest::collection::vec(0u8..3, 6)) {
        let c = mixture(seed, n);
        let mut q = partial(&code[..n]);
        let v = (seed as usize) % n;
        let mut without = Assignment::new();
        for (var, x) in q.iter() {
            if var != v {
                without.set(var, x);
            }
        }
        q = without.clone();
        let split = c.evaluate(&q.clone().with(v, true)).unwrap() + c.evaluate(&q.clone().with(v, false)).unwrap();
        let whole = c.evaluate(&without).unwrap();
        prop_assert!((split - whole).abs() <= 1e-12 * whole.abs().max(1.0));
    }

    #[test]
    fn value_is_multilinear_in_each_sum_block(seed in 0u64..10_000, n in 1usize..5, t in -2.0f64..2.0) {
        // along a direction inside one sum node the value is affine
        let c = mixture(seed, n);
        let blocks = c.sum_blocks();
        let b = blocks[(seed as usize) % blocks.len()].clone();
        let q = Assignment::new().with(0, true);
        let mut d = vec![0.0; c.num_weights()];
        for (i, k) in b.enumerate() {
            d[k] = if i % 2 == 0 { 0.3 } else { -0.7 };
        }
        let at = |s: f64| {
            let w: Vec<f64> = c.weights().iter().zip(&d).map(|(x, y)| x + s * y).collect();
            c.evaluate_with_weights(&w, &q).unwrap()
        };
        let (f0, f1, ft) = (at(0.0), at(1.0), at(t));
        prop_assert!((ft - (f0 + t * (f1 - f0))).abs() < 1e-10);
    }

    #[test]
    fn normalized_queries_ignore_weight_scale(seed in 0u64..10_000, n in 1usize..5, scale in 0.01f64..100.0) {
        let c = mixture(seed, n);
        let root = c.root_edges();
        let mut w = c.weights().to_vec();
        for k in root {
            w[k] *= scale;
        }
        let scaled = c.with_weights(&w).unwrap();
        let q = Assignment::new().with(n - 1, false);
        prop_assert!((c.marginal(&q).unwrap() - scaled.marginal(&q).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip_is_exact(seed in 0u64..10_000, n in 1usize..6) {
        let c = mixture(seed, n);
        let back = parse_model(&c.to_text()).unwrap();
        prop_assert_eq!(back.weights(), c.weights());
        prop_assert_eq!(back.to_text(), c.to_text());
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let c = mixture(3, 4);
    let q = Assignment::new().with(1, true).with(2, false);
    let g = c.gradient(&q).unwrap();
    for k in 0..c.num_weights() {
        let mut w = c.weights().to_vec();
        w[k] += 1e-6;
        let up = c.evaluate_with_weights(&w, &q).unwrap();
        w[k] -= 2e-6;
        let down = c.evaluate_with_weights(&w, &q).unwrap();
        assert!((g[k] - (up - down) / 2e-6).abs() < 1e-7);
    }
}

#[test]
fn empirical_weights_maximize_likelihood() {
    let data = load_csv("X1,X2\n1,1\n1,1\n0,0\n1,0\n1,1\n0,1\n0,0\n1,1\n").unwrap();
    // state index = X1 + 2·X2
    let empirical = [2.0 / 8.0, 1.0 / 8.0, 1.0 / 8.0, 4.0 / 8.0];
    let best = log_likelihood(
        &full_joint_circuit(Variable::numbered(2), &empirical).unwrap(),
        &data,
    )
    .unwrap();
    let mut rng = seeded_rng(12);
    for _ in 0..100 {
        let w: Vec<f64> = empirical
            .iter()
            .map(|p| (p + rng.random_range(-0.05..0.05f64)).max(1e-3))
            .collect();
        let c = full_joint_circuit(Variable::numbered(2), &w).unwrap();
        assert!(log_likelihood(&c, &data).unwrap() <= best + 1e-15);
    }
}

#[test]
fn log_likelihood_ignores_row_order() {
    let c = mixture(8, 3);
    let a = load_csv("X1,X2,X3\n1,0,1\n0,0,0\n1,1,1\n").unwrap();
    let b = load_csv("X1,X2,X3\n1,1,1\n1,0,1\n0,0,0\n").unwrap();
    assert_eq!(
        log_likelihood(&c, &a).unwrap(),
        log_likelihood(&c, &b).unwrap()
    );
}
