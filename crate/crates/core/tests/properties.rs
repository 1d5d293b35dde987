//! Cross-module property tests: parser round trips on generated expression
//! trees, linearity of jets, and oracle equivalence on randomized smooth
//! conformal factors.

use proptest::prelude::*;

use curvbench_core::curvature::ConformalMetric;
use curvbench_core::exprlang::parse;
use curvbench_core::jets::eval_jet2;
use curvbench_core::tensors::tensor_max_norm;

const DIM: usize = 3;

/// Random expression text over x1..x3, full grammar.
fn arb_expr_text(depth: u32) -> BoxedStrategy<String> {
    let leaf = prop_oneof![
        prop_oneof![
            Just("0.0".to_string()),
            Just("1.0".to_string()),
            Just("0.5".to_string()),
            Just("2.25".to_string()),
            Just("3.0".to_string()),
            Just("0.001".to_string()),
        ],
        (1..=DIM).prop_map(|i| format!("x{i}")),
    ];
    leaf.prop_recursive(depth, 64, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| format!("(-{e})")),
            (
                inner.clone(),
                inner.clone(),
                prop_oneof![Just("+"), Just("-"), Just("*"), Just("/"), Just("^"),]
            )
                .prop_map(|(a, b, op)| format!("({a} {op} {b})")),
            (
                prop_oneof![
                    Just("exp"),
                    Just("log"),
                    Just("sin"),
                    Just("cos"),
                    Just("sinh"),
                    Just("cosh"),
                    Just("tanh"),
                    Just("sqrt"),
                    Just("abs"),
                ],
                inner
            )
                .prop_map(|(f, e)| format!("{f}({e})")),
        ]
    })
    .boxed()
}

/// Random expression text built only from globally smooth pieces.
fn arb_smooth_text(depth: u32) -> BoxedStrategy<String> {
    let leaf = prop_oneof![
        prop_oneof![
            Just("0.5".to_string()),
            Just("1.0".to_string()),
            Just("0.25".to_string()),
        ],
        (1..=DIM).prop_map(|i| format!("x{i}")),
    ];
    leaf.prop_recursive(depth, 32, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| format!("(-{e})")),
            (
                inner.clone(),
                inner.clone(),
                prop_oneof![Just("+"), Just("-"), Just("*")]
            )
                .prop_map(|(a, b, op)| format!("({a} {op} {b})")),
            (
                prop_oneof![
                    Just("sin"),
                    Just("cos"),
                    Just("sinh"),
                    Just("cosh"),
                    Just("tanh"),
                ],
                inner
            )
                .prop_map(|(f, e)| format!("{f}({e})")),
        ]
    })
    .boxed()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn canonical_text_round_trips(text in arb_expr_text(4)) {
        let expr = parse::<f64>(&text, DIM).unwrap();
        let canonical = expr.to_canonical_text();
        let again = parse::<f64>(&canonical, DIM).unwrap();
        prop_assert_eq!(&expr, &again, "canonical form {} did not round trip", canonical);
        // canonicalization is idempotent
        prop_assert_eq!(canonical.clone(), again.to_canonical_text());
    }

    #[test]
    fn evaluation_is_deterministic(
        text in arb_expr_text(3),
        x in -1.0f64..1.0,
        y in -1.0f64..1.0,
        z in -1.0f64..1.0,
    ) {
        let expr = parse::<f64>(&text, DIM).unwrap();
        let p = [x, y, z];
        let first = expr.eval(&p);
        let second = expr.eval(&p);
        match (first, second) {
            (Ok(a), Ok(b)) => prop_assert!(a == b || (a.is_nan() && b.is_nan())),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "evaluation not reproducible: {:?}", other),
        }
    }

    #[test]
    fn jets_are_linear(
        e1 in arb_smooth_text(3),
        e2 in arb_smooth_text(3),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        x in -1.0f64..1.0,
        y in -1.0f64..1.0,
        z in -1.0f64..1.0,
    ) {
        let p = [x, y, z];
        let expr1 = parse::<f64>(&e1, DIM).unwrap();
        let expr2 = parse::<f64>(&e2, DIM).unwrap();
        let combined = parse::<f64>(&format!("{a:?}*({e1}) + {b:?}*({e2})"), DIM).unwrap();
        let j1 = eval_jet2(&expr1, &p).unwrap();
        let j2 = eval_jet2(&expr2, &p).unwrap();
        let jc = eval_jet2(&combined, &p).unwrap();
        let expected = j1.scale(a).add(&j2.scale(b));
        let scale = |u: f64, v: f64| 1.0 + a.abs() * u.abs() + b.abs() * v.abs();
        prop_assert!(
            (jc.value - expected.value).abs() <= 1e-12 * scale(j1.value, j2.value),
            "value: {} vs {}", jc.value, expected.value
        );
        for i in 0..DIM {
            prop_assert!(
                (jc.grad(i) - expected.grad(i)).abs() <= 1e-12 * scale(j1.grad(i), j2.grad(i)),
                "grad {i}: {} vs {}", jc.grad(i), expected.grad(i)
            );
            for j in i..DIM {
                prop_assert!(
                    (jc.hess(i, j) - expected.hess(i, j)).abs()
                        <= 1e-12 * scale(j1.hess(i, j), j2.hess(i, j)),
                    "hess {i}{j}: {} vs {}", jc.hess(i, j), expected.hess(i, j)
                );
            }
        }
    }

    #[test]
    fn oracle_matches_decomposition_on_random_factors(
        core in arb_smooth_text(2),
        x in -1.0f64..1.0,
        y in -1.0f64..1.0,
        z in -1.0f64..1.0,
    ) {
        // 1 + (e/4)^2 is smooth and bounded away from zero
        let factor = format!("1 + 0.0625*({core})^2");
        let metric = ConformalMetric::euclidean(parse::<f64>(&factor, DIM).unwrap());
        let p = [x, y, z];
        let oracle = metric.riemann_oracle(&p).unwrap();
        let decomp = metric.riemann_decomp(&p).unwrap();
        let diff = tensor_max_norm(&oracle.sub(&decomp).unwrap());
        let scale = 1.0 + tensor_max_norm(&oracle);
        prop_assert!(diff <= 1e-10 * scale, "{factor}: diff {diff:e}");
    }
}
