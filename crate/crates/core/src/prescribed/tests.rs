use std::sync::Arc;

use super::*;
use crate::exprlang::parse;
use crate::field::ScalarField;

fn exprs(fs: &[&str]) -> DiagonalTensorField<f64> {
    let n = fs.len();
    DiagonalTensorField::from_exprs(fs.iter().map(|s| parse(s, n).unwrap()).collect()).unwrap()
}

fn grid3(half: f64, pts: usize) -> Grid<f64> {
    Grid::new(vec![0.0, 0.0, 0.0], half, pts)
}

/// The quadratic family with a = 1, b = 0, c = 1: u = 1 + |x|², f_i = 2/u⁴.
fn quadratic_family_tensor() -> DiagonalTensorField<f64> {
    let f = "2/(1 + x1^2 + x2^2 + x3^2)^4";
    exprs(&[f, f, f])
}

/// Rational example, C = 1, k = 1: u = 1/(1+x1²).
fn rational_tensor() -> DiagonalTensorField<f64> {
    exprs(&["4*x1^2 - 2", "-2*x1^2", "-2*x1^2"])
}

/// Gaussian example, C = 1, k = 1: u = e^{−x1²}.
fn gaussian_tensor() -> DiagonalTensorField<f64> {
    exprs(&[
        "2*(x1^2-1)*exp(2*x1^2)",
        "-2*x1^2*exp(2*x1^2)",
        "-2*x1^2*exp(2*x1^2)",
    ])
}

/// Cosh example, anchored at 0, C = 1: u = e^{1−cosh x1}.
fn cosh_tensor() -> DiagonalTensorField<f64> {
    exprs(&[
        "(sinh(x1)^2 - 2*cosh(x1))/2 * exp(2*cosh(x1) - 2)",
        "-(sinh(x1)^2)/2 * exp(2*cosh(x1) - 2)",
        "-(sinh(x1)^2)/2 * exp(2*cosh(x1) - 2)",
    ])
}

mod gradient_field_op {
    use super::*;

    #[test]
    fn quadratic_family_gradient() {
        let t = quadratic_family_tensor();
        let gf = gradient_field(&t, &[1.0, 0.0, 0.0]).unwrap();
        assert!((gf.g[0] - 1.0).abs() < 1e-12, "G = {:?}", gf.g);
        assert!(gf.g[1].abs() < 1e-12);
        assert!(gf.g[2].abs() < 1e-12);
        assert!(gf.consistency < 1e-15);
    }

    #[test]
    fn inconsistent_ratios_flagged() {
        let t = exprs(&["exp(x2)", "1", "2"]);
        let gf = gradient_field(&t, &[0.0, 0.0, 0.0]).unwrap();
        // for j = 2: i = 1 gives e^0/(3e^0+1) = 1/4, i = 3 gives 0
        assert!((gf.consistency - 0.25).abs() < 1e-12);
        assert!((gf.g[1] + 0.25).abs() < 1e-12);
    }

    #[test]
    fn constant_components_give_zero_gradient() {
        let t = exprs(&["3", "3", "3"]);
        let gf = gradient_field(&t, &[0.4, -0.2, 0.9]).unwrap();
        assert!(gf.g.iter().all(|&g| g == 0.0));
        assert_eq!(gf.consistency, 0.0);
    }

    #[test]
    fn overflowing_component_is_reported_not_clamped() {
        let t = exprs(&["exp(exp(x1^3+8))", "-2*x1^2", "-2*x1^2"]);
        let err = gradient_field(&t, &[0.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }), "{err:?}");
    }

    #[test]
    fn hard_degeneracy_detected() {
        // 3 f_1 + f_2 = 0 with f_{1,x2} ≠ 0 at the probe point
        let t = exprs(&["x2", "-3*x2", "x2 + 10"]);
        let err = gradient_field(&t, &[0.0, 1.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Degenerate { .. }), "{err:?}");
    }
}

mod system6_op {
    use super::*;

    #[test]
    fn flat_zero_tensor() {
        let t = exprs(&["0", "0", "0"]);
        let u = parse::<f64>("1", 3).unwrap();
        let r = system6_residual(&u, &t, &[0.3, -0.8, 0.1]).unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn rational_example_satisfies_system() {
        let t = rational_tensor();
        let u = parse::<f64>("1/(1+x1^2)", 3).unwrap();
        let r = system6_residual(&u, &t, &[0.7, 0.1, -0.3]).unwrap();
        assert!(r.max_abs() <= 1e-12, "max {:?}", r.max_abs());
    }

    #[test]
    fn perturbed_component_shows_up() {
        let t = exprs(&["4*x1^2 - 2 + 0.1", "-2*x1^2", "-2*x1^2"]);
        let u = parse::<f64>("1/(1+x1^2)", 3).unwrap();
        let p = [0.7, 0.1, -0.3];
        let r = system6_residual(&u, &t, &p).unwrap();
        let uv: f64 = 1.0 / (1.0 + 0.49);
        assert!((r.diag[0].abs() - 0.1 * uv * uv).abs() < 1e-12);
        assert!(r.diag[0].abs() > 1e-3);
    }
}

mod theorem41_op {
    use super::*;

    #[test]
    fn quadratic_family_families_vanish() {
        let t = quadratic_family_tensor();
        for p in [[0.3, -0.2, 0.8], [1.5, 1.0, -0.5], [0.0, 0.0, 0.0]] {
            let f = theorem41_residuals(&t, &p).unwrap();
            assert!(f.max() <= 1e-10, "families {f:?} at {p:?}");
        }
    }

    #[test]
    fn gaussian_example_families_vanish_on_grid() {
        let t = gaussian_tensor();
        for p in grid3(2.0, 9).points() {
            let f = theorem41_residuals(&t, &p).unwrap();
            assert!(f.max() <= 1e-10, "families {f:?} at {p:?}");
        }
    }

    #[test]
    fn perturbed_gaussian_fails_somewhere() {
        let t = exprs(&[
            "2*(x1^2-1)*exp(2*x1^2)",
            "-2*x1^2*exp(2*x1^2)*(1 + 0.1*x2^2)",
            "-2*x1^2*exp(2*x1^2)*(1 + 0.1*x2^2)",
        ]);
        let mut worst: f64 = 0.0;
        for p in grid3(2.0, 9).points() {
            let f = theorem41_residuals(&t, &p).unwrap();
            worst = worst.max(f.max());
        }
        assert!(worst >= 1e-3, "worst {worst}");
    }
}

mod reconstruction_op {
    use super::*;

    #[test]
    fn rational_example_along_axis() {
        let t = rational_tensor();
        let base = [0.0, 0.0, 0.0];
        let v = reconstruct_phi(&t, &base, &[2.0, 0.0, 0.0], 1e-10).unwrap();
        assert!((v - 0.2).abs() < 1e-8, "u(2)/u(0) = {v}");
    }

    #[test]
    fn base_query_identical() {
        let t = rational_tensor();
        let base = [0.5, -0.5, 0.25];
        assert_eq!(reconstruct_phi(&t, &base, &base, 1e-10).unwrap(), 1.0);
    }

    #[test]
    fn quadratic_family_diagonal_query() {
        let t = quadratic_family_tensor();
        let base = [0.0, 0.0, 0.0];
        let v = reconstruct_phi(&t, &base, &[1.0, 1.0, 1.0], 1e-10).unwrap();
        assert!((v - 4.0).abs() < 1e-8, "ratio {v}");
    }

    #[test]
    fn path_independence_forward_vs_reversed() {
        let t = quadratic_family_tensor();
        let base = [0.2, -0.4, 0.6];
        for q in [[1.0, 1.0, 1.0], [-0.8, 0.3, 1.4], [0.0, 2.0, -1.0]] {
            let fwd = log_factor_ratio(&t, &base, &q, 1e-10, false).unwrap();
            let rev = log_factor_ratio(&t, &base, &q, 1e-10, true).unwrap();
            assert!((fwd - rev).abs() <= 1e-8, "paths differ: {fwd} vs {rev}");
        }
    }
}

mod scale_op {
    use super::*;

    #[test]
    fn rational_example_unit_scale() {
        let t = rational_tensor();
        match determine_scale(&t, &[0.0, 0.0, 0.0], 1e-8).unwrap() {
            ScaleOutcome::Scale(c) => assert!((c - 1.0).abs() < 1e-10, "C = {c}"),
            ScaleOutcome::NonPositive { .. } => panic!("scale must be positive"),
        }
    }

    #[test]
    fn scaled_tensor_scales_the_constant() {
        // T/9 must recover C = 3
        let t = rational_tensor().scaled(1.0 / 9.0);
        match determine_scale(&t, &[0.0, 0.0, 0.0], 1e-8).unwrap() {
            ScaleOutcome::Scale(c) => assert!((c - 3.0).abs() < 1e-10, "C = {c}"),
            ScaleOutcome::NonPositive { .. } => panic!("scale must be positive"),
        }
    }

    #[test]
    fn constant_tensor_ratio_nonpositive() {
        let t = exprs(&["1", "1", "1"]);
        match determine_scale(&t, &[0.0, 0.0, 0.0], 1e-8).unwrap() {
            ScaleOutcome::NonPositive { ratio, .. } => assert_eq!(ratio, 0.0),
            ScaleOutcome::Scale(c) => panic!("unexpected scale {c}"),
        }
    }
}

mod separability_op {
    use super::*;

    #[test]
    fn exponential_separable() {
        let t = exprs(&["exp(x1)", "exp(x2)", "exp(x3)"]);
        let pts = grid3(2.0, 5).points();
        assert!(theorem43_detect(&t, &pts, 1e-8).unwrap());
    }

    #[test]
    fn constants_separable() {
        let t = exprs(&["1", "1", "1"]);
        let pts = grid3(2.0, 5).points();
        assert!(theorem43_detect(&t, &pts, 1e-8).unwrap());
    }

    #[test]
    fn rational_example_not_separable() {
        let t = rational_tensor();
        let pts = grid3(2.0, 5).points();
        assert!(!theorem43_detect(&t, &pts, 1e-8).unwrap());
    }

    #[test]
    fn zero_tensor_not_flagged() {
        let t = exprs(&["0", "0", "0"]);
        let pts = grid3(2.0, 3).points();
        assert!(!theorem43_detect(&t, &pts, 1e-8).unwrap());
    }
}

mod solve_op {
    use super::*;

    #[test]
    fn cosh_example_solves() {
        let problem = PrescribedProblem::new(cosh_tensor(), vec![0.0; 3], grid3(2.0, 9));
        match solve(&problem).unwrap() {
            Outcome::Solution(s) => {
                assert!((s.scale - 1.0).abs() < 1e-8, "C = {}", s.scale);
                for &x in &[-2.0f64, -1.0, 0.0, 0.5, 1.5, 2.0] {
                    let u = s.phi_at(&[x, 0.0, 0.0]).unwrap();
                    let expected = (1.0 - x.cosh()).exp();
                    assert!((u - expected).abs() < 1e-6, "u({x}) = {u} vs {expected}");
                }
                assert!(s.max_residual() <= 1e-8);
            }
            Outcome::NonExistence(w) => panic!("rejected: {w:?}"),
            Outcome::Indeterminate(w) => panic!("indeterminate: {w:?}"),
        }
    }

    #[test]
    fn separable_tensor_rejected() {
        let t = exprs(&["exp(x1)", "exp(x2)", "exp(x3)"]);
        let problem = PrescribedProblem::new(t, vec![0.0; 3], grid3(2.0, 5));
        match solve(&problem).unwrap() {
            Outcome::NonExistence(w) => {
                assert_eq!(w.witness, Witness::SeparableComponents);
            }
            _ => panic!("separable tensor must be rejected"),
        }
    }

    #[test]
    fn constant_tensor_rejected() {
        let t = exprs(&["1", "1", "1"]);
        let problem = PrescribedProblem::new(t, vec![0.0; 3], grid3(2.0, 5));
        match solve(&problem).unwrap() {
            Outcome::NonExistence(w) => {
                assert_eq!(w.witness, Witness::SeparableComponents);
            }
            _ => panic!("constant tensor must be rejected"),
        }
    }

    #[test]
    fn perturbed_gaussian_rejected_with_family_witness() {
        let t = exprs(&[
            "2*(x1^2-1)*exp(2*x1^2)",
            "-2*x1^2*exp(2*x1^2)*(1 + 0.1*x2^2)",
            "-2*x1^2*exp(2*x1^2)*(1 + 0.1*x2^2)",
        ]);
        let problem = PrescribedProblem::new(t, vec![0.0; 3], grid3(2.0, 9));
        match solve(&problem).unwrap() {
            Outcome::NonExistence(w) => {
                assert!(
                    matches!(w.witness, Witness::System9Family { .. }),
                    "witness {:?}",
                    w.witness
                );
                assert!(w.magnitude >= 1e-3, "magnitude {}", w.magnitude);
            }
            _ => panic!("perturbed tensor must be rejected"),
        }
    }

    #[test]
    fn solution_audit_is_sound() {
        // re-run the governing system on the returned evaluator
        let problem = PrescribedProblem::new(rational_tensor(), vec![0.0; 3], grid3(2.0, 9));
        let Outcome::Solution(s) = solve(&problem).unwrap() else {
            panic!("rational example must solve");
        };
        for p in problem.sample_points() {
            let r = system6_residual(s.phi.as_ref(), &problem.tensor, &p).unwrap();
            assert!(
                r.max_abs() <= 1e-8,
                "audit residual {} at {p:?}",
                r.max_abs()
            );
        }
    }

    #[test]
    fn scale_covariance() {
        for c in [2.0f64, 10.0] {
            let t = rational_tensor().scaled(1.0 / (c * c));
            let problem = PrescribedProblem::new(t, vec![0.0; 3], grid3(2.0, 9));
            let Outcome::Solution(s) = solve(&problem).unwrap() else {
                panic!("scaled tensor must solve");
            };
            assert!((s.scale - c).abs() < 1e-8, "C = {} for c = {c}", s.scale);
            // G depends only on ratios: unchanged
            let g_scaled = gradient_field(&problem.tensor, &[0.7, 0.0, 0.0]).unwrap();
            let g_orig = gradient_field(&rational_tensor(), &[0.7, 0.0, 0.0]).unwrap();
            for (a, b) in g_scaled.g.iter().zip(&g_orig.g) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn log_gradient_identity_via_finite_differences() {
        let problem = PrescribedProblem::new(gaussian_tensor(), vec![0.0; 3], grid3(2.0, 9));
        let Outcome::Solution(s) = solve(&problem).unwrap() else {
            panic!("gaussian example must solve");
        };
        let h = 1e-5;
        for p in [[0.5, 0.0, 0.0], [-1.0, 0.3, 0.2]] {
            let g = s.log_phi_grad(&p).unwrap();
            for j in 0..3 {
                let mut hi = p;
                hi[j] += h;
                let mut lo = p;
                lo[j] -= h;
                let fd = (s.phi_at(&hi).unwrap().ln() - s.phi_at(&lo).unwrap().ln()) / (2.0 * h);
                assert!((fd - g[j]).abs() <= 1e-8, "component {j} at {p:?}");
            }
        }
    }
}

mod verify_op {
    use super::*;

    #[test]
    fn off_axis_defect_in_phi_is_not_missed() {
        // tensor depends on x1 alone, but the candidate factor carries a
        // spurious x2 dependence; the sweep must not collapse to the x1 line
        let problem = PrescribedProblem::new(rational_tensor(), vec![0.0; 3], grid3(2.0, 5));
        let good = parse::<f64>("1/(1+x1^2)", 3).unwrap();
        let bad = parse::<f64>("(1 + 0.05*x2^2)/(1+x1^2)", 3).unwrap();
        let good_max = verify(&problem, &good)
            .unwrap()
            .iter()
            .fold(0.0f64, |a, s| a.max(s.max));
        let bad_max = verify(&problem, &bad)
            .unwrap()
            .iter()
            .fold(0.0f64, |a, s| a.max(s.max));
        assert!(good_max <= 1e-12, "clean factor flagged: {good_max:e}");
        assert!(bad_max >= 1e-3, "defect missed: {bad_max:e}");
    }
}

mod lift_op {
    use super::*;

    #[test]
    fn unit_background_is_identity() {
        let background = parse::<f64>("1", 3).unwrap();
        let grid = grid3(2.0, 9);
        let outcome = theorem46_lift(
            &background,
            &rational_tensor(),
            vec![0.0; 3],
            grid.clone(),
            Tolerances::default(),
        )
        .unwrap();
        let LiftOutcome::Solution(lift) = outcome else {
            panic!("must solve");
        };
        let plain = PrescribedProblem::new(rational_tensor(), vec![0.0; 3], grid);
        let Outcome::Solution(s) = solve(&plain).unwrap() else {
            panic!("must solve");
        };
        for &x in &[-1.5f64, 0.0, 0.4, 2.0] {
            let p = [x, 0.1, -0.1];
            let a = lift.phi_rel_at(&p).unwrap();
            let b = s.phi_at(&p).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn hyperbolic_round_trip() {
        // background F = x3, phi_rel = e^{−x3²}: the tensor the conformal
        // formulas require for ḡ = δ/(x3 e^{−x3²})² against g = δ/x3²
        let background = parse::<f64>("x3", 3).unwrap();
        let f_trans = "-(2*x3^2-1)^2/(2*x3^2)*exp(2*x3^2)";
        let f_axis = "(4*x3^4 - 8*x3^2 - 1)/(2*x3^2)*exp(2*x3^2)";
        let tensor = exprs(&[f_trans, f_trans, f_axis]);
        let grid = Grid::new(vec![0.0, 0.0, 1.25], 0.75, 9);
        let outcome = theorem46_lift(
            &background,
            &tensor,
            vec![0.0, 0.0, 1.25],
            grid,
            Tolerances::default(),
        )
        .unwrap();
        let LiftOutcome::Solution(lift) = outcome else {
            panic!("hyperbolic tensor must lift");
        };
        for &z in &[0.5f64, 0.8, 1.25, 1.7, 2.0] {
            let p = [0.3, -0.2, z];
            let rel = lift.phi_rel_at(&p).unwrap();
            let expected = (-z * z).exp();
            assert!((rel - expected).abs() < 1e-6, "phi_rel({z}) = {rel}");
        }
    }
}

mod field_trait {
    use super::*;

    #[test]
    fn reconstructed_phi_jets_match_finite_differences() {
        let problem = PrescribedProblem::new(rational_tensor(), vec![0.0; 3], grid3(2.0, 9));
        let Outcome::Solution(s) = solve(&problem).unwrap() else {
            panic!();
        };
        let p = [0.6, 0.2, -0.4];
        let jet = s.phi.jet2(&p).unwrap();
        let h = 1e-5;
        for i in 0..3 {
            let mut hi = p;
            hi[i] += h;
            let mut lo = p;
            lo[i] -= h;
            let fd = (s.phi_at(&hi).unwrap() - s.phi_at(&lo).unwrap()) / (2.0 * h);
            assert!((jet.grad(i) - fd).abs() < 1e-7, "grad {i}");
        }
    }

    #[test]
    fn tensor_structure_detection() {
        assert_eq!(
            rational_tensor().structure(),
            Structure::SingleVariable { axis: 0 }
        );
        assert_eq!(exprs(&["1", "2", "3"]).structure(), Structure::Constant);
        assert_eq!(
            exprs(&["x1*x2", "x1", "x2"]).structure(),
            Structure::General
        );
        assert!(quadratic_family_tensor().is_isotropic());
        assert!(!rational_tensor().is_isotropic());
    }

    #[test]
    fn effective_sample_set_collapses_for_single_variable() {
        let problem = PrescribedProblem::new(rational_tensor(), vec![0.0; 3], grid3(2.0, 9));
        assert_eq!(problem.sample_points().len(), 9);
        let problem =
            PrescribedProblem::new(quadratic_family_tensor(), vec![0.0; 3], grid3(2.0, 5));
        assert_eq!(problem.sample_points().len(), 125);
    }
}

#[test]
fn f32_smoke() {
    let f: crate::exprlang::ScalarExpr<f32> = parse("4*x1^2 - 2", 3).unwrap();
    let g: crate::exprlang::ScalarExpr<f32> = parse("-2*x1^2", 3).unwrap();
    let t = DiagonalTensorField::from_exprs(vec![f, g.clone(), g]).unwrap();
    let gf = gradient_field(&t, &[0.5f32, 0.0, 0.0]).unwrap();
    assert!(gf.g[0].is_finite());
    let _ = Arc::new(t);
}
