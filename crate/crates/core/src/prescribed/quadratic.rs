//! Isotropic tensors R = f (g ⊙ g): the only solvable ones come from a
//! quadratic conformal factor
//!
//! ```text
//! u(x) = Σ_i (a x_i² + b_i x_i) + c,    f = −λ / (2 u⁴),
//! λ = Σ_i b_i² − 4 a c,
//! ```
//!
//! unique up to homothety. The singular set of ḡ = δ/u² is the zero locus
//! of u: empty, a point, a hyperplane or a sphere depending on (λ, a).

use crate::curvature::invert;
use crate::error::{Error, Result};
use crate::exprlang::{parse, ScalarExpr};
use crate::grid::Grid;
use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFamily<T> {
    pub a: T,
    pub b: Vec<T>,
    pub c: T,
}

impl<T: Real> QuadraticFamily<T> {
    pub fn lambda(&self) -> T {
        let b2 = self.b.iter().fold(T::zero(), |acc, &b| acc + b * b);
        b2 - T::of(4.0) * self.a * self.c
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    pub fn factor_at(&self, p: &[T]) -> T {
        let mut u = self.c;
        for (i, &x) in p.iter().enumerate() {
            u = u + self.a * x * x + self.b[i] * x;
        }
        u
    }

    /// u as an expression, parser-shaped so it round-trips.
    pub fn factor_expr(&self) -> Result<ScalarExpr<T>> {
        let n = self.n();
        let mut text = format!("{:?}", self.c.to_f64_lossy());
        for i in 0..n {
            text.push_str(&format!(
                " + {:?}*x{}^2 + {:?}*x{}",
                self.a.to_f64_lossy(),
                i + 1,
                self.b[i].to_f64_lossy(),
                i + 1
            ));
        }
        parse(&text, n)
    }

    /// f = −λ/(2 u⁴) as an expression.
    pub fn component_expr(&self) -> Result<ScalarExpr<T>> {
        let u = self.factor_expr()?;
        let text = format!(
            "-({:?}) / (2*({})^4)",
            self.lambda().to_f64_lossy(),
            u.to_canonical_text()
        );
        parse(&text, self.n())
    }
}

/// Build (f, u, λ) from family parameters.
pub fn theorem42_construct<T: Real>(
    a: T,
    b: &[T],
    c: T,
    n: usize,
) -> Result<(ScalarExpr<T>, ScalarExpr<T>, T)> {
    assert_eq!(b.len(), n);
    if a == T::zero() && c == T::zero() && b.iter().all(|&x| x == T::zero()) {
        return Err(Error::DegenerateFamily);
    }
    let fam = QuadraticFamily {
        a,
        b: b.to_vec(),
        c,
    };
    Ok((fam.component_expr()?, fam.factor_expr()?, fam.lambda()))
}

/// Zero locus of the quadratic factor.
#[derive(Debug, Clone, PartialEq)]
pub enum SingularSet<T> {
    Empty,
    Point(Vec<T>),
    Hyperplane { normal: Vec<T>, offset: T },
    Sphere { center: Vec<T>, radius: T },
}

pub fn theorem42_classify<T: Real>(fam: &QuadraticFamily<T>) -> SingularSet<T> {
    let lambda = fam.lambda();
    let n = fam.n();
    if lambda < T::zero() {
        return SingularSet::Empty;
    }
    if lambda == T::zero() {
        if fam.a == T::zero() {
            return SingularSet::Empty;
        }
        let center = (0..n).map(|i| -fam.b[i] / (T::of(2.0) * fam.a)).collect();
        return SingularSet::Point(center);
    }
    if fam.a == T::zero() {
        return SingularSet::Hyperplane {
            normal: fam.b.clone(),
            offset: fam.c,
        };
    }
    let center: Vec<T> = (0..n).map(|i| -fam.b[i] / (T::of(2.0) * fam.a)).collect();
    let radius = lambda.sqrt() / (T::of(2.0) * fam.a.abs());
    SingularSet::Sphere { center, radius }
}

pub enum DetectOutcome<T> {
    Family(QuadraticFamily<T>),
    Mismatch { max_deviation: f64, at: Vec<f64> },
}

/// Decide whether f is of the quadratic family, and recover the parameters.
///
/// The ratio field r(x) = (f(x⁰)/f(x))^{1/4} is interpolated by a quadratic
/// with a single leading coefficient at the stencil {x⁰, x⁰ ± δ e_i}
/// (least squares over the n+2 parameters, δ starting at 1 and halved until
/// the stencil sits inside the grid box), the overall scale is fixed by
/// λ-consistency, and the candidate is verified against f on the full grid.
pub fn theorem42_detect<T: Real>(
    f: &ScalarExpr<T>,
    grid: &Grid<T>,
    tol: T,
) -> Result<DetectOutcome<T>> {
    let n = grid.n();
    let x0 = grid.center().to_vec();
    let f0 = f.eval(&x0)?;
    if f0 == T::zero() {
        return Ok(DetectOutcome::Mismatch {
            max_deviation: f64::INFINITY,
            at: x0.iter().map(|x| x.to_f64_lossy()).collect(),
        });
    }

    // stencil offset: unit, halved until inside the domain and evaluable
    let mut delta = T::one();
    let mut stencil: Option<Vec<Vec<T>>> = None;
    for _ in 0..60 {
        let mut pts = vec![x0.clone()];
        for i in 0..n {
            for sign in [T::one(), -T::one()] {
                let mut p = x0.clone();
                p[i] = p[i] + sign * delta;
                pts.push(p);
            }
        }
        let ok = pts.iter().all(|p| grid.contains(p) && f.eval(p).is_ok());
        if ok {
            stencil = Some(pts);
            break;
        }
        delta = delta * T::of(0.5);
    }
    let stencil = stencil.ok_or(Error::DegenerateFamily)?;

    // ratio values at the stencil
    let mut ratios = Vec::with_capacity(stencil.len());
    for p in &stencil {
        let fv = f.eval(p)?;
        let q = f0 / fv;
        if q < T::zero() {
            return Err(Error::NegativeRadicand {
                point: p.iter().map(|x| x.to_f64_lossy()).collect(),
            });
        }
        ratios.push(q.powf(T::of(0.25)));
    }

    // least squares for (a, b_1..b_n, c) against r via normal equations
    let params = n + 2;
    let rows: Vec<Vec<T>> = stencil
        .iter()
        .map(|p| {
            let mut row = Vec::with_capacity(params);
            row.push(p.iter().fold(T::zero(), |acc, &x| acc + x * x));
            for &x in p {
                row.push(x);
            }
            row.push(T::one());
            row
        })
        .collect();
    let mut ata = vec![vec![T::zero(); params]; params];
    let mut atb = vec![T::zero(); params];
    for (row, &r) in rows.iter().zip(&ratios) {
        for i in 0..params {
            atb[i] = atb[i] + row[i] * r;
            for j in 0..params {
                ata[i][j] = ata[i][j] + row[i] * row[j];
            }
        }
    }
    let inv = invert(&ata).ok_or(Error::DegenerateFamily)?;
    let coeffs: Vec<T> = (0..params)
        .map(|i| (0..params).fold(T::zero(), |acc, j| acc + inv[i][j] * atb[j]))
        .collect();
    let q_fam = QuadraticFamily {
        a: coeffs[0],
        b: coeffs[1..=n].to_vec(),
        c: coeffs[n + 1],
    };

    // scale from λ-consistency: s² = −λ_Q / (2 f(x⁰) Q(x⁰)⁴)
    let lambda_q = q_fam.lambda();
    let q0 = q_fam.factor_at(&x0);
    let s2 = -lambda_q / (T::of(2.0) * f0 * q0 * q0 * q0 * q0);
    if !(s2 > T::zero()) || q0 <= T::zero() {
        // constants (and anything else with λ_Q ≈ 0) land here: the family
        // would force f ≡ 0, contradicting a nonvanishing f
        return Ok(DetectOutcome::Mismatch {
            max_deviation: f64::INFINITY,
            at: x0.iter().map(|x| x.to_f64_lossy()).collect(),
        });
    }
    let s = s2.sqrt();
    let family = QuadraticFamily {
        a: s * q_fam.a,
        b: q_fam.b.iter().map(|&b| s * b).collect(),
        c: s * q_fam.c,
    };

    // verify on the full grid
    let lambda = family.lambda();
    let mut max_dev = T::zero();
    let mut at = x0.clone();
    for p in grid.points() {
        let fv = f.eval(&p)?;
        if f0 * fv < T::zero() {
            return Err(Error::NegativeRadicand {
                point: p.iter().map(|x| x.to_f64_lossy()).collect(),
            });
        }
        let u = family.factor_at(&p);
        let model = -lambda / (T::of(2.0) * u * u * u * u);
        let dev = (fv - model).abs() / (T::one() + fv.abs());
        if dev > max_dev {
            max_dev = dev;
            at = p;
        }
    }
    if max_dev > tol {
        return Ok(DetectOutcome::Mismatch {
            max_deviation: max_dev.to_f64_lossy(),
            at: at.iter().map(|x| x.to_f64_lossy()).collect(),
        });
    }
    Ok(DetectOutcome::Family(family))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid3() -> Grid<f64> {
        Grid::new(vec![0.0, 0.0, 0.0], 2.0, 9)
    }

    #[test]
    fn construct_sphere_like() {
        let (f, u, lambda) = theorem42_construct::<f64>(1.0, &[0.0; 3], 1.0, 3).unwrap();
        assert_eq!(lambda, -4.0);
        let p = [0.5, -0.5, 1.0];
        let uv = 1.0 + 0.25 + 0.25 + 1.0;
        assert!((u.eval(&p).unwrap() - uv).abs() < 1e-14);
        assert!((f.eval(&p).unwrap() - 2.0 / uv.powi(4)).abs() < 1e-14);
    }

    #[test]
    fn construct_linear_and_sphere() {
        let (f, _, lambda) = theorem42_construct::<f64>(0.0, &[1.0, 0.0, 0.0], 1.0, 3).unwrap();
        assert_eq!(lambda, 1.0);
        let p = [0.5, 0.3, -0.1];
        assert!((f.eval(&p).unwrap() - (-1.0 / (2.0 * 1.5f64.powi(4)))).abs() < 1e-14);

        let (_, _, lambda) = theorem42_construct::<f64>(1.0, &[0.0; 3], -1.0, 3).unwrap();
        assert_eq!(lambda, 4.0);
    }

    #[test]
    fn construct_zero_family_rejected() {
        assert!(matches!(
            theorem42_construct::<f64>(0.0, &[0.0; 3], 0.0, 3),
            Err(Error::DegenerateFamily)
        ));
    }

    #[test]
    fn classify_all_cases() {
        let fam = |a: f64, b: [f64; 3], c: f64| QuadraticFamily {
            a,
            b: b.to_vec(),
            c,
        };
        assert_eq!(
            theorem42_classify(&fam(1.0, [0.0; 3], 1.0)),
            SingularSet::Empty
        );
        assert_eq!(
            theorem42_classify(&fam(0.0, [0.0; 3], 1.0)),
            SingularSet::Empty
        );
        assert_eq!(
            theorem42_classify(&fam(1.0, [2.0, 0.0, 0.0], 1.0)),
            SingularSet::Point(vec![-1.0, 0.0, 0.0])
        );
        assert_eq!(
            theorem42_classify(&fam(0.0, [1.0, 0.0, 0.0], 1.0)),
            SingularSet::Hyperplane {
                normal: vec![1.0, 0.0, 0.0],
                offset: 1.0
            }
        );
        match theorem42_classify(&fam(1.0, [0.0; 3], -1.0)) {
            SingularSet::Sphere { center, radius } => {
                assert_eq!(center, vec![0.0, 0.0, 0.0]);
                assert!((radius - 1.0).abs() < 1e-12);
            }
            other => panic!("expected sphere, got {other:?}"),
        }
    }

    #[test]
    fn detect_round_trip() {
        let (f, _, _) = theorem42_construct::<f64>(1.0, &[0.0; 3], 1.0, 3).unwrap();
        match theorem42_detect(&f, &grid3(), 1e-8).unwrap() {
            DetectOutcome::Family(fam) => {
                assert!((fam.a - 1.0).abs() < 1e-8);
                assert!(fam.b.iter().all(|b| b.abs() < 1e-8));
                assert!((fam.c - 1.0).abs() < 1e-8);
                assert!((fam.lambda() + 4.0).abs() < 1e-8);
            }
            DetectOutcome::Mismatch { max_deviation, at } => {
                panic!("unexpected mismatch {max_deviation} at {at:?}")
            }
        }
    }

    #[test]
    fn detect_round_trip_off_center() {
        let (f, _, _) = theorem42_construct::<f64>(0.5, &[1.0, -0.5, 0.25], 2.0, 3).unwrap();
        match theorem42_detect(&f, &Grid::new(vec![0.1, 0.2, -0.1], 1.5, 5), 1e-7).unwrap() {
            DetectOutcome::Family(fam) => {
                assert!((fam.a - 0.5).abs() < 1e-7, "a = {}", fam.a);
                assert!((fam.b[0] - 1.0).abs() < 1e-7);
                assert!((fam.b[1] + 0.5).abs() < 1e-7);
                assert!((fam.c - 2.0).abs() < 1e-7);
            }
            DetectOutcome::Mismatch { max_deviation, at } => {
                panic!("unexpected mismatch {max_deviation} at {at:?}")
            }
        }
    }

    #[test]
    fn detect_constant_mismatches() {
        let f = parse::<f64>("1", 3).unwrap();
        assert!(matches!(
            theorem42_detect(&f, &grid3(), 1e-8).unwrap(),
            DetectOutcome::Mismatch { .. }
        ));
    }

    #[test]
    fn detect_perturbed_mismatches() {
        let f = parse::<f64>("2/(1 + x1^2 + x2^2 + x3^2)^4 + 0.01", 3).unwrap();
        match theorem42_detect(&f, &grid3(), 1e-8).unwrap() {
            DetectOutcome::Mismatch { max_deviation, .. } => {
                assert!(max_deviation > 1e-4, "deviation {max_deviation}")
            }
            DetectOutcome::Family(f) => panic!("unexpected family {f:?}"),
        }
    }

    #[test]
    fn detect_sign_change_is_negative_radicand() {
        let f = parse::<f64>("x1 + 0.1", 3).unwrap();
        assert!(matches!(
            theorem42_detect(&f, &grid3(), 1e-8),
            Err(Error::NegativeRadicand { .. })
        ));
    }
}
