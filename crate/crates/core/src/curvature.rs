//! Curvature of conformally flat metrics, computed two independent ways.
//!
//! A [`ConformalMetric`] is ḡ = δ/u² with u = phi_rel · F, where F is the
//! background factor (1 for a euclidean background, so g = δ/F²) and phi_rel
//! the relative factor. The closed-form route evaluates
//!
//! ```text
//! Ric_ḡ = (1/u²){ (n−2) u Hess u + (u Δu − (n−1)|∇u|²) δ }
//! K̄    = (n−1)(2 u Δu − n |∇u|²)
//! A_ḡ  = Hess u / u − (|∇u|²/(2u²)) δ
//! R̄    = A_ḡ ⊙ ḡ
//! ```
//!
//! with all derivatives euclidean, taken from jets of u. The oracle route
//! never touches those formulas: it assembles ḡ and its coordinate
//! derivatives in closed form, inverts the metric, forms Christoffel symbols
//! and their derivatives, and lowers the curvature operator to (0,4). The
//! sign of the lowering is calibrated once, by requiring the quadratic
//! family u = 1 + |x|² to have sectional curvature +4; a test pins this.

use crate::error::{Error, Result};
use crate::exprlang::{parse, ScalarExpr};
use crate::jets::{eval_jet2, Jet2};
use crate::real::Real;
use crate::tensors::{kulkarni_nomizu, tensor_max_norm, CurvTensor, SymBilinear};

#[derive(Debug, Clone)]
pub struct ConformalMetric<T> {
    n: usize,
    background: ScalarExpr<T>,
    phi_rel: ScalarExpr<T>,
}

impl<T: Real> ConformalMetric<T> {
    pub fn new(background: ScalarExpr<T>, phi_rel: ScalarExpr<T>) -> Result<Self> {
        if background.dim() != phi_rel.dim() {
            return Err(Error::DimensionMismatch {
                expected: background.dim(),
                got: phi_rel.dim(),
            });
        }
        let n = background.dim();
        assert!(n >= 3, "conformal curvature formulas need n >= 3");
        Ok(ConformalMetric {
            n,
            background,
            phi_rel,
        })
    }

    /// Metric conformal to the euclidean one: ḡ = δ/phi².
    pub fn euclidean(phi_rel: ScalarExpr<T>) -> Self {
        let n = phi_rel.dim();
        let one = parse("1", n).expect("constant parses");
        Self::new(one, phi_rel).expect("dims match")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn background(&self) -> &ScalarExpr<T> {
        &self.background
    }

    pub fn phi_rel(&self) -> &ScalarExpr<T> {
        &self.phi_rel
    }

    /// Jet of the total factor u = phi_rel * F at p.
    pub fn total_factor_jet(&self, p: &[T]) -> Result<Jet2<T>> {
        let f = eval_jet2(&self.background, p)?;
        let phi = eval_jet2(&self.phi_rel, p)?;
        let u = f.mul(&phi);
        if u.value == T::zero() {
            return Err(Error::SingularMetric {
                point: p.iter().map(|x| x.to_f64_lossy()).collect(),
            });
        }
        if !u.is_finite() {
            return Err(Error::NonFinite {
                what: "jet of the total conformal factor".to_string(),
                point: p.iter().map(|x| x.to_f64_lossy()).collect(),
            });
        }
        Ok(u)
    }

    /// ḡ at p, as a symmetric bilinear form.
    pub fn metric_at(&self, p: &[T]) -> Result<SymBilinear<T>> {
        let u = self.total_factor_jet(p)?;
        let s = T::one() / (u.value * u.value);
        Ok(SymBilinear::scaled_identity(self.n, s))
    }

    pub fn ricci(&self, p: &[T]) -> Result<SymBilinear<T>> {
        let u = self.total_factor_jet(p)?;
        let n = self.n;
        let nm2 = T::of((n - 2) as f64);
        let nm1 = T::of((n - 1) as f64);
        let inv_u2 = T::one() / (u.value * u.value);
        let lap = u.laplacian();
        let grad2 = u.grad_norm_sq();
        let diag_term = u.value * lap - nm1 * grad2;
        let mut ric = SymBilinear::zero(n);
        for i in 0..n {
            for j in i..n {
                let mut v = nm2 * u.value * u.hess(i, j);
                if i == j {
                    v = v + diag_term;
                }
                ric.set(i, j, inv_u2 * v);
            }
        }
        Ok(ric)
    }

    pub fn scalar_curv(&self, p: &[T]) -> Result<T> {
        let u = self.total_factor_jet(p)?;
        let n = T::of(self.n as f64);
        let nm1 = T::of((self.n - 1) as f64);
        Ok(nm1 * (T::of(2.0) * u.value * u.laplacian() - n * u.grad_norm_sq()))
    }

    /// Schouten tensor by the conformal closed form,
    /// A = Hess u / u − (|∇u|²/(2u²)) δ.
    pub fn schouten(&self, p: &[T]) -> Result<SymBilinear<T>> {
        let u = self.total_factor_jet(p)?;
        let n = self.n;
        let inv_u = T::one() / u.value;
        let diag = u.grad_norm_sq() / (T::of(2.0) * u.value * u.value);
        let mut a = SymBilinear::zero(n);
        for i in 0..n {
            for j in i..n {
                let mut v = u.hess(i, j) * inv_u;
                if i == j {
                    v = v - diag;
                }
                a.set(i, j, v);
            }
        }
        Ok(a)
    }

    /// Schouten tensor by its definition, A = (Ric − K̄/(2(n−1)) ḡ)/(n−2).
    /// Kept as a second route so the closed form can be cross-checked.
    pub fn schouten_from_ricci(&self, p: &[T]) -> Result<SymBilinear<T>> {
        let ric = self.ricci(p)?;
        let k = self.scalar_curv(p)?;
        let g = self.metric_at(p)?;
        let n = self.n;
        let nm1 = T::of((n - 1) as f64);
        let nm2 = T::of((n - 2) as f64);
        Ok(ric
            .sub(&g.scale(k / (T::of(2.0) * nm1)))
            .scale(T::one() / nm2))
    }

    /// R̄ = A_ḡ ⊙ ḡ.
    pub fn riemann_decomp(&self, p: &[T]) -> Result<CurvTensor<T>> {
        let a = self.schouten(p)?;
        let g = self.metric_at(p)?;
        kulkarni_nomizu(&a, &g)
    }

    /// Riemann tensor by the Christoffel route, independent of the conformal
    /// formulas: ḡ, ∂ḡ, ∂²ḡ are assembled in closed form from jets of u,
    /// the rest is the standard machinery for an arbitrary metric.
    pub fn riemann_oracle(&self, p: &[T]) -> Result<CurvTensor<T>> {
        let u = self.total_factor_jet(p)?;
        let n = self.n;
        let uv = u.value;
        let inv3 = T::one() / (uv * uv * uv);
        let inv4 = inv3 / uv;
        let two = T::of(2.0);
        let six = T::of(6.0);
        let half = T::of(0.5);

        // conformal factor s = u^{-2} and its derivatives
        let s = T::one() / (uv * uv);
        let s1: Vec<T> = (0..n).map(|k| -two * inv3 * u.grad(k)).collect();
        let s2 =
            |k: usize, l: usize| six * inv4 * u.grad(k) * u.grad(l) - two * inv3 * u.hess(k, l);

        // metric arrays: g[i][j], dg[k][i][j] = ∂_k g_ij, ddg[k][l][i][j]
        let g: Vec<Vec<T>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { s } else { T::zero() }).collect())
            .collect();
        let dg: Vec<Vec<Vec<T>>> = (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| if i == j { s1[k] } else { T::zero() })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let ddg = |k: usize, l: usize, i: usize, j: usize| {
            if i == j {
                s2(k, l)
            } else {
                T::zero()
            }
        };

        let ginv = invert(&g).ok_or_else(|| Error::SingularMetric {
            point: p.iter().map(|x| x.to_f64_lossy()).collect(),
        })?;
        // ∂_k g^{ab} = − g^{am} (∂_k g_{ms}) g^{sb}
        let dginv: Vec<Vec<Vec<T>>> = (0..n)
            .map(|k| {
                (0..n)
                    .map(|a| {
                        (0..n)
                            .map(|b| {
                                let mut acc = T::zero();
                                for m in 0..n {
                                    for sdx in 0..n {
                                        acc = acc + ginv[a][m] * dg[k][m][sdx] * ginv[sdx][b];
                                    }
                                }
                                -acc
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();

        // Γ^m_{ij} and ∂_l Γ^m_{ij}
        let mut gamma = vec![vec![vec![T::zero(); n]; n]; n];
        for m in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = T::zero();
                    for sdx in 0..n {
                        acc = acc + ginv[m][sdx] * (dg[i][j][sdx] + dg[j][i][sdx] - dg[sdx][i][j]);
                    }
                    gamma[m][i][j] = half * acc;
                }
            }
        }
        let mut dgamma = vec![vec![vec![vec![T::zero(); n]; n]; n]; n];
        for l in 0..n {
            for m in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut acc = T::zero();
                        for sdx in 0..n {
                            acc = acc
                                + dginv[l][m][sdx]
                                    * (dg[i][j][sdx] + dg[j][i][sdx] - dg[sdx][i][j])
                                + ginv[m][sdx]
                                    * (ddg(l, i, j, sdx) + ddg(l, j, i, sdx) - ddg(l, sdx, i, j));
                        }
                        dgamma[l][m][i][j] = half * acc;
                    }
                }
            }
        }

        // R_{ijkl} = g_{lm} [ ∂_j Γ^m_{ik} − ∂_i Γ^m_{jk}
        //                     + Σ_p (Γ^p_{ik} Γ^m_{jp} − Γ^p_{jk} Γ^m_{ip}) ]
        // The overall sign is the calibrated one (sphere family positive).
        Ok(CurvTensor::from_fn(n, |i, j, k, l| {
            let mut op = vec![T::zero(); n];
            for (m, slot) in op.iter_mut().enumerate() {
                let mut acc = dgamma[j][m][i][k] - dgamma[i][m][j][k];
                for q in 0..n {
                    acc = acc + gamma[q][i][k] * gamma[m][j][q] - gamma[q][j][k] * gamma[m][i][q];
                }
                *slot = acc;
            }
            let mut lowered = T::zero();
            for (m, v) in op.iter().enumerate() {
                lowered = lowered + g[l][m] * *v;
            }
            lowered
        }))
    }

    /// Sectional curvature of the coordinate plane (∂i, ∂j), computed from
    /// the oracle tensor.
    pub fn sectional(&self, p: &[T], i: usize, j: usize) -> Result<T> {
        assert!(i != j, "sectional curvature needs two distinct directions");
        let r = self.riemann_oracle(p)?;
        let g = self.metric_at(p)?;
        let gram = g.get(i, i) * g.get(j, j) - g.get(i, j) * g.get(i, j);
        Ok(r.get(i, j, i, j) / gram)
    }

    /// Max-norm distance between the oracle and the Schouten decomposition;
    /// the numerical realization of the vanishing Weyl tensor.
    pub fn weyl_residual(&self, p: &[T]) -> Result<T> {
        let oracle = self.riemann_oracle(p)?;
        let decomp = self.riemann_decomp(p)?;
        Ok(tensor_max_norm(&oracle.sub(&decomp)?))
    }
}

pub(crate) fn invert<T: Real>(m: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let n = m.len();
    let mut a: Vec<Vec<T>> = m.to_vec();
    let mut inv: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { T::one() } else { T::zero() })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r1, &r2| {
            a[r1][col]
                .abs()
                .partial_cmp(&a[r2][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot][col] == T::zero() {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] = a[col][j] / d;
            inv[col][j] = inv[col][j] / d;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col];
            if factor == T::zero() {
                continue;
            }
            for j in 0..n {
                a[row][j] = a[row][j] - factor * a[col][j];
                inv[row][j] = inv[row][j] - factor * inv[col][j];
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metric(phi: &str, n: usize) -> ConformalMetric<f64> {
        ConformalMetric::euclidean(parse(phi, n).unwrap())
    }

    fn quadratic_metric() -> ConformalMetric<f64> {
        metric("1 + x1^2 + x2^2 + x3^2", 3)
    }

    #[test]
    fn flat_metric_everything_vanishes() {
        let m = metric("1", 3);
        let p = [0.4, -0.2, 1.3];
        assert_eq!(m.ricci(&p).unwrap().max_abs(), 0.0);
        assert_eq!(m.scalar_curv(&p).unwrap(), 0.0);
        assert_eq!(m.schouten(&p).unwrap().max_abs(), 0.0);
        assert_eq!(tensor_max_norm(&m.riemann_decomp(&p).unwrap()), 0.0);
        assert_eq!(tensor_max_norm(&m.riemann_oracle(&p).unwrap()), 0.0);
        assert_eq!(m.weyl_residual(&p).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_factor_at_origin() {
        let m = quadratic_metric();
        let p = [0.0; 3];
        let ric = m.ricci(&p).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 8.0 } else { 0.0 };
                assert!((ric.get(i, j) - expected).abs() < 1e-14);
            }
        }
        assert!((m.scalar_curv(&p).unwrap() - 24.0).abs() < 1e-13);
        let a = m.schouten(&p).unwrap();
        for i in 0..3 {
            assert!((a.get(i, i) - 2.0).abs() < 1e-14);
        }
        let r = m.riemann_decomp(&p).unwrap();
        assert!((r.get(0, 1, 0, 1) - 4.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_family_sectional_is_plus_four() {
        // Calibration pin: this family must come out at +4, which fixes the
        // sign convention of the oracle's lowering once and for all.
        let m = quadratic_metric();
        let points = [
            [0.0, 0.0, 0.0],
            [0.3, -0.7, 0.2],
            [1.0, 1.0, 1.0],
            [-1.4, 0.3, 0.9],
        ];
        for p in &points {
            for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
                let k = m.sectional(p, i, j).unwrap();
                assert!((k - 4.0).abs() < 1e-9, "K({i},{j}) at {p:?} was {k}");
            }
        }
    }

    #[test]
    fn hyperbolic_background() {
        // F = x3, phi_rel = 1: the half-space model, sectional curvature -1.
        let m =
            ConformalMetric::new(parse::<f64>("x3", 3).unwrap(), parse("1", 3).unwrap()).unwrap();
        let p = [0.0, 0.0, 1.0];
        let ric = m.ricci(&p).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { -2.0 } else { 0.0 };
                assert!((ric.get(i, j) - expected).abs() < 1e-13, "ric {i}{j}");
            }
        }
        assert!((m.scalar_curv(&p).unwrap() + 6.0).abs() < 1e-13);
        for p in [[0.5, -0.3, 0.7], [2.0, 1.0, 2.5], [0.0, 0.0, 0.2]] {
            for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
                let k = m.sectional(&p, i, j).unwrap();
                assert!((k + 1.0).abs() < 1e-9, "K({i},{j}) at {p:?} was {k}");
            }
        }
    }

    #[test]
    fn oracle_matches_decomposition() {
        let cases = [
            ("1 + x1^2 + x2^2 + x3^2", 3),
            ("1/(1+x1^2)", 3),
            ("exp(-x2^2)", 3),
            ("exp(-cosh(x1))", 3),
            ("1 + x1^2 + 0.5*x2^4 + x3^2 + x4^2", 4),
        ];
        let p3 = [0.37, -0.81, 0.44];
        let p4 = [0.37, -0.81, 0.44, 0.12];
        for (phi, n) in cases {
            let m = metric(phi, n);
            let p: &[f64] = if n == 3 { &p3 } else { &p4 };
            let oracle = m.riemann_oracle(p).unwrap();
            let decomp = m.riemann_decomp(p).unwrap();
            let diff = tensor_max_norm(&oracle.sub(&decomp).unwrap());
            let scale = 1.0 + tensor_max_norm(&oracle);
            assert!(diff <= 1e-10 * scale, "{phi}: diff {diff}, scale {scale}");
        }
    }

    #[test]
    fn schouten_routes_agree() {
        // both routes across a spread of factors and points
        let factors = [
            "exp(-x1^2) + 0.5",
            "1 + x1^2 + x2^2 + x3^2",
            "1/(1+x2^2)",
            "exp(-cosh(x1))",
            "2 + sin(x1)*cos(x2) + 0.25*x3^4",
        ];
        let mut checked = 0;
        for phi in factors {
            let m = metric(phi, 3);
            for i in 0..20 {
                let t = -0.9 + 0.09 * i as f64;
                let p = [t, 0.3 * t - 0.1, t * t - 0.5];
                let a = m.schouten(&p).unwrap();
                let b = m.schouten_from_ricci(&p).unwrap();
                assert!(
                    a.sub(&b).max_abs() <= 1e-10 * (1.0 + a.max_abs()),
                    "{phi} at {p:?}"
                );
                checked += 1;
            }
        }
        assert_eq!(checked, 100);
    }

    #[test]
    fn oracle_tensor_passes_symmetry_validation() {
        // the oracle fills every slot independently, so this is a real check
        let m = metric("1 + 0.5*x1^2 + exp(-x2^2) + x3^2", 3);
        let r = m.riemann_oracle(&[0.41, -0.23, 0.77]).unwrap();
        assert!(crate::tensors::validate_symmetries(&r, 1e-10));
    }

    #[test]
    fn weyl_residual_small_on_smooth_factors() {
        let cases: [(&str, usize); 4] = [
            ("1 + x1^2 + 2*x2^2 + x3^4", 3),
            ("exp(-x1^2 - 0.5*x2^2)", 3),
            ("1 + x1^2 + x2^2 + x3^2 + x4^2", 4),
            ("exp(-x2^2) + x5^2", 5),
        ];
        for (phi, n) in cases {
            let m = metric(phi, n);
            for i in 0..25 {
                let t = -0.8 + 0.066 * i as f64;
                let p: Vec<f64> = (0..n).map(|d| t + 0.13 * d as f64).collect();
                let oracle_norm = 1.0 + tensor_max_norm(&m.riemann_oracle(&p).unwrap());
                let w = m.weyl_residual(&p).unwrap();
                assert!(w <= 1e-10 * oracle_norm, "{phi} at {p:?}: {w:e}");
            }
        }
    }

    #[test]
    fn trace_of_ricci_is_scalar_curvature() {
        let m = metric("1/(1+x1^2+x3^2)", 3);
        let p = [0.6, -0.1, 0.8];
        let ric = m.ricci(&p).unwrap();
        let u = m.total_factor_jet(&p).unwrap().value;
        // ḡ^{ij} = u² δ_ij
        let trace = u * u * (ric.get(0, 0) + ric.get(1, 1) + ric.get(2, 2));
        let k = m.scalar_curv(&p).unwrap();
        assert!((trace - k).abs() <= 1e-10 * (1.0 + k.abs()));
    }

    #[test]
    fn singular_point_raises() {
        let m = metric("x1", 3);
        let err = m.ricci(&[0.0, 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::SingularMetric { .. }));
    }

    #[test]
    fn homothety_leaves_schouten_unchanged_exactly() {
        // powers of two keep the rescaling exact in floating point
        for c in ["2", "4", "0.25", "1024"] {
            let m = metric("1 + x1^2 + x2^2 + x3^2", 3);
            let scaled = metric(&format!("{c}*(1 + x1^2 + x2^2 + x3^2)"), 3);
            let p = [0.9, -0.4, 0.55];
            let a = m.schouten(&p).unwrap();
            let b = scaled.schouten(&p).unwrap();
            assert_eq!(a, b, "c = {c}");
        }
    }

    #[test]
    fn conformal_scale_law() {
        // u -> c u: sectional scales by c², lowered (0,4) components by 1/c²
        let c = 3.0f64;
        let m = metric("1 + x1^2 + x2^2 + x3^2", 3);
        let scaled = metric("3*(1 + x1^2 + x2^2 + x3^2)", 3);
        let p = [0.2, 0.5, -0.7];
        let k1 = m.sectional(&p, 0, 1).unwrap();
        let k2 = scaled.sectional(&p, 0, 1).unwrap();
        assert!((k2 - c * c * k1).abs() < 1e-9 * (1.0 + k1.abs()));
        let r1 = m.riemann_oracle(&p).unwrap();
        let r2 = scaled.riemann_oracle(&p).unwrap();
        let diff = tensor_max_norm(&r2.sub(&r1.scale(1.0 / (c * c))).unwrap());
        assert!(diff < 1e-12 * (1.0 + tensor_max_norm(&r1)));
    }

    #[test]
    fn corrupted_schouten_is_detected() {
        let m = quadratic_metric();
        let p = [0.4, 0.1, -0.3];
        let mut a = m.schouten(&p).unwrap();
        a.set(0, 0, a.get(0, 0) + 1e-2);
        let g = m.metric_at(&p).unwrap();
        let corrupted = kulkarni_nomizu(&a, &g).unwrap();
        let oracle = m.riemann_oracle(&p).unwrap();
        let diff = tensor_max_norm(&oracle.sub(&corrupted).unwrap());
        assert!(diff >= 1e-3, "diff {diff}");
    }

    #[test]
    fn sectional_cross_check_identity() {
        // for a constructed solution R̄ = T ⊙ δ, K(∂i,∂j) = u⁴ (f_i + f_j)
        let m = metric("1/(1+x1^2)", 3);
        let t = 1.0f64;
        let p = [t, 0.0, 0.0];
        let u = 1.0 / (1.0 + t * t);
        let f_trans = -2.0 * t * t; // the transverse components of the known tensor
        let k23 = m.sectional(&p, 1, 2).unwrap();
        assert!((k23 - u.powi(4) * (f_trans + f_trans)).abs() < 1e-10);
        assert!((k23 - (-0.25)).abs() < 1e-10);
        // K(∂2, ∂1) at x1 = 1 vanishes: f_k + f = (4t²−2) + (−2t²) = 0 at t=1
        let k21 = m.sectional(&p, 1, 0).unwrap();
        assert!(k21.abs() < 1e-10);
    }

    #[test]
    fn example_scalar_curvature_value() {
        let m = metric("1/(1+x1^2)", 3);
        let k = m.scalar_curv(&[0.0, 0.0, 0.0]).unwrap();
        assert!((k - (-8.0)).abs() < 1e-9);
    }
}
