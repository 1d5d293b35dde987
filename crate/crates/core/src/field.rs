//! Scalar fields behind a common jet interface.
//!
//! Most fields are parsed expressions, but two families are not: tensor
//! components built from a generator `h` carry an anchored antiderivative
//! that only exists by quadrature, and reconstructed conformal factors are
//! line integrals of a gradient field. [`ScalarField`] lets the residual
//! machinery treat all of them uniformly.

use std::sync::Arc;

use crate::error::Result;
use crate::exprlang::ScalarExpr;
use crate::jets::{eval_jet2, Jet2};
use crate::quad::adaptive_simpson;
use crate::real::Real;

/// A scalar field on R^n that can report value, gradient and Hessian.
pub trait ScalarField<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    fn jet2(&self, p: &[T]) -> Result<Jet2<T>>;

    fn value(&self, p: &[T]) -> Result<T> {
        Ok(self.jet2(p)?.value)
    }

    /// Zero-based indices of variables the field may depend on.
    fn free_vars(&self) -> Vec<usize>;

    /// Short human-readable form for reports.
    fn describe(&self) -> String;
}

impl<T: Real> ScalarField<T> for ScalarExpr<T> {
    fn dim(&self) -> usize {
        ScalarExpr::dim(self)
    }

    fn jet2(&self, p: &[T]) -> Result<Jet2<T>> {
        eval_jet2(self, p)
    }

    fn value(&self, p: &[T]) -> Result<T> {
        self.eval(p)
    }

    fn free_vars(&self) -> Vec<usize> {
        ScalarExpr::free_vars(self)
    }

    fn describe(&self) -> String {
        self.to_canonical_text()
    }
}

/// Value and first two derivatives of a function of one variable.
#[derive(Debug, Clone, Copy)]
pub struct Jet1<T> {
    pub v: T,
    pub d1: T,
    pub d2: T,
}

impl<T: Real> Jet1<T> {
    pub fn mul(self, o: Jet1<T>) -> Jet1<T> {
        Jet1 {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + T::of(2.0) * self.d1 * o.d1 + self.v * o.d2,
        }
    }

    pub fn scale(self, c: T) -> Jet1<T> {
        Jet1 {
            v: c * self.v,
            d1: c * self.d1,
            d2: c * self.d2,
        }
    }
}

/// Shared data for fields of one variable built from a generator `h(x_k)`:
/// the anchored antiderivative `H(t) = ∫_0^t h` (by quadrature) and the jet
/// of `h` along the axis.
#[derive(Clone)]
pub struct Generator<T> {
    h: ScalarExpr<T>,
    axis: usize,
    quad_tol: T,
}

impl<T: Real> Generator<T> {
    pub fn new(h: ScalarExpr<T>, axis: usize, quad_tol: T) -> Self {
        debug_assert!(h.free_vars().iter().all(|&v| v == axis));
        Generator { h, axis, quad_tol }
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn h_expr(&self) -> &ScalarExpr<T> {
        &self.h
    }

    fn point_on_axis(&self, t: T) -> Vec<T> {
        let mut p = vec![T::zero(); self.h.dim()];
        p[self.axis] = t;
        p
    }

    pub fn h_at(&self, t: T) -> Result<T> {
        self.h.eval(&self.point_on_axis(t))
    }

    /// (h, h', h'') at t.
    pub fn h_jet(&self, t: T) -> Result<Jet1<T>> {
        let jet = eval_jet2(&self.h, &self.point_on_axis(t))?;
        Ok(Jet1 {
            v: jet.value,
            d1: jet.grad(self.axis),
            d2: jet.hess(self.axis, self.axis),
        })
    }

    /// Anchored antiderivative H(t) = ∫_0^t h.
    pub fn antiderivative(&self, t: T) -> Result<T> {
        adaptive_simpson(|s| self.h_at(s), T::zero(), t, self.quad_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorComponent {
    /// f_k = (h^2 - 2 h') / (2 C^2) * e^{2H}
    Axis,
    /// f = -h^2 / (2 C^2) * e^{2H}, the component on every other axis
    Transverse,
    /// u = C e^{-H}, the conformal factor itself
    Factor,
}

/// A tensor component or conformal factor generated from `h(x_k)`.
pub struct GeneratedField<T> {
    generator: Arc<Generator<T>>,
    c: T,
    component: GeneratorComponent,
}

impl<T: Real> GeneratedField<T> {
    pub fn new(generator: Arc<Generator<T>>, c: T, component: GeneratorComponent) -> Self {
        GeneratedField {
            generator,
            c,
            component,
        }
    }

    /// (value, d/dx_k, d^2/dx_k^2) along the axis.
    fn axis_jet(&self, t: T) -> Result<Jet1<T>> {
        let two = T::of(2.0);
        let h = self.generator.h_jet(t)?;
        let big_h = self.generator.antiderivative(t)?;
        match self.component {
            GeneratorComponent::Factor => {
                // u = C e^{-H}: u' = -h u, u'' = (h^2 - h') u
                let u = self.c * (-big_h).exp();
                Ok(Jet1 {
                    v: u,
                    d1: -h.v * u,
                    d2: (h.v * h.v - h.d1) * u,
                })
            }
            GeneratorComponent::Transverse => {
                // f = -h^2 w / (2C^2), w = e^{2H}, w' = 2hw, w'' = (2h' + 4h^2) w
                let wv = (two * big_h).exp();
                let w = Jet1 {
                    v: wv,
                    d1: two * h.v * wv,
                    d2: (two * h.d1 + T::of(4.0) * h.v * h.v) * wv,
                };
                let hsq = Jet1 {
                    v: h.v * h.v,
                    d1: two * h.v * h.d1,
                    d2: two * (h.d1 * h.d1 + h.v * h.d2),
                };
                let scale = -T::one() / (two * self.c * self.c);
                Ok(hsq.mul(w).scale(scale))
            }
            GeneratorComponent::Axis => {
                // f_k = (h^2 - 2h') w / (2C^2). Its second axis derivative
                // involves h''', one order beyond the jets, so that single
                // slot is filled by central differences of the exact first
                // derivative. No consumer of these fields reads it: the
                // ratio machinery only ever takes second derivatives of
                // numerator components, and f_k never sits in a numerator
                // with a nonvanishing derivative.
                let first = |s: T| -> Result<(T, T)> {
                    let h = self.generator.h_jet(s)?;
                    let big_h = self.generator.antiderivative(s)?;
                    let w = (two * big_h).exp();
                    let a = h.v * h.v - two * h.d1;
                    let a1 = two * h.v * h.d1 - two * h.d2;
                    let scale = T::one() / (two * self.c * self.c);
                    Ok((scale * a * w, scale * (a1 + two * h.v * a) * w))
                };
                let (v, d1) = first(t)?;
                let step = T::of(1e-5);
                let (_, d1p) = first(t + step)?;
                let (_, d1m) = first(t - step)?;
                Ok(Jet1 {
                    v,
                    d1,
                    d2: (d1p - d1m) / (two * step),
                })
            }
        }
    }
}

impl<T: Real> ScalarField<T> for GeneratedField<T> {
    fn dim(&self) -> usize {
        self.generator.h_expr().dim()
    }

    fn jet2(&self, p: &[T]) -> Result<Jet2<T>> {
        let n = self.dim();
        let axis = self.generator.axis();
        let j1 = self.axis_jet(p[axis])?;
        let mut jet = Jet2::constant(j1.v, n);
        jet.set_grad(axis, j1.d1);
        jet.set_hess(axis, axis, j1.d2);
        Ok(jet)
    }

    fn value(&self, p: &[T]) -> Result<T> {
        let axis = self.generator.axis();
        Ok(self.axis_jet(p[axis])?.v)
    }

    fn free_vars(&self) -> Vec<usize> {
        vec![self.generator.axis()]
    }

    fn describe(&self) -> String {
        let h = self.generator.h_expr().to_canonical_text();
        let k = self.generator.axis() + 1;
        match self.component {
            GeneratorComponent::Axis => {
                format!("(h^2 - 2*h')/(2*C^2) * exp(2*int_0 h) with h = {h}, k = {k}")
            }
            GeneratorComponent::Transverse => {
                format!("-h^2/(2*C^2) * exp(2*int_0 h) with h = {h}, k = {k}")
            }
            GeneratorComponent::Factor => format!("C * exp(-int_0 h) with h = {h}, k = {k}"),
        }
    }
}

/// A field multiplied by a constant.
pub struct ScaledField<T> {
    inner: Arc<dyn ScalarField<T>>,
    factor: T,
}

impl<T: Real> ScaledField<T> {
    pub fn new(inner: Arc<dyn ScalarField<T>>, factor: T) -> Self {
        ScaledField { inner, factor }
    }
}

impl<T: Real> ScalarField<T> for ScaledField<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn jet2(&self, p: &[T]) -> Result<Jet2<T>> {
        Ok(self.inner.jet2(p)?.scale(self.factor))
    }

    fn value(&self, p: &[T]) -> Result<T> {
        Ok(self.factor * self.inner.value(p)?)
    }

    fn free_vars(&self) -> Vec<usize> {
        self.inner.free_vars()
    }

    fn describe(&self) -> String {
        format!(
            "{} * ({})",
            self.factor.to_f64_lossy(),
            self.inner.describe()
        )
    }
}

/// Pointwise quotient `num / den^2`, used to reduce a curved-background
/// problem to the flat one.
pub struct QuotientBySquare<T> {
    num: Arc<dyn ScalarField<T>>,
    den: ScalarExpr<T>,
}

impl<T: Real> QuotientBySquare<T> {
    pub fn new(num: Arc<dyn ScalarField<T>>, den: ScalarExpr<T>) -> Self {
        QuotientBySquare { num, den }
    }
}

impl<T: Real> ScalarField<T> for QuotientBySquare<T> {
    fn dim(&self) -> usize {
        self.num.dim()
    }

    fn jet2(&self, p: &[T]) -> Result<Jet2<T>> {
        let f = self.num.jet2(p)?;
        let d = eval_jet2(&self.den, p)?;
        f.div(&d.mul(&d))
    }

    fn free_vars(&self) -> Vec<usize> {
        let mut vars = self.num.free_vars();
        for v in ScalarExpr::free_vars(&self.den) {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
        vars.sort_unstable();
        vars
    }

    fn describe(&self) -> String {
        format!(
            "({}) / ({})^2",
            self.num.describe(),
            self.den.to_canonical_text()
        )
    }
}
