//! Second-order forward-mode differentiation of expression trees.
//!
//! A [`Jet2`] carries value, gradient and symmetric Hessian of a scalar field
//! at a point; every curvature formula downstream needs at most second
//! derivatives, so this is the entire differentiation currency of the crate.
//! Gradients and Hessians are dense: dimensions stay small (n <= ~16), so the
//! O(n^2)-per-node cost is acceptable and avoids taping.

use crate::error::{DomainKind, Error, Result};
use crate::exprlang::{BinOp, Func, Node, ScalarExpr};
use crate::real::Real;

/// Packed index into the upper triangle of a symmetric n x n matrix.
#[inline]
pub(crate) fn sym_index(i: usize, j: usize, n: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * n - a * (a + 1) / 2 + b
}

/// Value, gradient and symmetric Hessian of a scalar field at a point.
///
/// The Hessian is stored as a packed upper triangle, so mixed partials are
/// equal by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2<T> {
    pub value: T,
    grad: Vec<T>,
    hess: Vec<T>,
    n: usize,
}

impl<T: Real> Jet2<T> {
    pub fn constant(value: T, n: usize) -> Self {
        Jet2 {
            value,
            grad: vec![T::zero(); n],
            hess: vec![T::zero(); n * (n + 1) / 2],
            n,
        }
    }

    pub fn variable(value: T, index: usize, n: usize) -> Self {
        let mut jet = Self::constant(value, n);
        jet.grad[index] = T::one();
        jet
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn grad(&self, i: usize) -> T {
        self.grad[i]
    }

    pub fn gradient(&self) -> &[T] {
        &self.grad
    }

    pub fn hess(&self, i: usize, j: usize) -> T {
        self.hess[sym_index(i, j, self.n)]
    }

    pub fn set_grad(&mut self, i: usize, v: T) {
        self.grad[i] = v;
    }

    /// Writes the shared (i,j)/(j,i) slot.
    pub fn set_hess(&mut self, i: usize, j: usize, v: T) {
        self.hess[sym_index(i, j, self.n)] = v;
    }

    pub fn grad_norm_sq(&self) -> T {
        self.grad.iter().fold(T::zero(), |acc, &g| acc + g * g)
    }

    pub fn laplacian(&self) -> T {
        (0..self.n).fold(T::zero(), |acc, i| acc + self.hess(i, i))
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|h| h.is_finite())
    }

    fn zip(&self, other: &Jet2<T>, f: impl Fn(T, T) -> T) -> Jet2<T> {
        debug_assert_eq!(self.n, other.n);
        Jet2 {
            value: f(self.value, other.value),
            grad: self
                .grad
                .iter()
                .zip(&other.grad)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            hess: self
                .hess
                .iter()
                .zip(&other.hess)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            n: self.n,
        }
    }

    pub fn add(&self, other: &Jet2<T>) -> Jet2<T> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Jet2<T>) -> Jet2<T> {
        self.zip(other, |a, b| a - b)
    }

    pub fn neg(&self) -> Jet2<T> {
        Jet2 {
            value: -self.value,
            grad: self.grad.iter().map(|&g| -g).collect(),
            hess: self.hess.iter().map(|&h| -h).collect(),
            n: self.n,
        }
    }

    pub fn scale(&self, c: T) -> Jet2<T> {
        Jet2 {
            value: c * self.value,
            grad: self.grad.iter().map(|&g| c * g).collect(),
            hess: self.hess.iter().map(|&h| c * h).collect(),
            n: self.n,
        }
    }

    pub fn mul(&self, other: &Jet2<T>) -> Jet2<T> {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let value = self.value * other.value;
        let grad = (0..n)
            .map(|i| self.grad[i] * other.value + self.value * other.grad[i])
            .collect();
        let mut hess = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                hess.push(
                    self.hess(i, j) * other.value
                        + self.grad[i] * other.grad[j]
                        + self.grad[j] * other.grad[i]
                        + self.value * other.hess(i, j),
                );
            }
        }
        Jet2 {
            value,
            grad,
            hess,
            n,
        }
    }

    /// 1/self via the closed-form quotient jets (no logs involved).
    pub fn recip(&self) -> Result<Jet2<T>> {
        if self.value == T::zero() {
            return Err(Error::domain(DomainKind::DivisionByZero));
        }
        let v = self.value;
        let inv = T::one() / v;
        let inv2 = inv * inv;
        let inv3 = inv2 * inv;
        let two = T::of(2.0);
        let n = self.n;
        let grad: Vec<T> = (0..n).map(|i| -self.grad[i] * inv2).collect();
        let mut hess = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                hess.push(two * self.grad[i] * self.grad[j] * inv3 - self.hess(i, j) * inv2);
            }
        }
        Ok(Jet2 {
            value: inv,
            grad,
            hess,
            n,
        })
    }

    pub fn div(&self, other: &Jet2<T>) -> Result<Jet2<T>> {
        Ok(self.mul(&other.recip()?))
    }

    /// Chain rule through a scalar function given f(v), f'(v), f''(v).
    pub fn chain(&self, fv: T, fp: T, fpp: T) -> Jet2<T> {
        let n = self.n;
        let grad = (0..n).map(|i| fp * self.grad[i]).collect();
        let mut hess = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                hess.push(fpp * self.grad[i] * self.grad[j] + fp * self.hess(i, j));
            }
        }
        Jet2 {
            value: fv,
            grad,
            hess,
            n,
        }
    }

    /// self^p for a constant exponent, via the power rule. Handles negative
    /// bases with integer exponents without going through logarithms.
    pub fn pow_const(&self, p: T) -> Result<Jet2<T>> {
        let v = self.value;
        if v < T::zero() && p.fract() != T::zero() {
            return Err(Error::domain(DomainKind::NegativeBaseFractionalExponent));
        }
        // at v = 0 the derivative factors v^(p-1), v^(p-2) may be infinite;
        // they propagate as non-finite jet entries, never silently clamped
        let fv = v.powf(p);
        let fp = if p == T::zero() {
            T::zero()
        } else {
            p * v.powf(p - T::one())
        };
        let fpp = if p == T::zero() || p == T::one() {
            T::zero()
        } else {
            p * (p - T::one()) * v.powf(p - T::of(2.0))
        };
        Ok(self.chain(fv, fp, fpp))
    }
}

fn func_derivatives<T: Real>(f: Func, v: T) -> Result<(T, T, T)> {
    Ok(match f {
        Func::Exp => {
            let e = v.exp();
            (e, e, e)
        }
        Func::Log => {
            if v <= T::zero() {
                return Err(Error::domain(DomainKind::LogNonPositive));
            }
            let inv = T::one() / v;
            (v.ln(), inv, -inv * inv)
        }
        Func::Sin => (v.sin(), v.cos(), -v.sin()),
        Func::Cos => (v.cos(), -v.sin(), -v.cos()),
        Func::Sinh => (v.sinh(), v.cosh(), v.sinh()),
        Func::Cosh => (v.cosh(), v.sinh(), v.cosh()),
        Func::Tanh => {
            let t = v.tanh();
            let sech2 = T::one() - t * t;
            (t, sech2, -T::of(2.0) * t * sech2)
        }
        Func::Sqrt => {
            if v < T::zero() {
                return Err(Error::domain(DomainKind::SqrtNegative));
            }
            let s = v.sqrt();
            let half = T::of(0.5);
            (s, half / s, -T::of(0.25) / (s * v))
        }
        Func::Abs => (v.abs(), v.signum(), T::zero()),
    })
}

fn jet_node<T: Real>(node: &Node<T>, p: &[T]) -> Result<Jet2<T>> {
    let n = p.len();
    match node {
        Node::Const(c) => Ok(Jet2::constant(*c, n)),
        Node::Var(i) => Ok(Jet2::variable(p[*i], *i, n)),
        Node::Neg(a) => Ok(jet_node(a, p)?.neg()),
        Node::Bin(op, a, b) => {
            let x = jet_node(a, p)?;
            let y = jet_node(b, p)?;
            match op {
                BinOp::Add => Ok(x.add(&y)),
                BinOp::Sub => Ok(x.sub(&y)),
                BinOp::Mul => Ok(x.mul(&y)),
                BinOp::Div => x.div(&y),
                BinOp::Pow => {
                    let exponent_constant = y.grad.iter().all(|&g| g == T::zero())
                        && y.hess.iter().all(|&h| h == T::zero());
                    if exponent_constant {
                        x.pow_const(y.value)
                    } else {
                        // genuinely variable exponent: x^y = exp(y ln x)
                        if x.value <= T::zero() {
                            return Err(Error::domain(DomainKind::NegativeBaseFractionalExponent));
                        }
                        let (lv, lp, lpp) = func_derivatives(Func::Log, x.value)?;
                        let ln_x = x.chain(lv, lp, lpp);
                        let w = y.mul(&ln_x);
                        let (ev, ep, epp) = func_derivatives(Func::Exp, w.value)?;
                        Ok(w.chain(ev, ep, epp))
                    }
                }
            }
        }
        Node::Call(f, a) => {
            let x = jet_node(a, p)?;
            let (fv, fp, fpp) = func_derivatives(*f, x.value)?;
            Ok(x.chain(fv, fp, fpp))
        }
    }
}

/// Value, gradient and Hessian of `expr` at `p`, exact to rounding.
pub fn eval_jet2<T: Real>(expr: &ScalarExpr<T>, p: &[T]) -> Result<Jet2<T>> {
    if p.len() != expr.dim() {
        return Err(Error::DimensionMismatch {
            expected: expr.dim(),
            got: p.len(),
        });
    }
    jet_node(expr.root(), p)
}

/// Maximum relative discrepancy between the jet derivatives and central
/// finite differences with the given step, over all gradient and Hessian
/// components. The denominator is `1 + |jet component|`.
pub fn finite_diff_check<T: Real>(expr: &ScalarExpr<T>, p: &[T], step: T) -> Result<T> {
    assert!(step > T::zero(), "finite difference step must be positive");
    let n = p.len();
    let jet = eval_jet2(expr, p)?;
    let at = |q: &[T]| expr.eval(q);
    let mut worst = T::zero();
    let two = T::of(2.0);
    let four = T::of(4.0);

    let mut q = p.to_vec();
    for i in 0..n {
        q.copy_from_slice(p);
        q[i] = p[i] + step;
        let fp = at(&q)?;
        q[i] = p[i] - step;
        let fm = at(&q)?;
        let fd = (fp - fm) / (two * step);
        let rel = (jet.grad(i) - fd).abs() / (T::one() + jet.grad(i).abs());
        worst = worst.max(rel);

        let f0 = at(p)?;
        let fd2 = (fp - two * f0 + fm) / (step * step);
        let rel2 = (jet.hess(i, i) - fd2).abs() / (T::one() + jet.hess(i, i).abs());
        worst = worst.max(rel2);

        for j in (i + 1)..n {
            q.copy_from_slice(p);
            q[i] = p[i] + step;
            q[j] = p[j] + step;
            let fpp = at(&q)?;
            q[j] = p[j] - step;
            let fpm = at(&q)?;
            q[i] = p[i] - step;
            q[j] = p[j] + step;
            let fmp = at(&q)?;
            q[j] = p[j] - step;
            let fmm = at(&q)?;
            let fd_mixed = (fpp - fpm - fmp + fmm) / (four * step * step);
            let rel = (jet.hess(i, j) - fd_mixed).abs() / (T::one() + jet.hess(i, j).abs());
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
