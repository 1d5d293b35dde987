//! Tensors whose components depend on a single fixed variable x_k.
//!
//! Such a tensor admits a conformal solution iff the transverse components
//! agree, f_i = f for i ≠ k, and with h = f_{,x_k}/(3f + f_k) and
//! v = e^{−2∫h} the pair (f, f_k) satisfies
//!
//! ```text
//! ½ h² − h' = C² f_k v,        −h² = 2 C² f v,
//! ```
//!
//! in which case u(x_k) = C e^{−∫h}. Antiderivatives are anchored at
//! x_k = 0 throughout; the constant that a free anchor would introduce is
//! absorbed into C. Conversely, any generator h produces a solvable tensor
//! f_k = (h² − 2h')/(2C²) e^{2∫h}, f = −h²/(2C²) e^{2∫h}, and a bounded-below
//! antiderivative certifies completeness of the resulting metric (the factor
//! u = C e^{−∫h} is then bounded above, so ḡ dominates a multiple of the
//! flat metric).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exprlang::ScalarExpr;
use crate::field::{GeneratedField, Generator, GeneratorComponent, ScalarField};
use crate::grid::Grid;
use crate::jets::Jet2;
use crate::quad::adaptive_simpson;
use crate::real::Real;

use super::{DiagonalTensorField, Indeterminate, NonExistence, Tolerances, Witness};

/// h = f_{,x_k}/(3f + f_k) and its derivative at a point, from the smallest
/// admissible transverse component.
fn generator_ratio<T: Real>(
    tensor: &DiagonalTensorField<T>,
    p: &[T],
    axis: usize,
) -> Result<(T, T)> {
    let jets = tensor.jets_at(p)?;
    let n = tensor.n();
    let mut vmax = T::zero();
    for j in &jets {
        vmax = vmax.max(j.value.abs());
    }
    let floor = T::of(super::REL_FLOOR) * (T::one() + vmax);
    for i in (0..n).filter(|&i| i != axis) {
        let den = T::of(3.0) * jets[i].value + jets[axis].value;
        if den.abs() <= floor {
            continue;
        }
        let num = jets[i].grad(axis);
        let dden = T::of(3.0) * jets[i].grad(axis) + jets[axis].grad(axis);
        let h = num / den;
        let dh = (jets[i].hess(axis, axis) * den - num * dden) / (den * den);
        return Ok((h, dh));
    }
    Err(Error::Degenerate {
        i: if axis == 0 { 2 } else { 1 },
        j: axis + 1,
        point: p.iter().map(|x| x.to_f64_lossy()).collect(),
    })
}

/// The factor u(x_k) = C e^{−∫_0 h} reconstructed from the tensor's own
/// ratio field, as a scalar field on R^n.
pub struct SingleVarFactor<T> {
    tensor: Arc<DiagonalTensorField<T>>,
    axis: usize,
    c: T,
    quad_tol: T,
}

impl<T: Real> SingleVarFactor<T> {
    fn point_on_axis(&self, t: T) -> Vec<T> {
        let mut p = vec![T::zero(); self.tensor.n()];
        p[self.axis] = t;
        p
    }

    fn h_at(&self, t: T) -> Result<T> {
        generator_ratio(&self.tensor, &self.point_on_axis(t), self.axis).map(|(h, _)| h)
    }

    fn antiderivative(&self, t: T) -> Result<T> {
        adaptive_simpson(|s| self.h_at(s), T::zero(), t, self.quad_tol)
    }
}

impl<T: Real> ScalarField<T> for SingleVarFactor<T> {
    fn dim(&self) -> usize {
        self.tensor.n()
    }

    fn jet2(&self, p: &[T]) -> Result<Jet2<T>> {
        let t = p[self.axis];
        let (h, dh) = generator_ratio(&self.tensor, &self.point_on_axis(t), self.axis)?;
        let u = self.c * (-self.antiderivative(t)?).exp();
        let mut jet = Jet2::constant(u, self.dim());
        jet.set_grad(self.axis, -h * u);
        jet.set_hess(self.axis, self.axis, (h * h - dh) * u);
        Ok(jet)
    }

    fn value(&self, p: &[T]) -> Result<T> {
        let t = p[self.axis];
        Ok(self.c * (-self.antiderivative(t)?).exp())
    }

    fn free_vars(&self) -> Vec<usize> {
        vec![self.axis]
    }

    fn describe(&self) -> String {
        format!(
            "C * exp(-int_0 h) reconstructed from the tensor, C = {}",
            self.c.to_f64_lossy()
        )
    }
}

pub enum Theorem44Outcome<T> {
    Factor(Arc<SingleVarFactor<T>>),
    NonExistence(NonExistence),
    Indeterminate(Indeterminate),
}

/// Decide the single-variable problem for a given scale C.
pub fn theorem44_solve<T: Real>(
    tensor: &Arc<DiagonalTensorField<T>>,
    axis: usize,
    c: T,
    grid: &Grid<T>,
    tol: Tolerances<T>,
) -> Result<Theorem44Outcome<T>> {
    let n = tensor.n();
    assert!(axis < n);
    for i in 0..n {
        if tensor.component(i).free_vars().iter().any(|&v| v != axis) {
            return Err(Error::Schema {
                path: format!("tensor.f{}", i + 1),
                message: format!("component must depend only on x{}", axis + 1),
            });
        }
    }
    let points = grid.axis_line(axis);

    // transverse components must agree
    let reference = (0..n).find(|&i| i != axis).expect("n >= 3");
    let mut unequal_max = T::zero();
    let mut unequal_at = points[0].clone();
    for p in &points {
        let values = tensor.values_at(p)?;
        let scale = T::one() + values.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
        for i in (0..n).filter(|&i| i != axis && i != reference) {
            let dev = (values[i] - values[reference]).abs() / scale;
            if dev > unequal_max {
                unequal_max = dev;
                unequal_at = p.clone();
            }
        }
    }
    if unequal_max > tol.accept {
        return Ok(Theorem44Outcome::NonExistence(NonExistence {
            witness: Witness::TransverseUnequal,
            location: unequal_at.iter().map(|x| x.to_f64_lossy()).collect(),
            magnitude: unequal_max.to_f64_lossy(),
        }));
    }

    // both equations of the reduced system, on the axis line
    let factor = SingleVarFactor {
        tensor: Arc::clone(tensor),
        axis,
        c,
        quad_tol: tol.quadrature,
    };
    let half = T::of(0.5);
    let two = T::of(2.0);
    let mut worst = (T::zero(), 1u8, points[0].clone());
    for p in &points {
        let t = p[axis];
        let (h, dh) = generator_ratio(tensor, p, axis)?;
        let v = (-two * factor.antiderivative(t)?).exp();
        let values = tensor.values_at(p)?;
        let r1 = (half * h * h - dh - c * c * values[axis] * v).abs();
        let r2 = (-h * h - two * c * c * values[reference] * v).abs();
        if r1 > worst.0 {
            worst = (r1, 1, p.clone());
        }
        if r2 > worst.0 {
            worst = (r2, 2, p.clone());
        }
    }
    let (magnitude, equation, location) = worst;
    if magnitude >= tol.reject {
        return Ok(Theorem44Outcome::NonExistence(NonExistence {
            witness: Witness::System13Equation { equation },
            location: location.iter().map(|x| x.to_f64_lossy()).collect(),
            magnitude: magnitude.to_f64_lossy(),
        }));
    }
    if magnitude > tol.accept {
        return Ok(Theorem44Outcome::Indeterminate(Indeterminate {
            residual: magnitude.to_f64_lossy(),
            location: location.iter().map(|x| x.to_f64_lossy()).collect(),
            note: super::INDETERMINATE_NOTE.to_string(),
        }));
    }
    Ok(Theorem44Outcome::Factor(Arc::new(factor)))
}

/// Build the solvable tensor and its factor from a generator h(x_k).
pub fn corollary45_construct<T: Real>(
    h: &ScalarExpr<T>,
    axis: usize,
    c: T,
    quad_tol: T,
) -> Result<(DiagonalTensorField<T>, Arc<GeneratedField<T>>)> {
    let n = h.dim();
    assert!(c > T::zero(), "the scale constant must be positive");
    assert!(axis < n);
    if h.free_vars().iter().any(|&v| v != axis) {
        return Err(Error::Schema {
            path: "h".to_string(),
            message: format!("generator must depend only on x{}", axis + 1),
        });
    }
    // h ≡ 0 would make both components vanish identically
    let mut all_zero = true;
    for j in -8..=8 {
        let mut p = vec![T::zero(); n];
        p[axis] = T::of(j as f64 * 0.375);
        if h.eval(&p)?.abs() > T::of(1e-14) {
            all_zero = false;
            break;
        }
    }
    if all_zero {
        return Err(Error::DegenerateTensor);
    }

    let generator = Arc::new(Generator::new(h.clone(), axis, quad_tol));
    let components: Vec<Arc<dyn ScalarField<T>>> = (0..n)
        .map(|i| {
            let kind = if i == axis {
                GeneratorComponent::Axis
            } else {
                GeneratorComponent::Transverse
            };
            Arc::new(GeneratedField::new(Arc::clone(&generator), c, kind))
                as Arc<dyn ScalarField<T>>
        })
        .collect();
    let tensor = DiagonalTensorField::from_fields(components)?;
    let factor = Arc::new(GeneratedField::new(
        generator,
        c,
        GeneratorComponent::Factor,
    ));
    Ok((tensor, factor))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completeness {
    Complete,
    Inconclusive,
}

/// Sufficient completeness criterion: if the running antiderivative
/// ∫_0^t h stays ≥ −L on the probed interval (and the caller asserts the
/// bound globally), the factor u = C e^{−∫h} is bounded above and the metric
/// is complete. The criterion is one-sided: failure is reported as
/// Inconclusive, never as incompleteness.
pub fn completeness_flag<T: Real>(
    h: &ScalarExpr<T>,
    axis: usize,
    probe_interval: (T, T),
    bound: T,
    samples: usize,
) -> Result<Completeness> {
    let (a, b) = probe_interval;
    assert!(a < b && samples >= 3);
    let n = h.dim();
    let h_at = |t: T| -> Result<T> {
        let mut p = vec![T::zero(); n];
        p[axis] = t;
        h.eval(&p)
    };
    let step = (b - a) / T::of((samples - 1) as f64);
    let mut min_running = T::zero();
    for j in 0..samples {
        let t = a + T::of(j as f64) * step;
        let big_h = adaptive_simpson(h_at, T::zero(), t, T::of(1e-9))?;
        min_running = min_running.min(big_h);
    }
    Ok(if min_running >= -bound {
        Completeness::Complete
    } else {
        Completeness::Inconclusive
    })
}
