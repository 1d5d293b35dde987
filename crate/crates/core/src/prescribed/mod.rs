//! Solver and verifier for the prescribed-curvature problem R̄ = T ⊙ g in a
//! conformal class.
//!
//! The diagonal tensor T = Σ f_i dx_i² determines a candidate logarithmic
//! gradient for the conformal factor u through the ratios
//!
//! ```text
//! H_ij = f_{i,x_j} / (3 f_i + f_j),      (ln u)_{,x_j} = −H_ij   (i ≠ j)
//! ```
//!
//! Solvability is equivalent to a system of compatibility conditions on the
//! H ratios (five residual families) together with the second-order system
//!
//! ```text
//! u_{,ii}/u − |∇u|²/(2u²) = u² f_i,      u_{,ij} = 0  (i ≠ j).
//! ```
//!
//! The pipeline in [`solve`] screens separable tensors (which never admit a
//! solution), sweeps the ratio families over a grid, reconstructs u by line
//! integration of the gradient field, pins the multiplicative scale from the
//! base point, and audits the full second-order system with the
//! reconstructed factor. A ratio whose numerator and denominator both vanish
//! at a sample carries no constraint and is skipped; a vanishing denominator
//! against a nonvanishing numerator is a hard degeneracy. The free function
//! ψ that parametrizes the factor in the closed form is never materialized:
//! integrating the gradient field and checking its closedness (families 2
//! and 3) is equivalent.

pub mod quadratic;
pub mod single_variable;

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exprlang::ScalarExpr;
use crate::field::{QuotientBySquare, ScalarField};
use crate::grid::Grid;
use crate::jets::Jet2;
use crate::quad::adaptive_simpson;
use crate::real::Real;

/// Relative floor below which a value is treated as vanishing when deciding
/// whether a ratio is admissible.
pub(crate) const REL_FLOOR: f64 = 1e-11;

/// Components with |f_i(base)| below this fraction of the largest component
/// are left out of the scale-consistency comparison; their ratios are too
/// ill-conditioned to be informative.
const SCALE_INCLUSION: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Diagonal tensor fields
// ---------------------------------------------------------------------------

/// Structure of a diagonal tensor field, derived from the free variables of
/// its components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    /// every component is constant
    Constant,
    /// all components depend on the single variable x_{axis+1}
    SingleVariable {
        axis: usize,
    },
    General,
}

/// T = Σ f_i dx_i² with scalar-field components.
#[derive(Clone)]
pub struct DiagonalTensorField<T> {
    n: usize,
    components: Vec<Arc<dyn ScalarField<T>>>,
}

impl<T: Real> DiagonalTensorField<T> {
    pub fn from_exprs(components: Vec<ScalarExpr<T>>) -> Result<Self> {
        let n = components.len();
        for c in &components {
            if c.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: c.dim(),
                });
            }
        }
        Ok(DiagonalTensorField {
            n,
            components: components
                .into_iter()
                .map(|c| Arc::new(c) as Arc<dyn ScalarField<T>>)
                .collect(),
        })
    }

    pub fn from_fields(components: Vec<Arc<dyn ScalarField<T>>>) -> Result<Self> {
        let n = components.len();
        for c in &components {
            if c.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: c.dim(),
                });
            }
        }
        Ok(DiagonalTensorField { n, components })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn component(&self, i: usize) -> &dyn ScalarField<T> {
        self.components[i].as_ref()
    }

    pub fn component_arc(&self, i: usize) -> Arc<dyn ScalarField<T>> {
        Arc::clone(&self.components[i])
    }

    pub fn values_at(&self, p: &[T]) -> Result<Vec<T>> {
        let values: Vec<T> = self
            .components
            .iter()
            .map(|c| c.value(p))
            .collect::<Result<_>>()?;
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: format!("tensor component f{}", i + 1),
                    point: p.iter().map(|x| x.to_f64_lossy()).collect(),
                });
            }
        }
        Ok(values)
    }

    pub fn jets_at(&self, p: &[T]) -> Result<Vec<Jet2<T>>> {
        let jets: Vec<Jet2<T>> = self
            .components
            .iter()
            .map(|c| c.jet2(p))
            .collect::<Result<_>>()?;
        for (i, jet) in jets.iter().enumerate() {
            if !jet.is_finite() {
                return Err(Error::NonFinite {
                    what: format!("jet of tensor component f{}", i + 1),
                    point: p.iter().map(|x| x.to_f64_lossy()).collect(),
                });
            }
        }
        Ok(jets)
    }

    pub fn structure(&self) -> Structure {
        let mut union: Vec<usize> = Vec::new();
        for c in &self.components {
            for v in c.free_vars() {
                if !union.contains(&v) {
                    union.push(v);
                }
            }
        }
        match union.len() {
            0 => Structure::Constant,
            1 => Structure::SingleVariable { axis: union[0] },
            _ => Structure::General,
        }
    }

    /// All components textually identical (f_i ≡ f).
    pub fn is_isotropic(&self) -> bool {
        let first = self.components[0].describe();
        self.components.iter().all(|c| c.describe() == first)
    }

    pub fn describe_components(&self) -> Vec<String> {
        self.components.iter().map(|c| c.describe()).collect()
    }

    /// The tensor scaled by a constant factor.
    pub fn scaled(&self, factor: T) -> Self {
        DiagonalTensorField {
            n: self.n,
            components: self
                .components
                .iter()
                .map(|c| {
                    Arc::new(crate::field::ScaledField::new(Arc::clone(c), factor))
                        as Arc<dyn ScalarField<T>>
                })
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Ratio machinery
// ---------------------------------------------------------------------------

/// H_ij = f_{i,x_j}/(3 f_i + f_j) and its gradient at a point.
struct HEntry<T> {
    value: T,
    grad: Vec<T>,
}

struct PointScales<T> {
    value_floor: T,
    grad_floor: T,
}

fn point_scales<T: Real>(jets: &[Jet2<T>]) -> PointScales<T> {
    let n = jets.len();
    let mut vmax = T::zero();
    let mut gmax = T::zero();
    for j in jets {
        vmax = vmax.max(j.value.abs());
        for l in 0..n {
            gmax = gmax.max(j.grad(l).abs());
        }
    }
    let floor = T::of(REL_FLOOR);
    PointScales {
        value_floor: floor * (T::one() + vmax),
        grad_floor: floor * (T::one() + gmax),
    }
}

/// The ratio H_ij at a point, or None when it carries no constraint (0/0).
fn h_entry<T: Real>(
    jets: &[Jet2<T>],
    scales: &PointScales<T>,
    i: usize,
    j: usize,
    p: &[T],
) -> Result<Option<HEntry<T>>> {
    let n = jets.len();
    let den = T::of(3.0) * jets[i].value + jets[j].value;
    let num = jets[i].grad(j);
    if den.abs() <= scales.value_floor {
        if num.abs() <= scales.grad_floor {
            return Ok(None);
        }
        return Err(Error::Degenerate {
            i: i + 1,
            j: j + 1,
            point: p.iter().map(|x| x.to_f64_lossy()).collect(),
        });
    }
    let value = num / den;
    let grad = (0..n)
        .map(|l| {
            let dden = T::of(3.0) * jets[i].grad(l) + jets[j].grad(l);
            (jets[i].hess(j, l) * den - num * dden) / (den * den)
        })
        .collect();
    Ok(Some(HEntry { value, grad }))
}

/// G_m = (ln u)_{,x_m} together with its full derivative matrix, chosen from
/// the smallest admissible numerator index, plus the cross-consistency
/// spread of the competing ratios.
struct LogGradient<T> {
    g: Vec<T>,
    /// dg[m][l] = ∂_l G_m
    dg: Vec<Vec<T>>,
    spread: T,
}

fn log_gradient<T: Real>(jets: &[Jet2<T>], p: &[T]) -> Result<LogGradient<T>> {
    let n = jets.len();
    let scales = point_scales(jets);
    let mut g = vec![T::zero(); n];
    let mut dg = vec![vec![T::zero(); n]; n];
    let mut spread = T::zero();
    for m in 0..n {
        let mut chosen: Option<HEntry<T>> = None;
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        let mut any = false;
        for i in (0..n).filter(|&i| i != m) {
            if let Some(entry) = h_entry(jets, &scales, i, m, p)? {
                lo = lo.min(entry.value);
                hi = hi.max(entry.value);
                any = true;
                if chosen.is_none() {
                    chosen = Some(entry);
                }
            }
        }
        let entry = chosen.ok_or_else(|| Error::NoAdmissibleRatio {
            component: m + 1,
            point: p.iter().map(|x| x.to_f64_lossy()).collect(),
        })?;
        if any {
            spread = spread.max(hi - lo);
        }
        g[m] = -entry.value;
        for l in 0..n {
            dg[m][l] = -entry.grad[l];
        }
    }
    Ok(LogGradient { g, dg, spread })
}

/// The candidate gradient field G of ln u at p, with the spread of the
/// redundant defining ratios as a consistency residual.
#[derive(Debug, Clone)]
pub struct GradientField<T> {
    pub g: Vec<T>,
    pub consistency: T,
}

pub fn gradient_field<T: Real>(
    tensor: &DiagonalTensorField<T>,
    p: &[T],
) -> Result<GradientField<T>> {
    let jets = tensor.jets_at(p)?;
    let lg = log_gradient(&jets, p)?;
    Ok(GradientField {
        g: lg.g,
        consistency: lg.spread,
    })
}

// ---------------------------------------------------------------------------
// Residuals
// ---------------------------------------------------------------------------

/// Residuals of the governing second-order system at a point.
pub struct System6<T> {
    /// u_{,ii}/u − |∇u|²/(2u²) − u² f_i
    pub diag: Vec<T>,
    /// u_{,ij} for i < j, lexicographic
    pub cross: Vec<T>,
}

impl<T: Real> System6<T> {
    pub fn max_abs(&self) -> T {
        self.diag
            .iter()
            .chain(self.cross.iter())
            .fold(T::zero(), |acc, r| acc.max(r.abs()))
    }
}

pub fn system6_residual<T: Real>(
    u: &dyn ScalarField<T>,
    tensor: &DiagonalTensorField<T>,
    p: &[T],
) -> Result<System6<T>> {
    let n = tensor.n();
    let jet = u.jet2(p)?;
    if jet.value == T::zero() {
        return Err(Error::SingularMetric {
            point: p.iter().map(|x| x.to_f64_lossy()).collect(),
        });
    }
    if !jet.is_finite() {
        return Err(Error::NonFinite {
            what: "jet of the conformal factor".to_string(),
            point: p.iter().map(|x| x.to_f64_lossy()).collect(),
        });
    }
    let f = tensor.values_at(p)?;
    let uv = jet.value;
    let grad_term = jet.grad_norm_sq() / (T::of(2.0) * uv * uv);
    let diag = (0..n)
        .map(|i| jet.hess(i, i) / uv - grad_term - uv * uv * f[i])
        .collect();
    let mut cross = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            cross.push(jet.hess(i, j));
        }
    }
    Ok(System6 { diag, cross })
}

/// Max residuals of the four ratio-compatibility families at a point. The
/// fifth condition of the governing system (the diagonal equations with the
/// reconstructed factor) is audited separately in [`solve`], since it is the
/// only one that needs u itself.
#[derive(Debug, Clone, Copy)]
pub struct Families<T> {
    /// spread of H_ij over the numerator index i, per derivative index j
    pub family1: T,
    /// (H_{ji})_{,x_k} = (H_{jk})_{,x_i} for i, k ≠ j
    pub family2: T,
    /// (H_{ij})_{,x_i} = (H_{ji})_{,x_j}
    pub family3: T,
    /// H_{ji} H_{ij} = (H_{ij})_{,x_i}
    pub family5: T,
}

impl<T: Real> Families<T> {
    pub fn max(&self) -> T {
        self.family1
            .max(self.family2)
            .max(self.family3)
            .max(self.family5)
    }

    fn worst(&self) -> (u8, T) {
        let mut which = 1u8;
        let mut worst = self.family1;
        for (idx, v) in [(2u8, self.family2), (3, self.family3), (5, self.family5)] {
            if v > worst {
                which = idx;
                worst = v;
            }
        }
        (which, worst)
    }
}

pub fn theorem41_residuals<T: Real>(
    tensor: &DiagonalTensorField<T>,
    p: &[T],
) -> Result<Families<T>> {
    let n = tensor.n();
    let jets = tensor.jets_at(p)?;
    let scales = point_scales(&jets);
    let entry = |i: usize, j: usize| h_entry(&jets, &scales, i, j, p);

    let mut family1 = T::zero();
    for j in 0..n {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        let mut count = 0usize;
        for i in (0..n).filter(|&i| i != j) {
            if let Some(e) = entry(i, j)? {
                lo = lo.min(e.value);
                hi = hi.max(e.value);
                count += 1;
            }
        }
        if count >= 2 {
            family1 = family1.max(hi - lo);
        }
    }

    let mut family2 = T::zero();
    for j in 0..n {
        for i in (0..n).filter(|&i| i != j) {
            for k in (i + 1..n).filter(|&k| k != j) {
                let (Some(eji), Some(ejk)) = (entry(j, i)?, entry(j, k)?) else {
                    continue;
                };
                family2 = family2.max((eji.grad[k] - ejk.grad[i]).abs());
            }
        }
    }

    let mut family3 = T::zero();
    let mut family5 = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (Some(eij), Some(eji)) = (entry(i, j)?, entry(j, i)?) else {
                continue;
            };
            if i < j {
                family3 = family3.max((eij.grad[i] - eji.grad[j]).abs());
            }
            family5 = family5.max((eji.value * eij.value - eij.grad[i]).abs());
        }
    }

    Ok(Families {
        family1,
        family2,
        family3,
        family5,
    })
}

/// Separability screen: true iff every component depends on at most its own
/// variable (structurally and numerically on the samples) and the tensor is
/// not identically zero. Such tensors never admit a conformal solution.
pub fn theorem43_detect<T: Real>(
    tensor: &DiagonalTensorField<T>,
    samples: &[Vec<T>],
    tol: T,
) -> Result<bool> {
    let n = tensor.n();
    for i in 0..n {
        if tensor.component(i).free_vars().iter().any(|&v| v != i) {
            return Ok(false);
        }
    }
    let mut max_value = T::zero();
    for p in samples {
        let jets = tensor.jets_at(p)?;
        let scale = T::one() + jets.iter().fold(T::zero(), |acc, j| acc.max(j.value.abs()));
        for (i, jet) in jets.iter().enumerate() {
            max_value = max_value.max(jet.value.abs());
            for l in (0..n).filter(|&l| l != i) {
                if jet.grad(l).abs() > tol * scale {
                    return Ok(false);
                }
            }
        }
    }
    Ok(max_value > T::zero())
}

// ---------------------------------------------------------------------------
// Reconstruction
// ---------------------------------------------------------------------------

/// G_m at an arbitrary point, for the quadrature integrand.
fn g_component<T: Real>(tensor: &DiagonalTensorField<T>, p: &[T], m: usize) -> Result<T> {
    let jets = tensor.jets_at(p)?;
    let scales = point_scales(&jets);
    for i in (0..jets.len()).filter(|&i| i != m) {
        if let Some(e) = h_entry(&jets, &scales, i, m, p)? {
            return Ok(-e.value);
        }
    }
    Err(Error::NoAdmissibleRatio {
        component: m + 1,
        point: p.iter().map(|x| x.to_f64_lossy()).collect(),
    })
}

/// ln u(query) − ln u(base): the line integral of G along the axis-aligned
/// polyline from base to query, sweeping coordinates in index order
/// (reversed when `reverse` is set).
pub fn log_factor_ratio<T: Real>(
    tensor: &DiagonalTensorField<T>,
    base: &[T],
    query: &[T],
    quad_tol: T,
    reverse: bool,
) -> Result<T> {
    let n = tensor.n();
    let mut x = base.to_vec();
    let mut total = T::zero();
    let axes: Vec<usize> = if reverse {
        (0..n).rev().collect()
    } else {
        (0..n).collect()
    };
    for axis in axes {
        let a = x[axis];
        let b = query[axis];
        if a != b {
            let frozen = x.clone();
            let leg = adaptive_simpson(
                |s| {
                    let mut q = frozen.clone();
                    q[axis] = s;
                    g_component(tensor, &q, axis)
                },
                a,
                b,
                quad_tol,
            )?;
            total = total + leg;
        }
        x[axis] = b;
    }
    Ok(total)
}

/// u(query)/u(base), with unit value at the base point. The absolute scale
/// comes from [`determine_scale`].
pub fn reconstruct_phi<T: Real>(
    tensor: &DiagonalTensorField<T>,
    base: &[T],
    query: &[T],
    quad_tol: T,
) -> Result<T> {
    Ok(log_factor_ratio(tensor, base, query, quad_tol, false)?.exp())
}

/// Outcome of pinning the multiplicative constant from the base point.
pub enum ScaleOutcome<T> {
    Scale(T),
    /// C² came out nonpositive: no real conformal factor exists.
    NonPositive {
        component: usize,
        ratio: T,
    },
}

/// C² = (G_i² + G_{i,x_i} − ½ Σ_k G_k²) / f_i at the base point, taken at
/// the component with the largest |f_i| there and cross-checked against
/// every component whose value is large enough to be informative.
pub fn determine_scale<T: Real>(
    tensor: &DiagonalTensorField<T>,
    base: &[T],
    tol: T,
) -> Result<ScaleOutcome<T>> {
    let jets = tensor.jets_at(base)?;
    let lg = log_gradient(&jets, base)?;
    let n = tensor.n();
    let half = T::of(0.5);
    let g_sq = lg.g.iter().fold(T::zero(), |acc, &g| acc + g * g);
    let f: Vec<T> = jets.iter().map(|j| j.value).collect();
    let fmax = f.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()));
    if fmax == T::zero() {
        return Err(Error::ScaleUndetermined);
    }
    let floor = T::of(SCALE_INCLUSION) * fmax;
    let mut best: Option<(usize, T)> = None;
    let mut ratios: Vec<(usize, T)> = Vec::new();
    for i in 0..n {
        if f[i].abs() < floor {
            continue;
        }
        let numerator = lg.g[i] * lg.g[i] + lg.dg[i][i] - half * g_sq;
        let ratio = numerator / f[i];
        ratios.push((i, ratio));
        if best.is_none_or(|(bi, _)| f[i].abs() > f[bi].abs()) {
            best = Some((i, ratio));
        }
    }
    let (component, c2) = best.ok_or(Error::ScaleUndetermined)?;
    let spread = ratios
        .iter()
        .fold(T::zero(), |acc, &(_, r)| acc.max((r - c2).abs()));
    if spread > tol * (T::one() + c2.abs()) {
        return Err(Error::ScaleInconsistent {
            spread: spread.to_f64_lossy(),
            tol: (tol * (T::one() + c2.abs())).to_f64_lossy(),
        });
    }
    if c2 <= T::zero() {
        return Ok(ScaleOutcome::NonPositive {
            component: component + 1,
            ratio: c2,
        });
    }
    Ok(ScaleOutcome::Scale(c2.sqrt()))
}

/// The reconstructed conformal factor u = C · exp(∫ G), as a scalar field.
/// Values are line integrals by quadrature; derivatives are closed-form,
/// u_{,i} = u G_i and u_{,ij} = u (G_i G_j + G_{i,x_j}).
pub struct ReconstructedPhi<T> {
    tensor: Arc<DiagonalTensorField<T>>,
    base: Vec<T>,
    scale: T,
    quad_tol: T,
}

impl<T: Real> ReconstructedPhi<T> {
    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn base(&self) -> &[T] {
        &self.base
    }

    /// (ln u)-gradient at q, straight from the ratio field.
    pub fn log_grad(&self, q: &[T]) -> Result<Vec<T>> {
        let jets = self.tensor.jets_at(q)?;
        Ok(log_gradient(&jets, q)?.g)
    }
}

impl<T: Real> ScalarField<T> for ReconstructedPhi<T> {
    fn dim(&self) -> usize {
        self.tensor.n()
    }

    fn jet2(&self, p: &[T]) -> Result<Jet2<T>> {
        let u = self.value(p)?;
        let jets = self.tensor.jets_at(p)?;
        let lg = log_gradient(&jets, p)?;
        let n = self.tensor.n();
        let mut jet = Jet2::constant(u, n);
        for i in 0..n {
            jet.set_grad(i, u * lg.g[i]);
        }
        let half = T::of(0.5);
        for i in 0..n {
            for j in i..n {
                let sym = half * (lg.dg[i][j] + lg.dg[j][i]);
                jet.set_hess(i, j, u * (lg.g[i] * lg.g[j] + sym));
            }
        }
        Ok(jet)
    }

    fn value(&self, p: &[T]) -> Result<T> {
        let ratio = log_factor_ratio(&self.tensor, &self.base, p, self.quad_tol, false)?;
        Ok(self.scale * ratio.exp())
    }

    fn free_vars(&self) -> Vec<usize> {
        (0..self.tensor.n()).collect()
    }

    fn describe(&self) -> String {
        format!(
            "C * exp(line integral of the log-gradient field), C = {}",
            self.scale.to_f64_lossy()
        )
    }
}

// ---------------------------------------------------------------------------
// Problem, outcome, solve
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct Tolerances<T> {
    pub accept: T,
    pub reject: T,
    pub quadrature: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Tolerances {
            accept: T::of(1e-8),
            reject: T::of(1e-4),
            quadrature: T::of(crate::quad::DEFAULT_TOL),
        }
    }
}

pub struct PrescribedProblem<T> {
    pub tensor: Arc<DiagonalTensorField<T>>,
    pub base_point: Vec<T>,
    pub grid: Grid<T>,
    pub tol: Tolerances<T>,
}

impl<T: Real> PrescribedProblem<T> {
    pub fn new(tensor: DiagonalTensorField<T>, base_point: Vec<T>, grid: Grid<T>) -> Self {
        PrescribedProblem {
            tensor: Arc::new(tensor),
            base_point,
            grid,
            tol: Tolerances::default(),
        }
    }

    /// The sample set residuals are swept over: the full grid in general,
    /// collapsed to the axis line for single-variable tensors (residuals are
    /// constant along the other axes).
    pub fn sample_points(&self) -> Vec<Vec<T>> {
        self.sample_points_with(&[])
    }

    /// Sample set when an extra field takes part in the sweep: the axis-line
    /// collapse is only sound if that field does not vary along the
    /// collapsed axes.
    pub fn sample_points_with(&self, extra_vars: &[usize]) -> Vec<Vec<T>> {
        match self.tensor.structure() {
            Structure::SingleVariable { axis } if extra_vars.iter().all(|&v| v == axis) => {
                self.grid.axis_line(axis)
            }
            _ => self.grid.points(),
        }
    }
}

/// Summary statistics of one residual family over the sample set.
#[derive(Debug, Clone)]
pub struct FamilyStat {
    pub name: String,
    pub max: f64,
    pub mean: f64,
    pub argmax: Vec<f64>,
    pub count: usize,
}

fn collect_stat<T: Real>(name: &str, values: &[(Vec<T>, T)]) -> FamilyStat {
    let mut max = f64::NEG_INFINITY;
    let mut argmax = Vec::new();
    let mut sum = 0.0;
    for (p, v) in values {
        let v = v.to_f64_lossy();
        let v = if v.is_finite() { v } else { f64::INFINITY };
        sum += v;
        if v > max {
            max = v;
            argmax = p.iter().map(|x| x.to_f64_lossy()).collect();
        }
    }
    FamilyStat {
        name: name.to_string(),
        max: if values.is_empty() { 0.0 } else { max },
        mean: if values.is_empty() {
            0.0
        } else {
            sum / values.len() as f64
        },
        argmax,
        count: values.len(),
    }
}

/// Why a tensor was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// every f_i depends only on x_i: no solution exists
    SeparableComponents,
    /// a compatibility family of the ratio system failed
    System9Family { family: u8 },
    /// the squared scale from the base point came out nonpositive
    ScaleNonPositive { component: usize },
    /// an equation of the single-variable system failed
    System13Equation { equation: u8 },
    /// the transverse components of a single-variable tensor differ
    TransverseUnequal,
    /// the final audit of the governing system failed
    SystemAudit,
}

impl Witness {
    pub fn label(&self) -> String {
        match self {
            Witness::SeparableComponents => "theorem43".to_string(),
            Witness::System9Family { family } => format!("system9-family{family}"),
            Witness::ScaleNonPositive { component } => {
                format!("scale-nonpositive-component{component}")
            }
            Witness::System13Equation { equation } => format!("system13-equation{equation}"),
            Witness::TransverseUnequal => "transverse-components-unequal".to_string(),
            Witness::SystemAudit => "system6-audit".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NonExistence {
    pub witness: Witness,
    pub location: Vec<f64>,
    pub magnitude: f64,
}

#[derive(Debug, Clone)]
pub struct Indeterminate {
    pub residual: f64,
    pub location: Vec<f64>,
    pub note: String,
}

pub struct Solution<T> {
    pub scale: T,
    pub phi: Arc<ReconstructedPhi<T>>,
    pub residuals: Vec<FamilyStat>,
}

impl<T: Real> Solution<T> {
    pub fn phi_at(&self, q: &[T]) -> Result<T> {
        self.phi.value(q)
    }

    pub fn log_phi_grad(&self, q: &[T]) -> Result<Vec<T>> {
        self.phi.log_grad(q)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0f64, |acc, s| acc.max(s.max))
    }
}

pub enum Outcome<T> {
    Solution(Solution<T>),
    NonExistence(NonExistence),
    Indeterminate(Indeterminate),
}

impl<T: Real> Outcome<T> {
    pub fn solution(&self) -> Option<&Solution<T>> {
        match self {
            Outcome::Solution(s) => Some(s),
            _ => None,
        }
    }
}

pub(crate) const INDETERMINATE_NOTE: &str = "indeterminate -- refine grid";

/// Full decision pipeline: separability screen, ratio-family sweep,
/// reconstruction and scale, final audit of the governing system.
pub fn solve<T: Real>(problem: &PrescribedProblem<T>) -> Result<Outcome<T>> {
    let tensor = &problem.tensor;
    let points = problem.sample_points();
    let tol = problem.tol;

    // Theorem 3.4-style screen: separable tensors never admit a solution.
    if theorem43_detect(tensor, &points, tol.accept)? {
        let mut magnitude = T::zero();
        let mut location = points[0].clone();
        for p in &points {
            for v in tensor.values_at(p)? {
                if v.abs() > magnitude {
                    magnitude = v.abs();
                    location = p.clone();
                }
            }
        }
        return Ok(Outcome::NonExistence(NonExistence {
            witness: Witness::SeparableComponents,
            location: location.iter().map(|x| x.to_f64_lossy()).collect(),
            magnitude: magnitude.to_f64_lossy(),
        }));
    }

    // Compatibility families over the sample set.
    let fams: Result<Vec<(Vec<T>, Families<T>)>> = points
        .par_iter()
        .map(|p| theorem41_residuals(tensor, p).map(|f| (p.clone(), f)))
        .collect();
    let fams = fams?;

    let mut worst_value = T::zero();
    let mut worst_family = 1u8;
    let mut worst_point: Vec<T> = points[0].clone();
    for (p, f) in &fams {
        let (which, value) = f.worst();
        if value > worst_value {
            worst_value = value;
            worst_family = which;
            worst_point = p.clone();
        }
    }
    let mut stats = vec![
        collect_stat(
            "family1",
            &fams
                .iter()
                .map(|(p, f)| (p.clone(), f.family1))
                .collect::<Vec<_>>(),
        ),
        collect_stat(
            "family2",
            &fams
                .iter()
                .map(|(p, f)| (p.clone(), f.family2))
                .collect::<Vec<_>>(),
        ),
        collect_stat(
            "family3",
            &fams
                .iter()
                .map(|(p, f)| (p.clone(), f.family3))
                .collect::<Vec<_>>(),
        ),
        collect_stat(
            "family5",
            &fams
                .iter()
                .map(|(p, f)| (p.clone(), f.family5))
                .collect::<Vec<_>>(),
        ),
    ];

    if worst_value >= tol.reject {
        return Ok(Outcome::NonExistence(NonExistence {
            witness: Witness::System9Family {
                family: worst_family,
            },
            location: worst_point.iter().map(|x| x.to_f64_lossy()).collect(),
            magnitude: worst_value.to_f64_lossy(),
        }));
    }
    if worst_value > tol.accept {
        return Ok(Outcome::Indeterminate(Indeterminate {
            residual: worst_value.to_f64_lossy(),
            location: worst_point.iter().map(|x| x.to_f64_lossy()).collect(),
            note: INDETERMINATE_NOTE.to_string(),
        }));
    }

    // Scale from the base point, then the reconstructed factor.
    let scale = match determine_scale(tensor, &problem.base_point, tol.accept)? {
        ScaleOutcome::Scale(c) => c,
        ScaleOutcome::NonPositive { component, ratio } => {
            return Ok(Outcome::NonExistence(NonExistence {
                witness: Witness::ScaleNonPositive { component },
                location: problem
                    .base_point
                    .iter()
                    .map(|x| x.to_f64_lossy())
                    .collect(),
                magnitude: ratio.abs().to_f64_lossy().max(tol.reject.to_f64_lossy()),
            }));
        }
    };
    let phi = Arc::new(ReconstructedPhi {
        tensor: Arc::clone(tensor),
        base: problem.base_point.clone(),
        scale,
        quad_tol: tol.quadrature,
    });

    // Final audit: the governing system with the reconstructed factor. The
    // diagonal residuals realize the remaining family of the ratio system.
    let audits: Result<Vec<(Vec<T>, System6<T>)>> = points
        .par_iter()
        .map(|p| system6_residual(phi.as_ref(), tensor, p).map(|r| (p.clone(), r)))
        .collect();
    let audits = audits?;
    let diag_values: Vec<(Vec<T>, T)> = audits
        .iter()
        .map(|(p, r)| {
            (
                p.clone(),
                r.diag.iter().fold(T::zero(), |a, v| a.max(v.abs())),
            )
        })
        .collect();
    let cross_values: Vec<(Vec<T>, T)> = audits
        .iter()
        .map(|(p, r)| {
            (
                p.clone(),
                r.cross.iter().fold(T::zero(), |a, v| a.max(v.abs())),
            )
        })
        .collect();
    stats.push(collect_stat("system6-diag", &diag_values));
    stats.push(collect_stat("system6-cross", &cross_values));

    let mut audit_max = T::zero();
    let mut audit_point = points[0].clone();
    for (p, r) in &audits {
        let m = r.max_abs();
        if m > audit_max {
            audit_max = m;
            audit_point = p.clone();
        }
    }
    if audit_max >= tol.reject {
        return Ok(Outcome::NonExistence(NonExistence {
            witness: Witness::SystemAudit,
            location: audit_point.iter().map(|x| x.to_f64_lossy()).collect(),
            magnitude: audit_max.to_f64_lossy(),
        }));
    }
    if audit_max > tol.accept {
        return Ok(Outcome::Indeterminate(Indeterminate {
            residual: audit_max.to_f64_lossy(),
            location: audit_point.iter().map(|x| x.to_f64_lossy()).collect(),
            note: INDETERMINATE_NOTE.to_string(),
        }));
    }

    Ok(Outcome::Solution(Solution {
        scale,
        phi,
        residuals: stats,
    }))
}

/// Residual sweep for a *given* factor: the governing system plus the ratio
/// families, as used by the verify task.
pub fn verify<T: Real>(
    problem: &PrescribedProblem<T>,
    phi: &dyn ScalarField<T>,
) -> Result<Vec<FamilyStat>> {
    let tensor = &problem.tensor;
    let points = problem.sample_points_with(&phi.free_vars());
    let work: Result<Vec<(Vec<T>, Families<T>, System6<T>)>> = points
        .par_iter()
        .map(|p| {
            let fams = theorem41_residuals(tensor, p)?;
            let sys = system6_residual(phi, tensor, p)?;
            Ok((p.clone(), fams, sys))
        })
        .collect();
    let work = work?;
    let take = |f: &dyn Fn(&(Vec<T>, Families<T>, System6<T>)) -> T| -> Vec<(Vec<T>, T)> {
        work.iter().map(|row| (row.0.clone(), f(row))).collect()
    };
    Ok(vec![
        collect_stat(
            "system6-diag",
            &take(&|row| row.2.diag.iter().fold(T::zero(), |a, v| a.max(v.abs()))),
        ),
        collect_stat(
            "system6-cross",
            &take(&|row| row.2.cross.iter().fold(T::zero(), |a, v| a.max(v.abs()))),
        ),
        collect_stat("family1", &take(&|row| row.1.family1)),
        collect_stat("family2", &take(&|row| row.1.family2)),
        collect_stat("family3", &take(&|row| row.1.family3)),
        collect_stat("family5", &take(&|row| row.1.family5)),
    ])
}

// ---------------------------------------------------------------------------
// Locally conformally flat lift
// ---------------------------------------------------------------------------

/// A solution of the lifted problem on a curved background g = δ/F²:
/// ḡ = g/phi_rel² with phi_rel = u/F.
pub struct LiftSolution<T> {
    pub solution: Solution<T>,
    background: ScalarExpr<T>,
}

impl<T: Real> LiftSolution<T> {
    pub fn phi_rel_at(&self, q: &[T]) -> Result<T> {
        let u = self.solution.phi_at(q)?;
        let f = self.background.eval(q)?;
        Ok(u / f)
    }
}

pub enum LiftOutcome<T> {
    Solution(LiftSolution<T>),
    NonExistence(NonExistence),
    Indeterminate(Indeterminate),
}

/// Reduce R̄ = T ⊙ (δ/F²) to the flat problem with effective components
/// f_i/F², solve it, and express the result relative to the background.
pub fn theorem46_lift<T: Real>(
    background: &ScalarExpr<T>,
    tensor: &DiagonalTensorField<T>,
    base_point: Vec<T>,
    grid: Grid<T>,
    tol: Tolerances<T>,
) -> Result<LiftOutcome<T>> {
    let n = tensor.n();
    let effective = DiagonalTensorField::from_fields(
        (0..n)
            .map(|i| {
                Arc::new(QuotientBySquare::new(
                    tensor.component_arc(i),
                    background.clone(),
                )) as Arc<dyn ScalarField<T>>
            })
            .collect(),
    )?;
    let problem = PrescribedProblem {
        tensor: Arc::new(effective),
        base_point,
        grid,
        tol,
    };
    Ok(match solve(&problem)? {
        Outcome::Solution(solution) => LiftOutcome::Solution(LiftSolution {
            solution,
            background: background.clone(),
        }),
        Outcome::NonExistence(w) => LiftOutcome::NonExistence(w),
        Outcome::Indeterminate(w) => LiftOutcome::Indeterminate(w),
    })
}

#[cfg(test)]
mod tests;
