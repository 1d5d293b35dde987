//! Verification-first workbench for the prescribed Riemannian curvature
//! problem under conformal change of metric: given a diagonal tensor T,
//! decide whether a metric ḡ = g/φ² with curvature tensor T ⊙ g exists,
//! reconstruct φ when it does, and check every result against an
//! independent Christoffel-symbol oracle.
//!
//! The numerical core is generic over the scalar type through [`Real`]
//! (`f32` or `f64`); the scenario and report layer is fixed at `f64`.
//!
//! ```
//! use curvbench_core::curvature::ConformalMetric;
//! use curvbench_core::exprlang::parse;
//!
//! // ḡ = δ/u² with u = 1 + |x|²: a round sphere of sectional curvature 4
//! let metric = ConformalMetric::euclidean(parse::<f64>("1 + x1^2 + x2^2 + x3^2", 3)?);
//! let p = [0.3, -0.2, 0.7];
//! let k = metric.sectional(&p, 0, 1)?;
//! assert!((k - 4.0).abs() < 1e-9);
//! // the closed conformal formulas agree with the Christoffel oracle
//! assert!(metric.weyl_residual(&p)? < 1e-12);
//! # Ok::<(), curvbench_core::Error>(())
//! ```

pub mod catalog;
pub mod curvature;
pub mod error;
pub mod exprlang;
pub mod field;
pub mod grid;
pub mod jets;
pub mod prescribed;
pub mod quad;
pub mod real;
pub mod report;
pub mod scenario;
pub mod tensors;

pub use error::{Error, Result};
pub use real::Real;

/// Concrete `f64` aliases for the core types.
pub type Expr64 = exprlang::ScalarExpr<f64>;
pub type Jet64 = jets::Jet2<f64>;
pub type SymBilinear64 = tensors::SymBilinear<f64>;
pub type CurvTensor64 = tensors::CurvTensor<f64>;
pub type Metric64 = curvature::ConformalMetric<f64>;
pub type Grid64 = grid::Grid<f64>;
pub type Tensor64 = prescribed::DiagonalTensorField<f64>;
