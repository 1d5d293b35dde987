//! Adaptive Simpson quadrature with Richardson correction.
//!
//! Used for the line integrals that reconstruct a conformal factor from its
//! logarithmic gradient field, and for the anchored antiderivatives of
//! single-variable generators. Tolerances are absolute; the default across
//! the crate is 1e-10 with a maximum recursion depth of 40.

use crate::error::{Error, Result};
use crate::real::Real;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_DEPTH: u32 = 40;

struct Interval<T> {
    a: T,
    m: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
}

fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) * (fa + T::of(4.0) * fm + fb) / T::of(6.0)
}

fn refine<T: Real, F>(f: &F, iv: Interval<T>, tol: T, depth: u32) -> Result<T>
where
    F: Fn(T) -> Result<T>,
{
    let half = T::of(0.5);
    let lm = half * (iv.a + iv.m);
    let rm = half * (iv.m + iv.b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = simpson(iv.a, iv.m, iv.fa, flm, iv.fm);
    let right = simpson(iv.m, iv.b, iv.fm, frm, iv.fb);
    let both = left + right;
    let err = both - iv.whole;
    let fifteen = T::of(15.0);
    if err.abs() <= fifteen * tol {
        return Ok(both + err / fifteen);
    }
    if depth == 0 {
        return Err(Error::QuadratureFailure {
            tol: tol.to_f64_lossy(),
            best: (err / fifteen).abs().to_f64_lossy(),
        });
    }
    let l = refine(
        f,
        Interval {
            a: iv.a,
            m: lm,
            b: iv.m,
            fa: iv.fa,
            fm: flm,
            fb: iv.fm,
            whole: left,
        },
        half * tol,
        depth - 1,
    )?;
    let r = refine(
        f,
        Interval {
            a: iv.m,
            m: rm,
            b: iv.b,
            fa: iv.fm,
            fm: frm,
            fb: iv.fb,
            whole: right,
        },
        half * tol,
        depth - 1,
    )?;
    Ok(l + r)
}

/// Integrate `f` over `[a, b]` (orientation respected) to absolute
/// tolerance `tol`.
pub fn adaptive_simpson<T: Real, F>(f: F, a: T, b: T, tol: T) -> Result<T>
where
    F: Fn(T) -> Result<T>,
{
    if a == b {
        return Ok(T::zero());
    }
    let m = T::of(0.5) * (a + b);
    let fa = f(a)?;
    let fm = f(m)?;
    let fb = f(b)?;
    let whole = simpson(a, b, fa, fm, fb);
    refine(
        &f,
        Interval {
            a,
            m,
            b,
            fa,
            fm,
            fb,
            whole,
        },
        tol,
        MAX_DEPTH,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = adaptive_simpson(|x: f64| Ok(x * x), 0.0, 3.0, 1e-12).unwrap();
        assert!((v - 9.0).abs() < 1e-11);
    }

    #[test]
    fn orientation() {
        let v = adaptive_simpson(|x: f64| Ok(x), 2.0, 0.0, 1e-12).unwrap();
        assert!((v + 2.0).abs() < 1e-11);
    }

    #[test]
    fn empty_interval() {
        let v = adaptive_simpson(|_: f64| Ok(1.0), 1.5, 1.5, 1e-12).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn transcendental() {
        let v = adaptive_simpson(|x: f64| Ok(x.sinh()), 0.0, 2.0, 1e-12).unwrap();
        assert!((v - (2.0f64.cosh() - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn error_propagates() {
        let r = adaptive_simpson(
            |x: f64| {
                if x > 0.9 {
                    Err(crate::error::Error::ScaleUndetermined)
                } else {
                    Ok(x)
                }
            },
            0.0,
            1.0,
            1e-10,
        );
        assert!(r.is_err());
    }
}
