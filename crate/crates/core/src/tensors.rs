//! Pointwise algebra of symmetric bilinear forms and algebraic curvature
//! tensors, including the Kulkarni-Nomizu product
//!
//! ```text
//! (A ⊙ B)_{ijkl} = A_ik B_jl + A_jl B_ik − A_il B_jk − A_jk B_il
//! ```
//!
//! with no 1/2 factor. Curvature tensors are stored densely over all n^4
//! slots so that the symmetry validator can actually observe a broken
//! invariant; the product writes each canonical component once and mirrors
//! it with signs, which makes the pair and antisymmetry families exact in
//! floating point.

use crate::error::{Error, Result};
use crate::real::Real;

/// Symmetric (0,2) tensor at a point, stored as a full n x n matrix with a
/// symmetric setter.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBilinear<T> {
    n: usize,
    entries: Vec<T>,
}

impl<T: Real> SymBilinear<T> {
    pub fn zero(n: usize) -> Self {
        SymBilinear {
            n,
            entries: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn diagonal(values: &[T]) -> Self {
        let mut m = Self::zero(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn scaled_identity(n: usize, c: T) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.set(i, i, c);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.n + j]
    }

    /// Writes both (i,j) and (j,i).
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.entries[i * self.n + j] = v;
        self.entries[j * self.n + i] = v;
    }

    pub fn add(&self, other: &SymBilinear<T>) -> SymBilinear<T> {
        debug_assert_eq!(self.n, other.n);
        SymBilinear {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &SymBilinear<T>) -> SymBilinear<T> {
        debug_assert_eq!(self.n, other.n);
        SymBilinear {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, c: T) -> SymBilinear<T> {
        SymBilinear {
            n: self.n,
            entries: self.entries.iter().map(|&a| c * a).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, &a| acc.max(a.abs()))
    }
}

/// Algebraic (0,4) curvature tensor at a point, dense over all index slots.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvTensor<T> {
    n: usize,
    comps: Vec<T>,
}

impl<T: Real> CurvTensor<T> {
    pub fn zero(n: usize) -> Self {
        CurvTensor {
            n,
            comps: vec![T::zero(); n * n * n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.n + j) * self.n + k) * self.n + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> T {
        self.comps[self.idx(i, j, k, l)]
    }

    /// Raw write of a single slot, without mirroring into the related
    /// slots. Breaking a symmetry on purpose is the point: the validator
    /// has to be able to see it.
    pub fn set_raw(&mut self, i: usize, j: usize, k: usize, l: usize, v: T) {
        let at = self.idx(i, j, k, l);
        self.comps[at] = v;
    }

    /// Fills the whole tensor from a component function. Each slot is
    /// evaluated independently (no symmetry is assumed or imposed).
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize, usize) -> T) -> Self {
        let mut t = Self::zero(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let at = t.idx(i, j, k, l);
                        t.comps[at] = f(i, j, k, l);
                    }
                }
            }
        }
        t
    }

    pub fn sub(&self, other: &CurvTensor<T>) -> Result<CurvTensor<T>> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(CurvTensor {
            n: self.n,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }

    pub fn add(&self, other: &CurvTensor<T>) -> Result<CurvTensor<T>> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(CurvTensor {
            n: self.n,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(&a, &b)| a + b)
                .collect(),
        })
    }

    pub fn scale(&self, c: T) -> CurvTensor<T> {
        CurvTensor {
            n: self.n,
            comps: self.comps.iter().map(|&a| c * a).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.comps
            .iter()
            .fold(T::zero(), |acc, &a| acc.max(a.abs()))
    }
}

/// Max over all slots of |R1 - R2|.
pub fn tensor_max_norm<T: Real>(r: &CurvTensor<T>) -> T {
    r.max_abs()
}

pub fn tensor_difference<T: Real>(r1: &CurvTensor<T>, r2: &CurvTensor<T>) -> Result<CurvTensor<T>> {
    r1.sub(r2)
}

/// Kulkarni-Nomizu product of two symmetric bilinear forms.
///
/// Each canonical component (i<j, k<l, pair(ij) <= pair(kl)) is computed once
/// as `(A_ik B_jl + A_jl B_ik) - (A_il B_jk + A_jk B_il)` and mirrored with
/// signs into the 8 related slots, so antisymmetry, pair symmetry and
/// commutativity in (A, B) hold exactly, not just to rounding.
pub fn kulkarni_nomizu<T: Real>(a: &SymBilinear<T>, b: &SymBilinear<T>) -> Result<CurvTensor<T>> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            got: b.n(),
        });
    }
    let n = a.n();
    let mut r = CurvTensor::zero(n);
    let pair_rank = |i: usize, j: usize| i * n + j;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                for l in (k + 1)..n {
                    if pair_rank(k, l) < pair_rank(i, j) {
                        continue;
                    }
                    let plus = a.get(i, k) * b.get(j, l) + a.get(j, l) * b.get(i, k);
                    let minus = a.get(i, l) * b.get(j, k) + a.get(j, k) * b.get(i, l);
                    let v = plus - minus;
                    r.set_raw(i, j, k, l, v);
                    r.set_raw(j, i, k, l, -v);
                    r.set_raw(i, j, l, k, -v);
                    r.set_raw(j, i, l, k, v);
                    r.set_raw(k, l, i, j, v);
                    r.set_raw(l, k, i, j, -v);
                    r.set_raw(k, l, j, i, -v);
                    r.set_raw(l, k, j, i, v);
                }
            }
        }
    }
    Ok(r)
}

/// Max-norm residuals of the three Riemann symmetry families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryResiduals<T> {
    /// antisymmetry in (i,j) and in (k,l)
    pub antisymmetry: T,
    /// R_{ijkl} = R_{klij}
    pub pair: T,
    /// R_{ijkl} + R_{iklj} + R_{iljk} = 0
    pub bianchi: T,
}

impl<T: Real> SymmetryResiduals<T> {
    pub fn max(&self) -> T {
        self.antisymmetry.max(self.pair).max(self.bianchi)
    }
}

pub fn symmetry_residuals<T: Real>(r: &CurvTensor<T>) -> SymmetryResiduals<T> {
    let n = r.n();
    let mut anti = T::zero();
    let mut pair = T::zero();
    let mut bianchi = T::zero();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = r.get(i, j, k, l);
                    anti = anti.max((v + r.get(j, i, k, l)).abs());
                    anti = anti.max((v + r.get(i, j, l, k)).abs());
                    pair = pair.max((v - r.get(k, l, i, j)).abs());
                    let cyc = v + r.get(i, k, l, j) + r.get(i, l, j, k);
                    bianchi = bianchi.max(cyc.abs());
                }
            }
        }
    }
    SymmetryResiduals {
        antisymmetry: anti,
        pair,
        bianchi,
    }
}

/// True iff all three symmetry families hold within `tol` in max norm.
pub fn validate_symmetries<T: Real>(r: &CurvTensor<T>, tol: T) -> bool {
    assert!(tol >= T::zero());
    symmetry_residuals(r).max() <= tol
}
