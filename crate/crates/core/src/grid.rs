//! Axis-aligned sampling grids.
//!
//! A grid is a cube centered at a point, sampled with an odd number of
//! points per axis so the center is always a sample. Points are enumerated
//! in row-major index order (first axis slowest), and every sweep in the
//! crate assembles its results in that order, which is what makes reports
//! deterministic under concurrency.

use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    center: Vec<T>,
    half_width: T,
    points_per_axis: usize,
}

impl<T: Real> Grid<T> {
    pub fn new(center: Vec<T>, half_width: T, points_per_axis: usize) -> Self {
        assert!(!center.is_empty(), "grid needs at least one axis");
        assert!(half_width > T::zero(), "half_width must be positive");
        assert!(
            points_per_axis >= 3 && points_per_axis % 2 == 1,
            "points_per_axis must be an odd integer >= 3"
        );
        Grid {
            center,
            half_width,
            points_per_axis,
        }
    }

    pub fn n(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[T] {
        &self.center
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Total number of samples, points_per_axis^n.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.n() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sample values along one axis.
    pub fn axis_values(&self, axis: usize) -> Vec<T> {
        let m = self.points_per_axis;
        let step = T::of(2.0) * self.half_width / T::of((m - 1) as f64);
        (0..m)
            .map(|j| self.center[axis] - self.half_width + T::of(j as f64) * step)
            .collect()
    }

    /// The point at a row-major flat index.
    pub fn point(&self, mut flat: usize) -> Vec<T> {
        let n = self.n();
        let m = self.points_per_axis;
        let mut indices = vec![0usize; n];
        for axis in (0..n).rev() {
            indices[axis] = flat % m;
            flat /= m;
        }
        let step = T::of(2.0) * self.half_width / T::of((m - 1) as f64);
        indices
            .iter()
            .enumerate()
            .map(|(axis, &j)| self.center[axis] - self.half_width + T::of(j as f64) * step)
            .collect()
    }

    /// All points, row-major.
    pub fn points(&self) -> Vec<Vec<T>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// The 1-D line through the center along `axis`: the effective sample
    /// set for fields that depend on a single variable.
    pub fn axis_line(&self, axis: usize) -> Vec<Vec<T>> {
        self.axis_values(axis)
            .into_iter()
            .map(|v| {
                let mut p = self.center.clone();
                p[axis] = v;
                p
            })
            .collect()
    }

    pub fn contains(&self, p: &[T]) -> bool {
        p.iter()
            .zip(&self.center)
            .all(|(&x, &c)| (x - c).abs() <= self.half_width + T::epsilon())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_enumeration() {
        let g = Grid::new(vec![0.0f64, 0.0], 1.0, 3);
        assert_eq!(g.len(), 9);
        assert_eq!(g.point(0), vec![-1.0, -1.0]);
        assert_eq!(g.point(1), vec![-1.0, 0.0]);
        assert_eq!(g.point(3), vec![0.0, -1.0]);
        assert_eq!(g.point(8), vec![1.0, 1.0]);
        assert_eq!(g.points().len(), 9);
    }

    #[test]
    fn center_is_a_sample() {
        let g = Grid::new(vec![0.25f64, -1.0, 2.0], 2.0, 9);
        let mid = g.len() / 2;
        assert_eq!(g.point(mid), vec![0.25, -1.0, 2.0]);
    }

    #[test]
    fn axis_line() {
        let g = Grid::new(vec![0.0f64, 0.0, 0.0], 2.0, 9);
        let line = g.axis_line(0);
        assert_eq!(line.len(), 9);
        assert_eq!(line[0], vec![-2.0, 0.0, 0.0]);
        assert_eq!(line[4], vec![0.0, 0.0, 0.0]);
        assert_eq!(line[8], vec![2.0, 0.0, 0.0]);
    }

    #[test]
    #[should_panic]
    fn even_points_rejected() {
        let _ = Grid::new(vec![0.0f64], 1.0, 4);
    }
}
