//! Uniform evaluation grids and trapezoid integration.

use serde::{Deserialize, Serialize};

use crate::error::{ArbError, Result};
use crate::scalar::Scalar;

/// Grid `{0, step, 2 step, ..., max}` where the last point is `max` exactly,
/// even when `max` is not a multiple of `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid<T> {
    pub max: T,
    pub step: T,
}

impl<T: Scalar> UniformGrid<T> {
    pub fn new(max: T, step: T) -> Result<Self> {
        if !(step > T::zero()) || !step.is_finite() {
            return Err(ArbError::invalid(format!("grid step must be > 0, got {step}")));
        }
        if !(max > T::zero()) || !max.is_finite() {
            return Err(ArbError::invalid(format!("grid maximum must be > 0, got {max}")));
        }
        Ok(Self { max, step })
    }

    /// Unit performance grid `[0, 1]`.
    pub fn unit(step: T) -> Result<Self> {
        Self::new(T::one(), step)
    }

    /// Number of full steps strictly below `max`.
    fn interior_steps(&self) -> usize {
        let ratio = (self.max / self.step).as_f64();
        let n = (ratio - 1e-9).ceil();
        n.max(1.0) as usize
    }

    pub fn points(&self) -> Vec<T> {
        let n = self.interior_steps();
        let mut pts: Vec<T> = (0..n).map(|i| T::count(i) * self.step).collect();
        pts.push(self.max);
        pts
    }

    pub fn len(&self) -> usize {
        self.interior_steps() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Points of the uniform grid with spacing `step` that lie in `[0, limit)`,
/// followed by `limit` itself. `limit == 0` yields `[0]`.
pub(crate) fn nodes_up_to<T: Scalar>(limit: T, step: T) -> Vec<T> {
    if limit <= T::zero() {
        return vec![T::zero()];
    }
    UniformGrid { max: limit, step }.points()
}

/// Trapezoid integral of sampled values.
pub(crate) fn trapezoid<T: Scalar>(xs: &[T], ys: &[T]) -> T {
    debug_assert_eq!(xs.len(), ys.len());
    let mut acc = T::zero();
    for i in 1..xs.len() {
        acc = acc + T::half() * (ys[i - 1] + ys[i]) * (xs[i] - xs[i - 1]);
    }
    acc
}

/// Running trapezoid integral; element `i` integrates over `xs[..=i]`.
pub(crate) fn cumulative_trapezoid<T: Scalar>(xs: &[T], ys: &[T]) -> Vec<T> {
    debug_assert_eq!(xs.len(), ys.len());
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = T::zero();
    if !xs.is_empty() {
        out.push(acc);
    }
    for i in 1..xs.len() {
        acc = acc + T::half() * (ys[i - 1] + ys[i]) * (xs[i] - xs[i - 1]);
        out.push(acc);
    }
    out
}

/// Indices of `points` that fall in `[lo, hi]`, with a small absolute slack
/// so that `0.7` matches a grid point computed as `700 * 0.001`.
pub(crate) fn indices_in_range<T: Scalar>(points: &[T], lo: T, hi: T) -> Vec<usize> {
    let eps = T::lit(1e-9);
    points
        .iter()
        .enumerate()
        .filter(|(_, &u)| u >= lo - eps && u <= hi + eps)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_ends_exactly_at_max() {
        let g = UniformGrid::new(1.0_f64, 0.001).unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 1001);
        assert_eq!(pts.len(), g.len());
        assert_eq!(*pts.last().unwrap(), 1.0);
        assert_eq!(pts[0], 0.0);

        let g = UniformGrid::new(0.25_f64, 0.1).unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 4);
        assert_eq!(pts[3], 0.25);
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(UniformGrid::new(1.0_f64, 0.0).is_err());
        assert!(UniformGrid::new(0.0_f64, 0.1).is_err());
        assert!(UniformGrid::new(1.0_f64, f64::NAN).is_err());
    }

    #[test]
    fn trapezoid_is_exact_for_linear_functions() {
        let xs = UniformGrid::new(2.0_f64, 0.3).unwrap().points();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 1.0).collect();
        assert!((trapezoid(&xs, &ys) - 8.0).abs() < 1e-12);
        let cum = cumulative_trapezoid(&xs, &ys);
        assert_eq!(*cum.last().unwrap(), trapezoid(&xs, &ys));
    }

    #[test]
    fn nodes_up_to_zero_is_origin() {
        assert_eq!(nodes_up_to(0.0_f64, 0.1), vec![0.0]);
    }
}
