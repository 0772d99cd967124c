use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, to_f64, Real};

/// Uniform sampling of a quadrature axis, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct QuadratureGrid<T> {
    x_min: T,
    x_max: T,
    n_points: usize,
}

pub const MIN_POINTS: usize = 16;

impl<T: Real> QuadratureGrid<T> {
    pub fn new(x_min: T, x_max: T, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if x_min >= x_max {
            return Err(Error::InvalidGrid(format!(
                "x_min ({x_min}) must be below x_max ({x_max})"
            )));
        }
        if n_points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_POINTS} points, got {n_points}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_points,
        })
    }

    /// `[-half_width, half_width]` with `n_points` samples.
    pub fn symmetric(half_width: T, n_points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_points)
    }

    /// The default `[-8, 8]` grid with 512 points.
    pub fn standard() -> Self {
        Self::new(lit(-8.0), lit(8.0), 512).expect("default grid is valid")
    }

    pub fn x_min(&self) -> T {
        self.x_min
    }

    pub fn x_max(&self) -> T {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> T {
        (self.x_max - self.x_min) / from_usize(self.n_points - 1)
    }

    pub fn point(&self, k: usize) -> T {
        self.x_min + from_usize::<T>(k) * self.spacing()
    }

    pub fn points(&self) -> Vec<T> {
        let h = self.spacing();
        (0..self.n_points)
            .map(|k| self.x_min + from_usize::<T>(k) * h)
            .collect()
    }

    /// Fractional index of `x`; integral values sit on nodes.
    pub fn fractional_index(&self, x: T) -> T {
        (x - self.x_min) / self.spacing()
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    /// Index of the node equal to `x` to within `1e-9` of a spacing.
    pub fn node_index(&self, x: T) -> Option<usize> {
        let f = self.fractional_index(x);
        let r = f.round();
        if (f - r).abs() < lit(1e-9) && r >= T::zero() && r <= from_usize(self.n_points - 1) {
            r.to_usize()
        } else {
            None
        }
    }

    /// Equality of sampling up to rounding.
    pub fn matches(&self, other: &Self) -> bool {
        let tol = self.spacing() * lit(1e-9);
        self.n_points == other.n_points
            && (self.x_min - other.x_min).abs() <= tol
            && (self.x_max - other.x_max).abs() <= tol
    }

    pub(crate) fn require_match(&self, other: &Self, context: &str) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{context}: [{}, {}]x{} vs [{}, {}]x{}",
                to_f64(self.x_min),
                to_f64(self.x_max),
                self.n_points,
                to_f64(other.x_min),
                to_f64(other.x_max),
                other.n_points
            )))
        }
    }

    pub fn cast<U: Real>(&self) -> QuadratureGrid<U> {
        QuadratureGrid {
            x_min: lit(to_f64(self.x_min)),
            x_max: lit(to_f64(self.x_max)),
            n_points: self.n_points,
        }
    }
}

impl<T: Real> Default for QuadratureGrid<T> {
    fn default() -> Self {
        Self::standard()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(QuadratureGrid::new(1.0_f64, 1.0, 64).is_err());
        assert!(QuadratureGrid::new(2.0_f64, 1.0, 64).is_err());
        assert!(QuadratureGrid::new(-1.0_f64, 1.0, 8).is_err());
        assert!(QuadratureGrid::new(f64::NEG_INFINITY, 1.0, 64).is_err());
    }

    #[test]
    fn spacing_and_nodes() {
        let g = QuadratureGrid::<f64>::standard();
        assert_eq!(g.len(), 512);
        assert!((g.spacing() - 16.0 / 511.0).abs() < 1e-15);
        assert!((g.point(511) - 8.0).abs() < 1e-12);
        assert_eq!(g.node_index(g.point(17)), Some(17));
        assert_eq!(g.node_index(g.point(17) + 0.3 * g.spacing()), None);
        assert!(g.matches(&QuadratureGrid::symmetric(8.0, 512).unwrap()));
    }
}
