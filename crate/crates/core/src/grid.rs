//! Regular node-centered lattices on a box in one or two dimensions.
//!
//! Nodes are indexed row-major with axis 0 fastest: node `j` sits at
//! `(j % n0, j / n0)`. One-dimensional grids carry a dummy second axis of
//! resolution 1 so points can always be stored as `[f64; 2]`.

use crate::error::{Error, Result};

/// A point in the box. The second coordinate is zero on 1D grids.
pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    lower: [f64; 2],
    upper: [f64; 2],
    resolution: [usize; 2],
    spacing: [f64; 2],
}

impl Grid {
    pub fn new(lower: &[f64], upper: &[f64], resolution: &[usize]) -> Result<Self> {
        let dim = lower.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension {dim} not in {{1, 2}}"
            )));
        }
        if upper.len() != dim || resolution.len() != dim {
            return Err(Error::InvalidGrid(
                "lower, upper and resolution must have equal length".into(),
            ));
        }
        let mut g = Grid {
            dim,
            lower: [0.0; 2],
            upper: [0.0; 2],
            resolution: [1, 1],
            spacing: [1.0, 1.0],
        };
        for k in 0..dim {
            if !(lower[k].is_finite() && upper[k].is_finite()) {
                return Err(Error::InvalidGrid("bounds must be finite".into()));
            }
            if upper[k] <= lower[k] {
                return Err(Error::InvalidGrid(format!(
                    "axis {k}: upper {} must exceed lower {}",
                    upper[k], lower[k]
                )));
            }
            if resolution[k] < 2 {
                return Err(Error::InvalidGrid(format!(
                    "axis {k}: resolution must be >= 2"
                )));
            }
            g.lower[k] = lower[k];
            g.upper[k] = upper[k];
            g.resolution[k] = resolution[k];
            g.spacing[k] = (upper[k] - lower[k]) / (resolution[k] - 1) as f64;
        }
        let nodes = g.resolution[0].checked_mul(g.resolution[1]);
        if nodes.is_none_or(|n| n > 1 << 26) {
            return Err(Error::InvalidGrid("too many nodes".into()));
        }
        Ok(g)
    }

    pub fn line(lower: f64, upper: f64, n: usize) -> Result<Self> {
        Self::new(&[lower], &[upper], &[n])
    }

    pub fn square(lower: f64, upper: f64, n: usize) -> Result<Self> {
        Self::new(&[lower, lower], &[upper, upper], &[n, n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower[..self.dim]
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper[..self.dim]
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution[..self.dim]
    }

    /// Node counts per axis with a trailing 1 for 1D grids.
    pub fn shape(&self) -> [usize; 2] {
        self.resolution
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    /// Smallest node spacing over all axes.
    pub fn h(&self) -> f64 {
        self.spacing().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Volume of one interior cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim)
            .map(|k| (self.upper[k] - self.lower[k]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn len(&self) -> usize {
        self.resolution[0] * self.resolution[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i0: usize, i1: usize) -> usize {
        i0 + self.resolution[0] * i1
    }

    #[inline]
    pub fn multi_index(&self, j: usize) -> [usize; 2] {
        [j % self.resolution[0], j / self.resolution[0]]
    }

    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if axis >= self.dim {
            return 0.0;
        }
        if i + 1 == self.resolution[axis] {
            // avoid rounding past the upper bound
            self.upper[axis]
        } else {
            self.lower[axis] + i as f64 * self.spacing[axis]
        }
    }

    #[inline]
    pub fn point(&self, j: usize) -> Point {
        let [i0, i1] = self.multi_index(j);
        [self.coord(0, i0), self.coord(1, i1)]
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.len()).map(|j| self.point(j)).collect()
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.resolution[axis])
            .map(|i| self.coord(axis, i))
            .collect()
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim).all(|k| p[k] >= self.lower[k] && p[k] <= self.upper[k])
    }

    /// Clamps a point into the closed box; returns whether it moved.
    pub fn clamp(&self, p: &mut Point) -> bool {
        let mut moved = false;
        for (k, v) in p.iter_mut().enumerate().take(self.dim) {
            let c = v.clamp(self.lower[k], self.upper[k]);
            if c != *v {
                moved = true;
                *v = c;
            }
        }
        moved
    }

    /// Index of the node nearest to `p` (ties go to the lower node).
    pub fn nearest(&self, p: &Point) -> usize {
        let mut idx = [0usize; 2];
        for (k, slot) in idx.iter_mut().enumerate().take(self.dim) {
            let s = ((p[k] - self.lower[k]) / self.spacing[k])
                .clamp(0.0, (self.resolution[k] - 1) as f64);
            let r = s.round();
            // round-half-down keeps ties on the lower node
            *slot = if (s - s.floor() - 0.5).abs() < 1e-12 {
                s.floor()
            } else {
                r
            } as usize;
        }
        self.index(idx[0], idx[1])
    }

    /// Snaps `p` to a node if it lies within half a cell of one on every axis.
    pub fn snap(&self, p: &Point) -> Option<usize> {
        for (k, v) in p.iter().enumerate().take(self.dim) {
            let s = (v - self.lower[k]) / self.spacing[k];
            if !(s.is_finite() && s >= -0.5 && s <= (self.resolution[k] - 1) as f64 + 0.5) {
                return None;
            }
        }
        Some(self.nearest(p))
    }

    /// Trapezoidal quadrature weight of node `j`: the cell volume, halved
    /// once per axis on which the node sits on the boundary.
    pub fn quadrature_weight(&self, j: usize) -> f64 {
        let mi = self.multi_index(j);
        (0..self.dim)
            .map(|k| {
                let edge = mi[k] == 0 || mi[k] + 1 == self.resolution[k];
                if edge {
                    0.5 * self.spacing[k]
                } else {
                    self.spacing[k]
                }
            })
            .product()
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }
}
