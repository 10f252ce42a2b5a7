//! Translation-invariant ground costs and their twist inverses.

use crate::error::{Error, Result};
use crate::grid::{Grid, Point};

/// Built-in costs. Both depend only on `|x - y|`, are nonnegative and
/// satisfy the twist condition on ℝᵈ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostModel {
    /// `c(x, y) = |x - y|² / 2`
    Quadratic,
    /// `c(x, y) = |x - y|^p`, `p >= 2`
    PPower(f64),
}

impl CostModel {
    /// `|x - y|^p` with the exponent validated. Exponents below 2 lose
    /// second-order smoothness on the diagonal and are rejected.
    pub fn ppower(p: f64) -> Result<Self> {
        if !p.is_finite() || p < 2.0 {
            return Err(Error::InvalidCost(format!(
                "p-power exponent must be finite and >= 2, got {p}"
            )));
        }
        Ok(CostModel::PPower(p))
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, CostModel::Quadratic)
    }

    #[inline]
    pub fn eval(&self, x: &Point, y: &Point) -> f64 {
        let d0 = x[0] - y[0];
        let d1 = x[1] - y[1];
        let r2 = d0 * d0 + d1 * d1;
        match *self {
            CostModel::Quadratic => 0.5 * r2,
            CostModel::PPower(p) => {
                if p == 2.0 {
                    r2
                } else {
                    r2.powf(0.5 * p)
                }
            }
        }
    }

    /// ∇ₓ c(x, y).
    pub fn grad_x(&self, x: &Point, y: &Point) -> Point {
        let d = [x[0] - y[0], x[1] - y[1]];
        match *self {
            CostModel::Quadratic => d,
            CostModel::PPower(p) => {
                let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
                if r == 0.0 {
                    return [0.0, 0.0];
                }
                let s = p * r.powf(p - 2.0);
                [s * d[0], s * d[1]]
            }
        }
    }

    /// ∇ᵧ c(x, y) = -∇ₓ c(x, y) for translation-invariant costs.
    pub fn grad_y(&self, x: &Point, y: &Point) -> Point {
        let g = self.grad_x(x, y);
        [-g[0], -g[1]]
    }

    /// Solves `∇ₓ c(x, y) = v` for `y` in ℝᵈ.
    ///
    /// Quadratic: `y = x - v`. p-power: `x - y` points along `v` with
    /// radius `r` solving `p r^(p-1) = |v|`.
    pub fn twist_inverse_x(&self, x: &Point, v: &Point) -> Point {
        match *self {
            CostModel::Quadratic => [x[0] - v[0], x[1] - v[1]],
            CostModel::PPower(p) => {
                let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
                if norm == 0.0 {
                    return *x;
                }
                let r = (norm / p).powf(1.0 / (p - 1.0));
                [x[0] - r * v[0] / norm, x[1] - r * v[1] / norm]
            }
        }
    }

    /// As [`twist_inverse_x`](Self::twist_inverse_x), failing with
    /// `NotInvertible` when the solution leaves the grid box.
    pub fn twist_inverse_in(&self, grid: &Grid, x: &Point, v: &Point) -> Result<Point> {
        let y = self.twist_inverse_x(x, v);
        if y.iter().all(|c| c.is_finite()) && grid.contains(&y) {
            Ok(y)
        } else {
            Err(Error::NotInvertible { x: *x, y })
        }
    }
}
