//! Probability measures and potentials sampled on a [`Grid`].

use crate::error::{Error, Result};
use crate::grid::{Grid, Point};

const MASS_TOL: f64 = 1e-12;

/// Nonnegative node masses summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    grid: Grid,
    mass: Vec<f64>,
}

impl GridMeasure {
    /// Validates `mass >= 0` and `sum == 1` within 1e-12.
    pub fn new(grid: Grid, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != grid.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} masses for {} nodes",
                mass.len(),
                grid.len()
            )));
        }
        if let Some(j) = mass.iter().position(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidMeasure(format!(
                "node {j} has mass {}",
                mass[j]
            )));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!("total mass {total} != 1")));
        }
        Ok(GridMeasure { grid, mass })
    }

    /// Rescales nonnegative weights to unit mass.
    pub fn normalized(grid: Grid, mut weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::InvalidMeasure("length mismatch".into()));
        }
        if let Some(j) = weights.iter().position(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidMeasure(format!(
                "node {j} has weight {}",
                weights[j]
            )));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::EmptyInput);
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(GridMeasure {
            grid,
            mass: weights,
        })
    }

    /// Unchecked constructor for mass vectors produced by mass-conserving
    /// operations on existing measures.
    pub(crate) fn from_raw(grid: Grid, mass: Vec<f64>) -> Self {
        debug_assert_eq!(mass.len(), grid.len());
        GridMeasure { grid, mass }
    }

    pub fn dirac(grid: Grid, node: usize) -> Self {
        let mut mass = vec![0.0; grid.len()];
        mass[node] = 1.0;
        GridMeasure { grid, mass }
    }

    pub fn uniform(grid: Grid) -> Self {
        let n = grid.len();
        GridMeasure {
            grid,
            mass: vec![1.0 / n as f64; n],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// ∫ f dμ as a plain dot product.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.mass.len());
        self.mass.iter().zip(f).map(|(m, v)| m * v).sum()
    }

    pub fn mean(&self) -> Point {
        let mut acc = [0.0; 2];
        for (j, m) in self.mass.iter().enumerate() {
            let p = self.grid.point(j);
            acc[0] += m * p[0];
            acc[1] += m * p[1];
        }
        acc
    }

    /// Variance summed over axes.
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.mass
            .iter()
            .enumerate()
            .map(|(j, m)| {
                let p = self.grid.point(j);
                m * ((p[0] - mu[0]).powi(2) + (p[1] - mu[1]).powi(2))
            })
            .sum()
    }

    pub fn l1_distance(&self, other: &GridMeasure) -> f64 {
        l1(&self.mass, &other.mass)
    }

    /// Nodes with positive mass form one 4-connected region.
    pub fn has_connected_support(&self) -> bool {
        let n = self.grid.len();
        let Some(start) = self.mass.iter().position(|&m| m > 0.0) else {
            return false;
        };
        let [n0, n1] = [
            self.grid.resolution()[0],
            self.grid.len() / self.grid.resolution()[0],
        ];
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 0;
        while let Some(j) = stack.pop() {
            count += 1;
            let [i0, i1] = self.grid.multi_index(j);
            let mut push = |k: usize| {
                if !seen[k] && self.mass[k] > 0.0 {
                    seen[k] = true;
                    stack.push(k);
                }
            };
            if i0 > 0 {
                push(j - 1);
            }
            if i0 + 1 < n0 {
                push(j + 1);
            }
            if i1 > 0 {
                push(j - n0);
            }
            if i1 + 1 < n1 {
                push(j + n0);
            }
        }
        count == self.mass.iter().filter(|&&m| m > 0.0).count()
    }

    /// Largest mass held by any `k` nodes.
    pub fn top_k_mass(&self, k: usize) -> f64 {
        let mut sorted = self.mass.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        sorted.iter().take(k).sum()
    }

    /// Mass within `radius` nodes (Chebyshev distance in index space) of `p`.
    pub fn mass_near(&self, p: &Point, radius: usize) -> f64 {
        let s = self.grid.spacing();
        let mut total = 0.0;
        for (j, m) in self.mass.iter().enumerate() {
            let q = self.grid.point(j);
            let ok =
                (0..self.grid.dim()).all(|k| ((q[k] - p[k]) / s[k]).abs() <= radius as f64 + 1e-9);
            if ok {
                total += m;
            }
        }
        total
    }
}

/// Isotropic Gaussian fixture: node masses ∝ exp(-|x - mean|² / (2 sd²)).
pub fn gaussian_on_grid(grid: Grid, mean: &[f64], sd: f64) -> Result<GridMeasure> {
    if mean.len() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}-dimensional mean", grid.dim()),
            got: format!("{} coordinates", mean.len()),
        });
    }
    let mut m = [0.0; 2];
    m[..mean.len()].copy_from_slice(mean);
    if !grid.contains(&m) {
        return Err(Error::MeanOutsideDomain {
            mean: mean.to_vec(),
        });
    }
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(Error::InvalidMeasure(format!(
            "standard deviation {sd} must be positive"
        )));
    }
    let inv = 1.0 / (2.0 * sd * sd);
    let weights = (0..grid.len())
        .map(|j| {
            let p = grid.point(j);
            (-((p[0] - m[0]).powi(2) + (p[1] - m[1]).powi(2)) * inv).exp()
        })
        .collect();
    GridMeasure::normalized(grid, weights)
}

/// Finite real values on the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    grid: Grid,
    value: Vec<f64>,
}

impl Potential {
    pub fn new(grid: Grid, value: Vec<f64>) -> Result<Self> {
        if value.len() != grid.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} values for {} nodes",
                value.len(),
                grid.len()
            )));
        }
        if let Some(j) = value.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMeasure(format!(
                "potential not finite at node {j}"
            )));
        }
        Ok(Potential { grid, value })
    }

    pub(crate) fn from_raw(grid: Grid, value: Vec<f64>) -> Self {
        debug_assert_eq!(value.len(), grid.len());
        Potential { grid, value }
    }

    pub fn zeros(grid: Grid) -> Self {
        Potential {
            value: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn constant(grid: Grid, k: f64) -> Self {
        Potential {
            value: vec![k; grid.len()],
            grid,
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> f64) -> Self {
        let value = (0..grid.len()).map(|j| f(grid.point(j))).collect();
        Potential { grid, value }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.value
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.value
    }

    pub fn into_values(self) -> Vec<f64> {
        self.value
    }

    pub fn is_finite(&self) -> bool {
        self.value.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, a: f64) -> Potential {
        Potential::from_raw(self.grid, self.value.iter().map(|v| a * v).collect())
    }

    pub fn add_scaled(&mut self, a: f64, other: &Potential) {
        for (v, w) in self.value.iter_mut().zip(&other.value) {
            *v += a * w;
        }
    }

    pub fn shifted(&self, k: f64) -> Potential {
        Potential::from_raw(self.grid, self.value.iter().map(|v| v + k).collect())
    }

    pub fn max_abs_diff(&self, other: &Potential) -> f64 {
        self.value
            .iter()
            .zip(&other.value)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.value.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.value.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}
