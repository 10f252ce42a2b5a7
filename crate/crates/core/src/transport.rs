//! Induced maps `T_{f^c}`, pushforwards of grid measures, and 1D quantile
//! functions.
//!
//! Two map flavours exist. [`MapMode::Argmin`] sends each node to the node
//! attaining the discrete c-transform, which keeps discrete identities exact.
//! [`MapMode::Gradient`] differentiates `f^c` by finite differences and
//! inverts the twist, giving targets that move continuously with `f`; paired
//! with [`Splat::Multilinear`] the pushforward is then a continuous function
//! of the potential, which is what the dual solver needs.
//!
//! Gradient targets that leave the box are clamped to it and counted.
//! [`pushforward`] refuses to return a measure when more than 1% of the mass
//! was clamped.

use crate::cost::CostModel;
use crate::ctransform::TransformResult;
use crate::error::{Error, Result};
use crate::grid::{Grid, Point};
use crate::measure::{GridMeasure, Potential};

/// Largest clamped mass fraction tolerated by [`pushforward`].
pub const CLAMP_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapMode {
    Argmin,
    Gradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splat {
    NearestNode,
    Multilinear,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Nodes(Vec<usize>),
    Points(Vec<Point>),
}

/// Image of every source node under an induced map.
#[derive(Debug, Clone)]
pub struct TransportMap {
    grid: Grid,
    targets: Targets,
    clamped: Vec<bool>,
}

impl TransportMap {
    pub fn identity(grid: Grid) -> Self {
        TransportMap {
            grid,
            targets: Targets::Nodes((0..grid.len()).collect()),
            clamped: vec![false; grid.len()],
        }
    }

    /// A map given by explicit target points; points outside the box are
    /// clamped and marked.
    pub fn from_points(grid: Grid, mut points: Vec<Point>) -> Self {
        let clamped = points.iter_mut().map(|p| grid.clamp(p)).collect();
        TransportMap {
            grid,
            targets: Targets::Points(points),
            clamped,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    pub fn target_point(&self, j: usize) -> Point {
        match &self.targets {
            Targets::Nodes(t) => self.grid.point(t[j]),
            Targets::Points(t) => t[j],
        }
    }

    pub fn clamped(&self) -> &[bool] {
        &self.clamped
    }

    pub fn clamped_count(&self) -> usize {
        self.clamped.iter().filter(|c| **c).count()
    }

    /// Fraction of `mu`'s mass sitting on clamped source nodes.
    pub fn clamped_fraction(&self, mu: &GridMeasure) -> f64 {
        let lost: f64 = mu
            .mass()
            .iter()
            .zip(&self.clamped)
            .filter(|(_, c)| **c)
            .map(|(m, _)| m)
            .sum();
        lost / mu.total()
    }
}

/// Finite-difference gradient of `f` at node `j`: centered in the interior,
/// one-sided on the boundary.
pub fn node_gradient(f: &Potential, j: usize) -> Point {
    let grid = f.grid();
    let v = f.values();
    let mi = grid.multi_index(j);
    let mut g = [0.0; 2];
    for (axis, slot) in g.iter_mut().enumerate().take(grid.dim()) {
        let n = grid.resolution()[axis];
        let stride = if axis == 0 { 1 } else { grid.resolution()[0] };
        let h = grid.spacing()[axis];
        let i = mi[axis];
        *slot = if i == 0 {
            (v[j + stride] - v[j]) / h
        } else if i + 1 == n {
            (v[j] - v[j - stride]) / h
        } else {
            (v[j + stride] - v[j - stride]) / (2.0 * h)
        };
    }
    g
}

/// Builds `T_{f^c}` from a transform result.
pub fn extract_map(tr: &TransformResult, cost: &CostModel, mode: MapMode) -> Result<TransportMap> {
    let grid = *tr.transformed.grid();
    match mode {
        MapMode::Argmin => Ok(TransportMap {
            grid,
            targets: Targets::Nodes(tr.argmin.clone()),
            clamped: vec![false; grid.len()],
        }),
        MapMode::Gradient => {
            let mut points = Vec::with_capacity(grid.len());
            let mut clamped = Vec::with_capacity(grid.len());
            for j in 0..grid.len() {
                let x = grid.point(j);
                let v = node_gradient(&tr.transformed, j);
                let mut y = cost.twist_inverse_x(&x, &v);
                if !(y[0].is_finite() && y[1].is_finite()) {
                    return Err(Error::NotInvertible { x, y });
                }
                clamped.push(grid.clamp(&mut y));
                points.push(y);
            }
            Ok(TransportMap {
                grid,
                targets: Targets::Points(points),
                clamped,
            })
        }
    }
}

/// Adds `mass` at `p` to `out`, split over the surrounding nodes with
/// multilinear weights. `p` must lie in the box.
pub fn splat_point(grid: &Grid, out: &mut [f64], p: &Point, mass: f64) {
    let mut base = [0usize; 2];
    let mut frac = [0.0f64; 2];
    for k in 0..grid.dim() {
        let n = grid.resolution()[k];
        let s = ((p[k] - grid.lower()[k]) / grid.spacing()[k]).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        base[k] = i;
        frac[k] = s - i as f64;
    }
    if grid.dim() == 1 {
        let j = base[0];
        out[j] += mass * (1.0 - frac[0]);
        out[j + 1] += mass * frac[0];
    } else {
        let j = grid.index(base[0], base[1]);
        let n0 = grid.resolution()[0];
        let (t0, t1) = (frac[0], frac[1]);
        out[j] += mass * (1.0 - t0) * (1.0 - t1);
        out[j + 1] += mass * t0 * (1.0 - t1);
        out[j + n0] += mass * (1.0 - t0) * t1;
        out[j + n0 + 1] += mass * t0 * t1;
    }
}

/// `T#μ` together with the clamped mass fraction, without the domain check.
pub fn pushforward_with_clamp(
    mu: &GridMeasure,
    map: &TransportMap,
    splat: Splat,
) -> (GridMeasure, f64) {
    let grid = *mu.grid();
    let mut out = vec![0.0; grid.len()];
    match (&map.targets, splat) {
        (Targets::Nodes(t), _) => {
            for (m, &k) in mu.mass().iter().zip(t) {
                out[k] += m;
            }
        }
        (Targets::Points(t), Splat::NearestNode) => {
            for (m, p) in mu.mass().iter().zip(t) {
                out[grid.nearest(p)] += m;
            }
        }
        (Targets::Points(t), Splat::Multilinear) => {
            for (m, p) in mu.mass().iter().zip(t) {
                if *m != 0.0 {
                    splat_point(&grid, &mut out, p, *m);
                }
            }
        }
    }
    (GridMeasure::from_raw(grid, out), map.clamped_fraction(mu))
}

/// `T#μ`. Fails with `DomainTooSmall` when more than 1% of the mass was
/// clamped at the box boundary.
pub fn pushforward(mu: &GridMeasure, map: &TransportMap, splat: Splat) -> Result<GridMeasure> {
    let (out, fraction) = pushforward_with_clamp(mu, map, splat);
    if fraction > CLAMP_LIMIT {
        return Err(Error::DomainTooSmall { fraction });
    }
    Ok(out)
}

/// A piecewise-linear nondecreasing function on `[0, 1]`.
///
/// Segment `k` covers `[knots[k], knots[k+1]]` and runs linearly from
/// `ends[k][0]` to `ends[k][1]`; step functions have equal ends. Between
/// segments the function is left-continuous. Affine combinations built by
/// [`QuantileFn::affine_combination`] need not be monotone; check with
/// [`QuantileFn::max_drop`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileFn {
    knots: Vec<f64>,
    ends: Vec<[f64; 2]>,
}

impl QuantileFn {
    pub fn new(knots: Vec<f64>, ends: Vec<[f64; 2]>) -> Result<Self> {
        if knots.len() != ends.len() + 1 || ends.is_empty() {
            return Err(Error::InvalidMeasure(
                "quantile needs one more knot than segments".into(),
            ));
        }
        if knots[0] != 0.0 || *knots.last().unwrap() != 1.0 || knots.windows(2).any(|w| w[1] < w[0])
        {
            return Err(Error::InvalidMeasure(
                "quantile knots must rise from 0 to 1".into(),
            ));
        }
        Ok(QuantileFn { knots, ends })
    }

    pub fn constant(v: f64) -> Self {
        QuantileFn {
            knots: vec![0.0, 1.0],
            ends: vec![[v, v]],
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn ends(&self) -> &[[f64; 2]] {
        &self.ends
    }

    /// Segments as `(t0, t1, v0, v1)`.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.ends
            .iter()
            .enumerate()
            .map(|(k, e)| (self.knots[k], self.knots[k + 1], e[0], e[1]))
    }

    fn segment_at(&self, t: f64) -> usize {
        let k = self.knots[1..].partition_point(|b| *b < t);
        k.min(self.ends.len() - 1)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = self.segment_at(t);
        let (t0, t1) = (self.knots[k], self.knots[k + 1]);
        let [v0, v1] = self.ends[k];
        if t1 > t0 {
            v0 + (v1 - v0) * ((t - t0) / (t1 - t0)).clamp(0.0, 1.0)
        } else {
            v1
        }
    }

    /// Values at both ends of `[s0, s1]` using the linear piece that covers
    /// the interval's midpoint.
    fn limits_on(&self, s0: f64, s1: f64) -> (f64, f64) {
        let k = self.segment_at(0.5 * (s0 + s1));
        let (t0, t1) = (self.knots[k], self.knots[k + 1]);
        let [v0, v1] = self.ends[k];
        if t1 > t0 {
            let slope = (v1 - v0) / (t1 - t0);
            (v0 + slope * (s0 - t0), v0 + slope * (s1 - t0))
        } else {
            (v1, v1)
        }
    }

    /// `Σ cᵢ Qᵢ` on the union of all knots.
    pub fn affine_combination(terms: &[(f64, &QuantileFn)]) -> QuantileFn {
        let mut knots: Vec<f64> = terms
            .iter()
            .flat_map(|(_, q)| q.knots.iter().copied())
            .collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let mut ends = Vec::with_capacity(knots.len() - 1);
        for w in knots.windows(2) {
            let mut e = [0.0, 0.0];
            for (c, q) in terms {
                let (a, b) = q.limits_on(w[0], w[1]);
                e[0] += c * a;
                e[1] += c * b;
            }
            ends.push(e);
        }
        QuantileFn { knots, ends }
    }

    /// Largest drop below the running maximum; 0 for nondecreasing functions.
    pub fn max_drop(&self) -> f64 {
        let mut run = f64::NEG_INFINITY;
        let mut drop: f64 = 0.0;
        for e in &self.ends {
            for v in e {
                run = run.max(*v);
                drop = drop.max(run - v);
            }
        }
        drop
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.max_drop() == 0.0
    }

    /// The running maximum, a nondecreasing function within
    /// [`max_drop`](Self::max_drop) of `self`.
    pub fn running_max(&self) -> QuantileFn {
        let mut run = f64::NEG_INFINITY;
        let ends = self
            .ends
            .iter()
            .map(|e| {
                let a = run.max(e[0]);
                run = a.max(e[1]);
                [a, run]
            })
            .collect();
        QuantileFn {
            knots: self.knots.clone(),
            ends,
        }
    }
}

fn require_1d(grid: &Grid) -> Result<()> {
    if grid.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: "1-dimensional grid".into(),
            got: format!("{}D", grid.dim()),
        });
    }
    Ok(())
}

/// Generalized inverse `t ↦ inf{x : F(x) >= t}` of the atomic CDF.
pub fn quantile_of(mu: &GridMeasure) -> Result<QuantileFn> {
    require_1d(mu.grid())?;
    let total = mu.total();
    let mut knots = vec![0.0];
    let mut ends = Vec::new();
    let mut cum = 0.0;
    for (j, m) in mu.mass().iter().enumerate() {
        if *m > 0.0 {
            cum += m;
            let x = mu.grid().coord(0, j);
            knots.push(cum / total);
            ends.push([x, x]);
        }
    }
    if ends.is_empty() {
        return Err(Error::EmptyInput);
    }
    *knots.last_mut().unwrap() = 1.0;
    Ok(QuantileFn { knots, ends })
}

/// Quantile of the piecewise-constant density obtained by spreading each
/// node's mass uniformly over its cell (clipped to the box).
pub fn quantile_of_cells(mu: &GridMeasure) -> Result<QuantileFn> {
    let grid = mu.grid();
    require_1d(grid)?;
    let total = mu.total();
    let half = 0.5 * grid.spacing()[0];
    let (lo, hi) = (grid.lower()[0], grid.upper()[0]);
    let mut knots = vec![0.0];
    let mut ends = Vec::new();
    let mut cum = 0.0;
    for (j, m) in mu.mass().iter().enumerate() {
        if *m > 0.0 {
            cum += m;
            let x = grid.coord(0, j);
            knots.push(cum / total);
            ends.push([(x - half).max(lo), (x + half).min(hi)]);
        }
    }
    if ends.is_empty() {
        return Err(Error::EmptyInput);
    }
    *knots.last_mut().unwrap() = 1.0;
    Ok(QuantileFn { knots, ends })
}

/// Pushforward of uniform mass on `[0, 1]` through `q`, splatted
/// multilinearly; linear pieces are integrated exactly against the hat
/// functions. Returns the measure and whether any value had to be clamped.
pub fn measure_from_quantile(q: &QuantileFn, grid: Grid) -> Result<(GridMeasure, bool)> {
    require_1d(&grid)?;
    let (lo, hi) = (grid.lower()[0], grid.upper()[0]);
    let h = grid.spacing()[0];
    let n = grid.resolution()[0];
    let mut out = vec![0.0; grid.len()];
    let mut clamped = false;
    for (t0, t1, v0, v1) in q.segments() {
        let dt = t1 - t0;
        if dt <= 0.0 {
            continue;
        }
        let (a, b) = if v0 <= v1 { (v0, v1) } else { (v1, v0) };
        if a < lo || b > hi {
            clamped = true;
        }
        if b - a <= 1e-15 * (1.0 + a.abs()) {
            splat_point(&grid, &mut out, &[a.clamp(lo, hi), 0.0], dt);
            continue;
        }
        let density = dt / (b - a);
        // pieces outside the box land on the nearest boundary node
        if a < lo {
            out[0] += density * (lo.min(b) - a);
        }
        if b > hi {
            out[n - 1] += density * (b - hi.max(a));
        }
        let (ca, cb) = (a.max(lo), b.min(hi));
        if cb <= ca {
            continue;
        }
        let first = (((ca - lo) / h).floor() as usize).min(n - 2);
        let last = (((cb - lo) / h).floor() as usize).min(n - 2);
        for i in first..=last {
            let xl = grid.coord(0, i);
            let xr = grid.coord(0, i + 1);
            let u = ca.max(xl);
            let v = cb.min(xr);
            if v <= u {
                continue;
            }
            let m = density * (v - u);
            // hat weights are linear, so their average is the value at the centroid
            let c = 0.5 * (u + v);
            let w = (c - xl) / (xr - xl);
            out[i] += m * (1.0 - w);
            out[i + 1] += m * w;
        }
    }
    let total: f64 = out.iter().sum();
    for v in &mut out {
        *v /= total;
    }
    Ok((GridMeasure::from_raw(grid, out), clamped))
}
