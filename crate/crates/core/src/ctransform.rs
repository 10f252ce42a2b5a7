//! Discrete c-transforms `f^c(x) = min_y c(x, y) - f(y)` over grid nodes.
//!
//! The infimum over the continuum is replaced by the minimum over grid
//! nodes; this is the discretization of the problem, not a tolerance. Ties
//! at the minimum go to the lowest node index so pushforwards are
//! reproducible.
//!
//! Both built-in costs are symmetric and the source and target grids are
//! shared, so the same routine transforms functions on either side.

use rayon::prelude::*;

use crate::cost::CostModel;
use crate::grid::Grid;
use crate::measure::Potential;

pub mod laws;

/// A transformed potential with, for every node, the index of a node
/// attaining the minimum.
#[derive(Debug, Clone)]
pub struct TransformResult {
    pub transformed: Potential,
    pub argmin: Vec<usize>,
}

/// Exact discrete transform by scanning every node pair.
pub fn ctransform_brute(f: &Potential, cost: &CostModel) -> TransformResult {
    ctransform_brute_scaled(f, cost, 1.0)
}

type PairCost = dyn Fn(&[f64; 2], &[f64; 2]) -> f64 + Sync;

/// `min_y scale·c(x, y) - f(y)` by brute force.
pub fn ctransform_brute_scaled(f: &Potential, cost: &CostModel, scale: f64) -> TransformResult {
    let grid = *f.grid();
    let pts = grid.points();
    let fv = f.values();
    let eval: Box<PairCost> = match *cost {
        CostModel::Quadratic => Box::new(move |x, y| {
            let d0 = x[0] - y[0];
            let d1 = x[1] - y[1];
            scale * (0.5 * (d0 * d0 + d1 * d1))
        }),
        c => Box::new(move |x, y| scale * c.eval(x, y)),
    };
    let (value, argmin): (Vec<f64>, Vec<usize>) = pts
        .par_iter()
        .map(|x| {
            let mut best = f64::INFINITY;
            let mut arg = 0;
            for (k, y) in pts.iter().enumerate() {
                let v = eval(x, y) - fv[k];
                if v < best {
                    best = v;
                    arg = k;
                }
            }
            (best, arg)
        })
        .unzip();
    TransformResult {
        transformed: Potential::from_raw(grid, value),
        argmin,
    }
}

/// Lower envelope of the parabolas `(x - z_k)²/2 + g_k`, evaluated at
/// every `z_j`. Returns the index of the minimizing parabola per node.
fn parabola_envelope(z: &[f64], g: &[f64], arg: &mut [usize]) {
    let n = z.len();
    let mut v = vec![0usize; n];
    let mut bounds = vec![0.0f64; n + 1];
    let key = |k: usize| 2.0 * g[k] + z[k] * z[k];
    let mut top = 0;
    bounds[0] = f64::NEG_INFINITY;
    bounds[1] = f64::INFINITY;
    for q in 1..n {
        let mut s = (key(q) - key(v[top])) / (2.0 * (z[q] - z[v[top]]));
        // bounds[0] = -inf stops the pop loop
        while s <= bounds[top] {
            top -= 1;
            s = (key(q) - key(v[top])) / (2.0 * (z[q] - z[v[top]]));
        }
        top += 1;
        v[top] = q;
        bounds[top] = s;
        bounds[top + 1] = f64::INFINITY;
    }
    let mut k = 0;
    for (j, &x) in z.iter().enumerate() {
        while bounds[k + 1] < x {
            k += 1;
        }
        arg[j] = v[k];
    }
}

/// Linear-time transform for `c(x, y) = |x - y|²/2`.
///
/// Uses the lower envelope of parabolas along each axis; in 2D the
/// quadratic splits into one pass per axis. Values are recomputed from the
/// recovered argmin as `c(x, y*) - f(y*)`.
pub fn ctransform_fast_quadratic(f: &Potential) -> TransformResult {
    let grid = *f.grid();
    let fv = f.values();
    let n0 = grid.resolution()[0];
    let z0 = grid.axis_coords(0);
    let mut argmin = vec![0usize; grid.len()];
    if grid.dim() == 1 {
        let g: Vec<f64> = fv.iter().map(|v| -v).collect();
        parabola_envelope(&z0, &g, &mut argmin);
    } else {
        let n1 = grid.resolution()[1];
        let z1 = grid.axis_coords(1);
        // pass along axis 1 for each fixed axis-0 column
        let mut inner = vec![0.0; grid.len()];
        let mut inner_arg = vec![0usize; grid.len()];
        let mut col = vec![0.0; n1];
        let mut arg = vec![0usize; n1];
        for i0 in 0..n0 {
            for (i1, c) in col.iter_mut().enumerate() {
                *c = -fv[grid.index(i0, i1)];
            }
            parabola_envelope(&z1, &col, &mut arg);
            for j1 in 0..n1 {
                let k1 = arg[j1];
                let d = z1[j1] - z1[k1];
                let idx = grid.index(i0, j1);
                inner[idx] = 0.5 * d * d - fv[grid.index(i0, k1)];
                inner_arg[idx] = k1;
            }
        }
        let mut row = vec![0.0; n0];
        let mut arg0 = vec![0usize; n0];
        for j1 in 0..n1 {
            for (i0, r) in row.iter_mut().enumerate() {
                *r = inner[grid.index(i0, j1)];
            }
            parabola_envelope(&z0, &row, &mut arg0);
            for j0 in 0..n0 {
                let k0 = arg0[j0];
                let k1 = inner_arg[grid.index(k0, j1)];
                argmin[grid.index(j0, j1)] = grid.index(k0, k1);
            }
        }
    }
    let value = recompute(&grid, fv, &argmin, &CostModel::Quadratic);
    TransformResult {
        transformed: Potential::from_raw(grid, value),
        argmin,
    }
}

fn recompute(grid: &Grid, fv: &[f64], argmin: &[usize], cost: &CostModel) -> Vec<f64> {
    argmin
        .iter()
        .enumerate()
        .map(|(j, &k)| cost.eval(&grid.point(j), &grid.point(k)) - fv[k])
        .collect()
}

/// Transform with the fastest exact route for `cost`.
pub fn ctransform(f: &Potential, cost: &CostModel) -> TransformResult {
    match cost {
        CostModel::Quadratic => ctransform_fast_quadratic(f),
        _ => ctransform_brute(f, cost),
    }
}

/// `f^{cc}`: the smallest c-concave function above `f` on the grid.
pub fn c_concavify(f: &Potential, cost: &CostModel) -> Potential {
    let once = ctransform(f, cost).transformed;
    ctransform(&once, cost).transformed
}
