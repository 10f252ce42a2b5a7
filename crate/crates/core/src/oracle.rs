//! Exact ground truth at desk scale.
//!
//! * [`ot_1d_exact`]: monotone (north-west corner) coupling, exact for costs
//!   convex in `x - y`.
//! * [`ot_small_exact`]: discrete Kantorovich problem for at most 64 atoms
//!   per side, solved by successive shortest paths.
//! * [`signed_barycenter_1d`]: the affine quantile formula `Q̄ = Σ aᵢ Qᵢ`.
//! * [`kantorovich_dual_estimate`]: preconditioned dual ascent for a single
//!   pair on any grid, reporting its own residual.
//! * [`primal_descent_1d`]: a heuristic for one-positive-weight problems
//!   outside the monotone regime. It carries no optimality guarantee.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::cost::CostModel;
use crate::ctransform::{c_concavify, ctransform};
use crate::error::{Error, Result};
use crate::grid::{Grid, Point};
use crate::measure::{GridMeasure, Potential};
use crate::precond::NeumannSolver;
use crate::problem::Problem;
use crate::transport::{
    extract_map, measure_from_quantile, pushforward_with_clamp, quantile_of, quantile_of_cells,
    MapMode, QuantileFn, Splat,
};

/// Atom limit of [`ot_small_exact`].
pub const SMALL_ATOM_LIMIT: usize = 64;

pub type Atom = (Point, f64);

/// A coupling between two atom lists, stored sparsely as
/// `(source, target, mass)` triples.
#[derive(Debug, Clone)]
pub struct DiscretePlan {
    pub source: Vec<Atom>,
    pub target: Vec<Atom>,
    pub flow: Vec<(usize, usize, f64)>,
    pub cost_value: f64,
}

impl DiscretePlan {
    /// Largest deviation of a row or column sum from its atom mass.
    pub fn marginal_error(&self) -> f64 {
        let mut rows: Vec<f64> = self.source.iter().map(|a| -a.1).collect();
        let mut cols: Vec<f64> = self.target.iter().map(|a| -a.1).collect();
        for &(i, j, m) in &self.flow {
            rows[i] += m;
            cols[j] += m;
        }
        rows.iter()
            .chain(&cols)
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn cost_with(&self, cost: &CostModel) -> f64 {
        self.flow
            .iter()
            .map(|&(i, j, m)| m * cost.eval(&self.source[i].0, &self.target[j].0))
            .sum()
    }
}

/// Nonzero atoms of a grid measure.
pub fn atoms_of(mu: &GridMeasure) -> Vec<Atom> {
    mu.mass()
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > 0.0)
        .map(|(j, m)| (mu.grid().point(j), *m))
        .collect()
}

/// Monotone coupling of two 1D atom lists (first coordinate), exact for
/// costs that are convex functions of `x - y`.
pub fn ot_1d_atoms(source: &[Atom], target: &[Atom], cost: &CostModel) -> DiscretePlan {
    let mut src = source.to_vec();
    let mut tgt = target.to_vec();
    src.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]));
    tgt.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]));
    let mut flow = Vec::with_capacity(src.len() + tgt.len());
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (
        src.first().map_or(0.0, |a| a.1),
        tgt.first().map_or(0.0, |a| a.1),
    );
    while i < src.len() && j < tgt.len() {
        let f = ra.min(rb);
        if f > 0.0 {
            flow.push((i, j, f));
        }
        ra -= f;
        rb -= f;
        if ra <= rb {
            i += 1;
            if i < src.len() {
                ra = src[i].1;
            }
        } else {
            j += 1;
            if j < tgt.len() {
                rb = tgt[j].1;
            }
        }
    }
    let mut plan = DiscretePlan {
        source: src,
        target: tgt,
        flow,
        cost_value: 0.0,
    };
    plan.cost_value = plan.cost_with(cost);
    plan
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

/// `K_c(μ, ν)` in 1D by co-monotone matching.
pub fn ot_1d_exact(
    mu: &GridMeasure,
    nu: &GridMeasure,
    cost: &CostModel,
) -> Result<(f64, DiscretePlan)> {
    require_1d(mu.grid())?;
    require_1d(nu.grid())?;
    let plan = ot_1d_atoms(&atoms_of(mu), &atoms_of(nu), cost);
    Ok((plan.cost_value, plan))
}

/// 2-Wasserstein distance between two 1D grid measures.
pub fn w2_1d(mu: &GridMeasure, nu: &GridMeasure) -> Result<f64> {
    let (k, _) = ot_1d_exact(mu, nu, &CostModel::Quadratic)?;
    Ok((2.0 * k).max(0.0).sqrt())
}

/// Exact discrete optimal transport between two small atom lists.
pub fn ot_small_exact(
    source: &[Atom],
    target: &[Atom],
    cost: &CostModel,
) -> Result<(f64, DiscretePlan)> {
    for count in [source.len(), target.len()] {
        if count > SMALL_ATOM_LIMIT {
            return Err(Error::TooManyAtoms {
                count,
                limit: SMALL_ATOM_LIMIT,
            });
        }
    }
    if source.is_empty() || target.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (n, m) = (source.len(), target.len());
    let c: Vec<f64> = source
        .iter()
        .flat_map(|s| target.iter().map(move |t| cost.eval(&s.0, &t.0)))
        .collect();
    let mut x = vec![0.0; n * m];
    let mut supply: Vec<f64> = source.iter().map(|a| a.1).collect();
    let mut demand: Vec<f64> = target.iter().map(|a| a.1).collect();
    let mut pot_s = vec![0.0; n];
    let mut pot_t = vec![0.0; m];
    let scale = supply.iter().sum::<f64>().max(1.0);
    let tol = 1e-15 * scale;
    // Dijkstra over sources then targets with Johnson potentials; the
    // residual graph holds every forward edge and a reverse edge per
    // positive flow.
    loop {
        if !supply.iter().any(|s| *s > tol) || !demand.iter().any(|d| *d > tol) {
            break;
        }
        let inf = f64::INFINITY;
        let mut dist = vec![inf; n + m];
        let mut pred = vec![usize::MAX; n + m];
        let mut done = vec![false; n + m];
        for i in 0..n {
            if supply[i] > tol {
                dist[i] = 0.0;
            }
        }
        loop {
            let mut u = usize::MAX;
            let mut best = inf;
            for (v, d) in dist.iter().enumerate() {
                if !done[v] && *d < best {
                    best = *d;
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < n {
                for j in 0..m {
                    let rc = (c[u * m + j] + pot_s[u] - pot_t[j]).max(0.0);
                    if best + rc < dist[n + j] {
                        dist[n + j] = best + rc;
                        pred[n + j] = u;
                    }
                }
            } else {
                let j = u - n;
                for i in 0..n {
                    if x[i * m + j] > tol {
                        let rc = (-c[i * m + j] + pot_t[j] - pot_s[i]).max(0.0);
                        if best + rc < dist[i] {
                            dist[i] = best + rc;
                            pred[i] = u;
                        }
                    }
                }
            }
        }
        let sink = (0..m)
            .filter(|&j| demand[j] > tol)
            .min_by(|&a, &b| dist[n + a].total_cmp(&dist[n + b]));
        let Some(sink) = sink else { break };
        let reach = dist[n + sink];
        if !reach.is_finite() {
            break;
        }
        for i in 0..n {
            pot_s[i] += dist[i].min(reach);
        }
        for j in 0..m {
            pot_t[j] += dist[n + j].min(reach);
        }
        // walk back to find the bottleneck
        let mut delta = demand[sink];
        let mut v = n + sink;
        loop {
            let i = pred[v];
            let p = pred[i];
            if p == usize::MAX {
                delta = delta.min(supply[i]);
                break;
            }
            delta = delta.min(x[i * m + (p - n)]);
            v = p;
        }
        let mut v = n + sink;
        loop {
            let i = pred[v];
            x[i * m + (v - n)] += delta;
            let p = pred[i];
            if p == usize::MAX {
                supply[i] -= delta;
                break;
            }
            x[i * m + (p - n)] -= delta;
            v = p;
        }
        demand[sink] -= delta;
    }
    let mut flow = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if x[i * m + j] > tol {
                flow.push((i, j, x[i * m + j]));
            }
        }
    }
    let mut plan = DiscretePlan {
        source: source.to_vec(),
        target: target.to_vec(),
        flow,
        cost_value: 0.0,
    };
    plan.cost_value = plan.cost_with(cost);
    Ok((plan.cost_value, plan))
}

/// `Φ⁻¹(t)` for the standard normal.
pub fn normal_quantile(t: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(t)
}

/// Quantile function of `N(m, s²)` sampled at the midpoints of `cells`
/// equal slices of `[0, 1]`, as a step function.
pub fn gaussian_quantile(m: f64, s: f64, cells: usize) -> QuantileFn {
    let knots: Vec<f64> = (0..=cells).map(|k| k as f64 / cells as f64).collect();
    let ends = (0..cells)
        .map(|k| {
            let v = m + s * normal_quantile((k as f64 + 0.5) / cells as f64);
            [v, v]
        })
        .collect();
    QuantileFn::new(knots, ends).expect("valid knots")
}

/// `∫₀¹ c(Q₁(t), Q₂(t)) dt` for two quantile functions.
pub fn quantile_cost(q1: &QuantileFn, q2: &QuantileFn, cost: &CostModel) -> f64 {
    let diff = QuantileFn::affine_combination(&[(1.0, q1), (-1.0, q2)]);
    let mut total = 0.0;
    for (t0, t1, d0, d1) in diff.segments() {
        let dt = t1 - t0;
        if dt <= 0.0 {
            continue;
        }
        total += match cost {
            CostModel::Quadratic => 0.5 * dt * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0,
            CostModel::PPower(p) => {
                // 5-point Gauss-Legendre on [0, 1]
                const NODES: [f64; 5] = [
                    0.046910077030668,
                    0.230765344947158,
                    0.5,
                    0.769234655052842,
                    0.953089922969332,
                ];
                const WEIGHTS: [f64; 5] = [
                    0.118463442528095,
                    0.239314335249683,
                    0.284444444444444,
                    0.239314335249683,
                    0.118463442528095,
                ];
                dt * NODES
                    .iter()
                    .zip(WEIGHTS)
                    .map(|(s, w)| w * (d0 + (d1 - d0) * s).abs().powf(*p))
                    .sum::<f64>()
            }
        };
    }
    total
}

/// Output of the 1D quantile formula.
#[derive(Debug, Clone)]
pub struct SignedBarycenter1d {
    /// Nondecreasing quantile of `measure`.
    pub quantile: QuantileFn,
    /// `Σ aᵢ Qᵢ` before any monotone correction.
    pub raw_quantile: QuantileFn,
    pub measure: GridMeasure,
    /// True when `Σ aᵢ Qᵢ` is nondecreasing up to one grid cell.
    pub monotone: bool,
    pub max_drop: f64,
    pub clamped: bool,
}

/// Signed barycenter in 1D for the quadratic cost via `Q̄ = Σ aᵢ Qᵢ`.
///
/// Each `Qᵢ` is the quantile of the cell-spread density of `μᵢ`, so
/// combinations of smooth marginals stay smooth. Monotonicity is judged up
/// to a drop of one grid cell; within that the running maximum is returned.
/// When the flag is down the measure is still the pushforward of uniform
/// mass through `Σ aᵢ Qᵢ`, but it is not claimed to be optimal.
pub fn signed_barycenter_1d(problem: &Problem) -> Result<SignedBarycenter1d> {
    let grid = *problem.grid();
    require_1d(&grid)?;
    if !problem.cost().is_quadratic() {
        return Err(Error::NotQuadraticCost);
    }
    let qs = problem
        .marginals()
        .iter()
        .map(quantile_of_cells)
        .collect::<Result<Vec<_>>>()?;
    let terms: Vec<(f64, &QuantileFn)> = qs
        .iter()
        .enumerate()
        .map(|(i, q)| (problem.a(i), q))
        .collect();
    let raw = QuantileFn::affine_combination(&terms);
    let max_drop = raw.max_drop();
    let monotone = max_drop <= grid.h();
    let (measure, clamped) = measure_from_quantile(&raw, grid)?;
    let quantile = if monotone {
        raw.running_max()
    } else {
        quantile_of(&measure)?
    };
    Ok(SignedBarycenter1d {
        quantile,
        raw_quantile: raw,
        measure,
        monotone,
        max_drop,
        clamped,
    })
}

/// `Σ aᵢ ∫ c(Qᵢ, Q) dt` with the cell quantiles of the marginals.
pub fn quantile_primal(problem: &Problem, q: &QuantileFn) -> Result<f64> {
    let mut total = 0.0;
    for (i, mu) in problem.marginals().iter().enumerate() {
        total += problem.a(i) * quantile_cost(&quantile_of_cells(mu)?, q, &problem.cost());
    }
    Ok(total)
}

/// Single-pair dual estimate.
#[derive(Debug, Clone)]
pub struct DualEstimate {
    /// `⟨f^c, μ⟩ + ⟨f, ν⟩`, a lower bound on the discrete `K_c`.
    pub value: f64,
    /// `‖ν - T_{f^c}#μ‖₁` at the returned potential.
    pub residual: f64,
    pub iterations: usize,
    pub potential: Potential,
}

/// Preconditioned dual ascent on `f ↦ ⟨f^c, μ⟩ + ⟨f, ν⟩`, whose first
/// variation is `ν - T_{f^c}#μ`. Runs until the residual reaches `tol` or
/// `max_iters` sweeps pass, and returns the best estimate either way.
pub fn kantorovich_dual_estimate(
    mu: &GridMeasure,
    nu: &GridMeasure,
    cost: &CostModel,
    tol: f64,
    max_iters: usize,
) -> Result<DualEstimate> {
    let grid = *mu.grid();
    if nu.grid() != &grid {
        return Err(Error::InvalidProblem("measures must share one grid".into()));
    }
    let solver = NeumannSolver::new(grid);
    let vol = grid.cell_volume();
    let density_scale = mu
        .mass()
        .iter()
        .chain(nu.mass())
        .fold(0.0f64, |a, b| a.max(*b))
        / vol;
    let mut sigma = 1.0 / density_scale;
    let mut f = Potential::zeros(grid);
    let mut best: Option<DualEstimate> = None;
    let mut prev_residual = f64::INFINITY;
    for it in 0..=max_iters {
        let tr = ctransform(&f, cost);
        let map = extract_map(&tr, cost, MapMode::Gradient)?;
        let (rho, _) = pushforward_with_clamp(mu, &map, Splat::Multilinear);
        let residual = nu.l1_distance(&rho);
        let value = mu.integrate(tr.transformed.values()) + nu.integrate(f.values());
        if best.as_ref().is_none_or(|b| residual < b.residual) {
            best = Some(DualEstimate {
                value,
                residual,
                iterations: it,
                potential: f.clone(),
            });
        }
        if residual <= tol || it == max_iters {
            break;
        }
        if residual > prev_residual * 1.5 {
            sigma *= 0.5;
        }
        prev_residual = residual;
        let r: Vec<f64> = nu
            .mass()
            .iter()
            .zip(rho.mass())
            .map(|(a, b)| (a - b) / vol)
            .collect();
        let step = solver.solve(&r, 1e-3);
        for (v, s) in f.values_mut().iter_mut().zip(&step) {
            *v += sigma * s;
        }
        f = c_concavify(&f, cost);
    }
    Ok(best.expect("at least one sweep"))
}

/// As [`kantorovich_dual_estimate`], failing with `MaxIters` when the
/// residual does not reach `tol`.
pub fn kantorovich_dual_2d(
    mu: &GridMeasure,
    nu: &GridMeasure,
    cost: &CostModel,
    tol: f64,
) -> Result<DualEstimate> {
    let est = kantorovich_dual_estimate(mu, nu, cost, tol, 4000)?;
    if est.residual > tol {
        return Err(Error::MaxIters {
            iterations: est.iterations,
            residual: est.residual,
        });
    }
    Ok(est)
}

/// First variation of `ν ↦ K_c(μ, ν)` on the nodes of a 1D grid, from the
/// monotone map `X = Q_μ ∘ F_ν` and `∂_y ψ(y) = ∂_y c(X(y), y)`.
pub fn first_variation_1d(
    mu: &GridMeasure,
    nu: &GridMeasure,
    cost: &CostModel,
) -> Result<Vec<f64>> {
    let grid = *nu.grid();
    require_1d(&grid)?;
    let q = quantile_of(mu)?;
    let mut cum = 0.0;
    let slopes: Vec<f64> = nu
        .mass()
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let level = (cum + 0.5 * m).clamp(0.0, 1.0);
            cum += m;
            let y = grid.point(j);
            let x = [q.eval(level), 0.0];
            cost.grad_y(&x, &y)[0]
        })
        .collect();
    let h = grid.spacing()[0];
    let mut psi = vec![0.0; grid.len()];
    for j in 1..grid.len() {
        psi[j] = psi[j - 1] + 0.5 * h * (slopes[j - 1] + slopes[j]);
    }
    Ok(psi)
}

/// Result of [`primal_descent_1d`].
#[derive(Debug, Clone)]
pub struct PrimalDescent {
    pub measure: GridMeasure,
    pub primal_value: f64,
    pub history: Vec<f64>,
}

/// Mirror descent on the simplex for `B(ν) = Σ aᵢ K_c(μᵢ, ν)` in 1D,
/// started from the anchor marginal. Heuristic: it keeps the best iterate
/// and certifies nothing.
pub fn primal_descent_1d(problem: &Problem, iters: usize, step: f64) -> Result<PrimalDescent> {
    let grid = *problem.grid();
    require_1d(&grid)?;
    let cost = problem.cost();
    let eval = |nu: &GridMeasure| -> Result<f64> {
        let mut b = 0.0;
        for (i, mu) in problem.marginals().iter().enumerate() {
            b += problem.a(i) * ot_1d_exact(mu, nu, &cost)?.0;
        }
        Ok(b)
    };
    let mut nu = problem.marginal(problem.anchor()).clone();
    let mut value = eval(&nu)?;
    let mut best = (nu.clone(), value);
    let mut history = vec![value];
    let mut eta = step;
    for _ in 0..iters {
        let mut g = vec![0.0; grid.len()];
        for (i, mu) in problem.marginals().iter().enumerate() {
            let psi = first_variation_1d(mu, &nu, &cost)?;
            for (gj, p) in g.iter_mut().zip(psi) {
                *gj += problem.a(i) * p;
            }
        }
        let gmin = g.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = nu
            .mass()
            .iter()
            .zip(&g)
            .map(|(m, gj)| m * (-eta * (gj - gmin)).exp())
            .collect();
        let candidate = GridMeasure::normalized(grid, w)?;
        let cv = eval(&candidate)?;
        if cv < value {
            nu = candidate;
            value = cv;
            eta *= 1.2;
            if value < best.1 {
                best = (nu.clone(), value);
            }
        } else {
            eta *= 0.5;
        }
        history.push(value);
    }
    Ok(PrimalDescent {
        measure: best.0,
        primal_value: best.1,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::gaussian_on_grid;

    fn line_atoms(pts: &[(f64, f64)]) -> Vec<Atom> {
        pts.iter().map(|&(x, m)| ([x, 0.0], m)).collect()
    }

    #[test]
    fn dirac_pair() {
        let g = Grid::line(0.0, 1.0, 11).unwrap();
        let (k, plan) = ot_1d_exact(
            &GridMeasure::dirac(g, 2),
            &GridMeasure::dirac(g, 8),
            &CostModel::Quadratic,
        )
        .unwrap();
        assert!((k - 0.18).abs() < 1e-15);
        assert_eq!(plan.flow.len(), 1);
    }

    #[test]
    fn identical_measures_cost_nothing() {
        let g = Grid::line(0.0, 1.0, 64).unwrap();
        let mu = gaussian_on_grid(g, &[0.4], 0.1).unwrap();
        assert_eq!(ot_1d_exact(&mu, &mu, &CostModel::Quadratic).unwrap().0, 0.0);
        assert_eq!(w2_1d(&mu, &mu).unwrap(), 0.0);
    }

    #[test]
    fn two_by_two_monotone_beats_crossing() {
        let a = line_atoms(&[(0.0, 0.5), (0.5, 0.5)]);
        let b = line_atoms(&[(0.25, 0.5), (0.75, 0.5)]);
        let plan = ot_1d_atoms(&a, &b, &CostModel::Quadratic);
        // monotone pairing: two moves of 0.25 with half the mass each
        assert!((plan.cost_value - 0.03125).abs() < 1e-15);
        let crossing = 0.5 * 0.5 * 0.75f64.powi(2) + 0.5 * 0.5 * 0.25f64.powi(2);
        assert!(plan.cost_value < crossing);
        let (k, small) = ot_small_exact(&a, &b, &CostModel::Quadratic).unwrap();
        assert!((k - 0.03125).abs() < 1e-15);
        assert!(small.marginal_error() < 1e-12);
    }

    #[test]
    fn permutation_case() {
        let a = line_atoms(&[(0.0, 0.5), (1.0, 0.5)]);
        let (k, plan) = ot_small_exact(&a, &a, &CostModel::Quadratic).unwrap();
        assert_eq!(k, 0.0);
        assert!(plan.flow.iter().all(|&(i, j, _)| i == j));
    }

    #[test]
    fn small_exact_rejects_large_inputs() {
        let a: Vec<Atom> = (0..65).map(|k| ([k as f64, 0.0], 1.0 / 65.0)).collect();
        assert!(matches!(
            ot_small_exact(&a, &a, &CostModel::Quadratic),
            Err(Error::TooManyAtoms {
                count: 65,
                limit: 64
            })
        ));
    }

    #[test]
    fn normal_quantile_values() {
        assert!(normal_quantile(0.5).abs() < 1e-12);
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-9);
        assert!((normal_quantile(0.001) + 3.090232306167813).abs() < 1e-9);
    }

    #[test]
    fn quantile_cost_matches_gaussian_shift() {
        let q1 = gaussian_quantile(0.5, 0.05, 400);
        let q2 = gaussian_quantile(0.4, 0.05, 400);
        assert!((quantile_cost(&q1, &q2, &CostModel::Quadratic) - 0.005).abs() < 1e-12);
    }

    #[test]
    fn extrapolated_gaussian() {
        let g = Grid::line(0.0, 1.0, 256).unwrap();
        let mus = vec![
            gaussian_on_grid(g, &[0.5], 0.05).unwrap(),
            gaussian_on_grid(g, &[0.4], 0.05).unwrap(),
        ];
        let p = Problem::new(&[2.0, -1.0], mus, CostModel::Quadratic).unwrap();
        let out = signed_barycenter_1d(&p).unwrap();
        assert!(out.monotone);
        let target = gaussian_on_grid(g, &[0.6], 0.05).unwrap();
        assert!(w2_1d(&out.measure, &target).unwrap() <= 2.0 * g.h());
    }

    #[test]
    fn dirac_collapse() {
        let g = Grid::line(0.0, 1.0, 256).unwrap();
        let mus = vec![
            gaussian_on_grid(g, &[0.5], 0.05).unwrap(),
            gaussian_on_grid(g, &[0.5], 0.10).unwrap(),
        ];
        let p = Problem::new(&[2.0, -1.0], mus, CostModel::Quadratic).unwrap();
        let out = signed_barycenter_1d(&p).unwrap();
        assert!(out.monotone, "drop {}", out.max_drop);
        assert!(out.measure.mass_near(&[0.5, 0.0], 3) >= 0.95);
    }

    #[test]
    fn dual_estimate_on_a_shift() {
        let g = Grid::line(0.0, 1.0, 128).unwrap();
        let mu = gaussian_on_grid(g, &[0.4], 0.06).unwrap();
        let nu = gaussian_on_grid(g, &[0.6], 0.06).unwrap();
        let est = kantorovich_dual_estimate(&mu, &nu, &CostModel::Quadratic, 1e-4, 3000).unwrap();
        let exact = ot_1d_exact(&mu, &nu, &CostModel::Quadratic).unwrap().0;
        assert!(
            (est.value - exact).abs() < 4.0 * g.h(),
            "{} vs {exact}, residual {}",
            est.value,
            est.residual
        );
        assert!(est.value <= exact + 1e-12);
    }

    #[test]
    fn descent_does_not_increase_the_primal() {
        let g = Grid::line(0.0, 1.0, 64).unwrap();
        let mus = vec![
            gaussian_on_grid(g, &[0.5], 0.05).unwrap(),
            gaussian_on_grid(g, &[0.45], 0.12).unwrap(),
        ];
        let p = Problem::new(&[2.0, -1.0], mus, CostModel::Quadratic).unwrap();
        let out = primal_descent_1d(&p, 30, 5.0).unwrap();
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }
}
