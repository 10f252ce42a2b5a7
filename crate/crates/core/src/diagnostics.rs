//! Post-hoc checks on a solved instance: primal value and duality gaps,
//! congruence of the potentials, the quadratic-cost saddle criterion, sampled
//! h-convexity, λ-convexity of the anchor potential, and the 1D primal
//! directional derivative and curve convexity checks.
//!
//! Tolerances scale as `max(1e-3, 4h)`: below that the grid discretization
//! dominates. [`diagnose`] runs the curvature-based checks on the
//! [`effective_support`] of ν̄, since potentials are arbitrary where ν̄ has
//! no mass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::CostModel;
use crate::ctransform::ctransform;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::measure::{GridMeasure, Potential};
use crate::oracle::{
    atoms_of, kantorovich_dual_estimate, ot_1d_exact, ot_small_exact, SMALL_ATOM_LIMIT,
};
use crate::problem::Problem;
use crate::solver::{evaluate, full_potentials, SolveResult};
use crate::transport::{
    measure_from_quantile, pushforward_with_clamp, quantile_of, QuantileFn, Splat, TransportMap,
};

/// How `K_c` is evaluated for the primal value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Oracle1D,
    SmallExact,
    DualEstimate2D,
}

impl Engine {
    pub fn default_for(grid: &Grid) -> Engine {
        if grid.dim() == 1 {
            Engine::Oracle1D
        } else {
            Engine::DualEstimate2D
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Engine::Oracle1D => "oracle1d",
            Engine::SmallExact => "smallexact",
            Engine::DualEstimate2D => "dual2d",
        }
    }

    pub fn parse(s: &str) -> Result<Engine> {
        match s {
            "oracle1d" => Ok(Engine::Oracle1D),
            "smallexact" => Ok(Engine::SmallExact),
            "dual2d" => Ok(Engine::DualEstimate2D),
            other => Err(Error::EngineUnavailable(format!(
                "unknown engine {other:?}"
            ))),
        }
    }
}

/// Default pass/fail tolerance on value gaps for `grid`.
pub fn gap_tolerance(grid: &Grid) -> f64 {
    (4.0 * grid.h()).max(1e-3)
}

/// `K_c(μ, ν)` by `engine`, with the dual-estimate residual (0 for exact
/// engines).
pub fn kantorovich(
    mu: &GridMeasure,
    nu: &GridMeasure,
    cost: &CostModel,
    engine: Engine,
) -> Result<(f64, f64)> {
    match engine {
        Engine::Oracle1D => {
            if mu.grid().dim() != 1 {
                return Err(Error::EngineUnavailable("oracle1d needs a 1D grid".into()));
            }
            Ok((ot_1d_exact(mu, nu, cost)?.0, 0.0))
        }
        Engine::SmallExact => {
            let (a, b) = (atoms_of(mu), atoms_of(nu));
            if a.len().max(b.len()) > SMALL_ATOM_LIMIT {
                return Err(Error::EngineUnavailable(format!(
                    "smallexact handles at most {SMALL_ATOM_LIMIT} atoms, got {}",
                    a.len().max(b.len())
                )));
            }
            Ok((ot_small_exact(&a, &b, cost)?.0, 0.0))
        }
        Engine::DualEstimate2D => {
            let est = kantorovich_dual_estimate(mu, nu, cost, 1e-4, 3000)?;
            Ok((est.value, est.residual))
        }
    }
}

/// `B(ν) = Σ aᵢ K_c(μᵢ, ν)`.
pub fn eval_primal(nu: &GridMeasure, problem: &Problem, engine: Engine) -> Result<f64> {
    let mut b = 0.0;
    for (i, mu) in problem.marginals().iter().enumerate() {
        b += problem.a(i) * kantorovich(mu, nu, &problem.cost(), engine)?.0;
    }
    Ok(b)
}

/// `|B(ν̄) - 𝒟(f̄)|`.
pub fn duality_gap(result: &SolveResult, problem: &Problem, engine: Engine) -> Result<f64> {
    Ok((eval_primal(&result.barycenter, problem, engine)? - result.state.dual_value).abs())
}

/// `Σ aᵢ fᵢ` weighted by ν, before and after subtracting its infimum over
/// the support of ν.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CongruenceReport {
    pub raw: f64,
    pub normalized: f64,
    /// Infimum of `Σ aᵢ fᵢ` over the support of ν; the normalization applied.
    pub infimum: f64,
}

/// Congruence residual of an arbitrary potential tuple; `weights[i]`
/// multiplies `potentials[i]`.
pub fn congruence_check(
    potentials: &[Potential],
    weights: &[f64],
    nu: &GridMeasure,
) -> CongruenceReport {
    let n = nu.grid().len();
    let s: Vec<f64> = (0..n)
        .map(|j| {
            potentials
                .iter()
                .zip(weights)
                .map(|(f, a)| a * f.values()[j])
                .sum()
        })
        .collect();
    let infimum = s
        .iter()
        .zip(nu.mass())
        .filter(|(_, m)| **m > 0.0)
        .map(|(v, _)| *v)
        .fold(f64::INFINITY, f64::min);
    let raw = s.iter().zip(nu.mass()).map(|(v, m)| m * v.abs()).sum();
    let normalized = s
        .iter()
        .zip(nu.mass())
        .map(|(v, m)| m * (v - infimum).abs())
        .sum();
    CongruenceReport {
        raw,
        normalized,
        infimum,
    }
}

/// Share of ν̄'s mass left out of the saddle checks in [`diagnose`].
pub const SUPPORT_TRIM: f64 = 1e-4;

/// Smallest set of nodes, taken in decreasing order of mass, that holds at
/// least `1 - trim` of ν's mass.
pub fn effective_support(nu: &GridMeasure, trim: f64) -> Vec<bool> {
    let mass = nu.mass();
    let mut order: Vec<usize> = (0..mass.len()).filter(|&j| mass[j] > 0.0).collect();
    order.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]).then(a.cmp(&b)));
    let target = (1.0 - trim) * nu.total();
    let mut mask = vec![false; mass.len()];
    let mut acc = 0.0;
    for j in order {
        if acc >= target {
            break;
        }
        mask[j] = true;
        acc += mass[j];
    }
    mask
}

/// Second-difference curvature along `(d0, d1)` at node `j`, or `None` if a
/// stencil node falls outside the grid or outside `mask`.
fn curvature(
    f: &[f64],
    grid: &Grid,
    j: usize,
    d: (isize, isize),
    mask: Option<&[bool]>,
) -> Option<f64> {
    let [i0, i1] = grid.multi_index(j);
    let n = grid.shape();
    let fwd = (i0 as isize + d.0, i1 as isize + d.1);
    let back = (i0 as isize - d.0, i1 as isize - d.1);
    for (a, b) in [fwd, back] {
        if a < 0 || b < 0 || a as usize >= n[0] || b as usize >= n[1] {
            return None;
        }
    }
    if let Some(m) = mask {
        let inside = |a: isize, b: isize| m[grid.index(a as usize, b as usize)];
        if !(m[j] && inside(fwd.0, fwd.1) && inside(back.0, back.1)) {
            return None;
        }
    }
    let s = grid.spacing();
    let step2 = (d.0 as f64 * s[0]).powi(2)
        + if grid.dim() == 2 {
            (d.1 as f64 * s[1]).powi(2)
        } else {
            0.0
        };
    let fp = f[grid.index(fwd.0 as usize, fwd.1 as usize)];
    let fm = f[grid.index(back.0 as usize, back.1 as usize)];
    Some((fp + fm - 2.0 * f[j]) / step2)
}

fn directions(grid: &Grid) -> Vec<(isize, isize)> {
    if grid.dim() == 1 {
        vec![(1, 0)]
    } else {
        vec![(1, 0), (0, 1), (1, 1), (1, -1)]
    }
}

/// Minimum second-difference curvature over interior nodes and directions
/// (axes, plus diagonals in 2D). `f(y) = |y|²/2` gives 1.
pub fn lambda_convexity_estimate(f: &Potential) -> f64 {
    lambda_convexity_on(f, None)
}

/// As [`lambda_convexity_estimate`], restricted to stencils inside `mask`.
pub fn lambda_convexity_on(f: &Potential, mask: Option<&[bool]>) -> f64 {
    let grid = f.grid();
    let dirs = directions(grid);
    (0..grid.len())
        .flat_map(|j| {
            dirs.iter()
                .filter_map(move |d| curvature(f.values(), grid, j, *d, mask))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Finite-difference Hessian eigenvalue bounds at interior nodes.
fn hessian_bounds(f: &[f64], grid: &Grid, mask: Option<&[bool]>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..grid.len() {
        let Some(fxx) = curvature(f, grid, j, (1, 0), mask) else {
            continue;
        };
        if grid.dim() == 1 {
            lo = lo.min(fxx);
            hi = hi.max(fxx);
            continue;
        }
        let Some(fyy) = curvature(f, grid, j, (0, 1), mask) else {
            continue;
        };
        if curvature(f, grid, j, (1, 1), mask).is_none()
            || curvature(f, grid, j, (1, -1), mask).is_none()
        {
            continue;
        }
        let [i0, i1] = grid.multi_index(j);
        let s = grid.spacing();
        let at = |a: usize, b: usize| f[grid.index(a, b)];
        let fxy = (at(i0 + 1, i1 + 1) - at(i0 + 1, i1 - 1) - at(i0 - 1, i1 + 1)
            + at(i0 - 1, i1 - 1))
            / (4.0 * s[0] * s[1]);
        let mean = 0.5 * (fxx + fyy);
        let rad = (0.25 * (fxx - fyy).powi(2) + fxy * fxy).sqrt();
        lo = lo.min(mean - rad);
        hi = hi.max(mean + rad);
    }
    (lo, hi)
}

/// Saddle-sufficiency checks.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleReport {
    pub quadratic_applicable: bool,
    /// Minimum curvature of `|y|²/2 - Σ_{I₊∖{1}} aᵢ(|y|²/2 - f̄ᵢ(y))`.
    pub min_second_difference: f64,
    /// `λ_min(Σ aᵢ D²f̄ᵢ) - (Σ_{I₋}|aᵢ| - a₁)`; nonnegative iff the
    /// criterion holds.
    pub hessian_lower_slack: f64,
    /// `Σ aᵢ - λ_max(Σ aᵢ D²f̄ᵢ)`, sums over `I₊∖{1}`.
    pub hessian_upper_slack: f64,
    pub tolerance: f64,
    pub h_samples: usize,
    pub h_sampled_violations: usize,
    /// Smallest value of `h` seen over all samples and nodes.
    pub h_lower_bound: f64,
}

impl SaddleReport {
    /// Whether the quadratic criterion passes (false when not applicable).
    pub fn quadratic_pass(&self) -> bool {
        self.quadratic_applicable && self.min_second_difference >= -self.tolerance
    }
}

/// Convexity of `y ↦ |y|²/2 - Σ_{I₊∖{1}} aᵢ(|y|²/2 - f̄ᵢ(y))` by second
/// differences. `full` holds all `m` potentials in sorted order. The
/// curvature tolerance is `1e-6 / h²`.
pub fn quadratic_saddle_criterion(full: &[Potential], problem: &Problem) -> Result<SaddleReport> {
    quadratic_saddle_criterion_on(full, problem, None)
}

/// As [`quadratic_saddle_criterion`], with every stencil inside `mask`.
pub fn quadratic_saddle_criterion_on(
    full: &[Potential],
    problem: &Problem,
    mask: Option<&[bool]>,
) -> Result<SaddleReport> {
    if !problem.cost().is_quadratic() {
        return Err(Error::NotQuadraticCost);
    }
    let grid = *problem.grid();
    let free_pos = problem.free_positive();
    let sum_pos: f64 = free_pos.iter().map(|&i| problem.a(i)).sum();
    let neg: f64 = problem.weights().negative_mass();
    let a1 = problem.a(problem.anchor());
    let mut combo = vec![0.0; grid.len()];
    for &i in &free_pos {
        for (c, v) in combo.iter_mut().zip(full[i].values()) {
            *c += problem.a(i) * v;
        }
    }
    let phi: Vec<f64> = (0..grid.len())
        .map(|j| {
            let y = grid.point(j);
            let half = 0.5 * (y[0] * y[0] + y[1] * y[1]);
            half - sum_pos * half + combo[j]
        })
        .collect();
    let min_sd = lambda_convexity_on(&Potential::from_raw(grid, phi), mask);
    let (lo, hi) = if free_pos.is_empty() {
        (0.0, 0.0)
    } else {
        hessian_bounds(&combo, &grid, mask)
    };
    Ok(SaddleReport {
        quadratic_applicable: true,
        min_second_difference: min_sd,
        hessian_lower_slack: lo - (neg - a1),
        hessian_upper_slack: sum_pos - hi,
        tolerance: 1e-6 / (grid.h() * grid.h()),
        h_samples: 0,
        h_sampled_violations: 0,
        h_lower_bound: f64::NAN,
    })
}

/// Outcome of [`h_convexity_sample`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HSample {
    pub samples: usize,
    pub checks: usize,
    pub violations: usize,
    pub lower_bound: f64,
}

/// Largest offset, in nodes per axis, of the midpoint pairs tested in 2D.
pub const H_SAMPLE_RADIUS_2D: isize = 6;

/// Midpoint convexity of
/// `h(y) = a₁c(x₁, y) - Σ_{I₋}|aᵢ|c(xᵢ, y) + Σ_{I₊∖{1}} aᵢ f̄ᵢ(y)` for
/// random node tuples. In 1D every node pair with a node midpoint is tested;
/// in 2D pairs are limited to offsets within [`H_SAMPLE_RADIUS_2D`]. A sample
/// counts as violating if any tested pair fails. Report-only.
pub fn h_convexity_sample(
    full: &[Potential],
    problem: &Problem,
    n_samples: usize,
    seed: u64,
) -> HSample {
    h_convexity_sample_on(full, problem, n_samples, seed, None)
}

/// As [`h_convexity_sample`], testing only triples of nodes inside `mask`.
pub fn h_convexity_sample_on(
    full: &[Potential],
    problem: &Problem,
    n_samples: usize,
    seed: u64,
    mask: Option<&[bool]>,
) -> HSample {
    let grid = *problem.grid();
    let cost = problem.cost();
    let n = grid.len();
    let mut base = vec![0.0; n];
    for i in problem.free_positive() {
        for (b, v) in base.iter_mut().zip(full[i].values()) {
            *b += problem.a(i) * v;
        }
    }
    let anchor = problem.anchor();
    let neg: Vec<usize> = problem.weights().i_minus().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offsets: Vec<(isize, isize)> = if grid.dim() == 1 {
        (1..grid.resolution()[0] as isize).map(|k| (k, 0)).collect()
    } else {
        let r = H_SAMPLE_RADIUS_2D;
        (-r..=r)
            .flat_map(|a| (-r..=r).map(move |b| (a, b)))
            .filter(|&(a, b)| a > 0 || (a == 0 && b > 0))
            .collect()
    };
    let mut out = HSample {
        samples: n_samples,
        checks: 0,
        violations: 0,
        lower_bound: f64::INFINITY,
    };
    let res = grid.shape();
    for _ in 0..n_samples {
        let x1 = grid.point(rng.gen_range(0..n));
        let xs: Vec<_> = neg
            .iter()
            .map(|_| grid.point(rng.gen_range(0..n)))
            .collect();
        let h: Vec<f64> = (0..n)
            .map(|j| {
                let y = grid.point(j);
                let mut v = problem.a(anchor) * cost.eval(&x1, &y) + base[j];
                for (&i, x) in neg.iter().zip(&xs) {
                    v -= problem.a(i).abs() * cost.eval(x, &y);
                }
                v
            })
            .collect();
        let scale = 1e-12 * (1.0 + h.iter().fold(0.0f64, |a, b| a.max(b.abs())));
        out.lower_bound = h.iter().copied().fold(out.lower_bound, f64::min);
        let mut bad = false;
        for j in 0..n {
            let [i0, i1] = grid.multi_index(j);
            for &(d0, d1) in &offsets {
                let (p0, p1) = (i0 as isize + d0, i1 as isize + d1);
                let (m0, m1) = (i0 as isize - d0, i1 as isize - d1);
                if p0 < 0 || p1 < 0 || m0 < 0 || m1 < 0 {
                    continue;
                }
                let (p0, p1, m0, m1) = (p0 as usize, p1 as usize, m0 as usize, m1 as usize);
                if p0 >= res[0] || m0 >= res[0] || p1 >= res[1] || m1 >= res[1] {
                    continue;
                }
                if let Some(m) = mask {
                    if !(m[j] && m[grid.index(p0, p1)] && m[grid.index(m0, m1)]) {
                        continue;
                    }
                }
                out.checks += 1;
                let avg = 0.5 * (h[grid.index(p0, p1)] + h[grid.index(m0, m1)]);
                if h[j] > avg + scale {
                    bad = true;
                }
            }
        }
        if bad {
            out.violations += 1;
        }
    }
    out
}

/// `(formula, finite difference)` for the derivative of `B` along the flow
/// of the velocity field `w` (one value per node), in 1D.
///
/// The formula integrates `w(y) · Σ aᵢ ∂_y c(Xᵢ(y), y)` against the
/// monotone plans; the finite difference pushes ν by `y ↦ y + dt·w(y)`.
pub fn primal_directional_derivative(
    nu: &GridMeasure,
    w: &[f64],
    problem: &Problem,
    dt: f64,
) -> Result<(f64, f64)> {
    let grid = *nu.grid();
    if grid.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: "1-dimensional grid".into(),
            got: format!("{}D", grid.dim()),
        });
    }
    let cost = problem.cost();
    let mut formula = 0.0;
    let mut b0 = 0.0;
    for (i, mu) in problem.marginals().iter().enumerate() {
        let (k, plan) = ot_1d_exact(mu, nu, &cost)?;
        b0 += problem.a(i) * k;
        for &(s, t, m) in &plan.flow {
            let x = plan.source[s].0;
            let y = plan.target[t].0;
            formula += problem.a(i) * m * w[grid.nearest(&y)] * cost.grad_y(&x, &y)[0];
        }
    }
    let moved = TransportMap::from_points(
        grid,
        (0..grid.len())
            .map(|j| [grid.coord(0, j) + dt * w[j], 0.0])
            .collect(),
    );
    let (nu_dt, _) = pushforward_with_clamp(nu, &moved, Splat::Multilinear);
    let mut b1 = 0.0;
    for (i, mu) in problem.marginals().iter().enumerate() {
        b1 += problem.a(i) * ot_1d_exact(mu, &nu_dt, &cost)?.0;
    }
    Ok((formula, (b1 - b0) / dt))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveReport {
    pub ts: Vec<f64>,
    pub values: Vec<f64>,
    /// `(1-t) B(ν₀) + t B(ν₁)`.
    pub chords: Vec<f64>,
    /// Largest `B(ν_t) - chord`.
    pub max_excess: f64,
    pub tolerance: f64,
}

impl CurveReport {
    pub fn pass(&self) -> bool {
        self.max_excess <= self.tolerance
    }
}

/// Convexity of `B` along the interpolation glued through the anchor
/// marginal, for problems with one positive weight, in 1D. Both monotone
/// plans share the anchor's quantile parametrization, so the glued curve has
/// quantile `(1-t) Q₀ + t Q₁`.
pub fn curve_convexity_check(
    problem: &Problem,
    nu0: &GridMeasure,
    nu1: &GridMeasure,
    ts: &[f64],
) -> Result<CurveReport> {
    if problem.positive_count() != 1 {
        return Err(Error::OnePositiveWeightRequired {
            count: problem.positive_count(),
        });
    }
    let grid = *problem.grid();
    let q0 = quantile_of(nu0)?;
    let q1 = quantile_of(nu1)?;
    let b0 = eval_primal(nu0, problem, Engine::Oracle1D)?;
    let b1 = eval_primal(nu1, problem, Engine::Oracle1D)?;
    let mut values = Vec::new();
    let mut chords = Vec::new();
    for &t in ts {
        let qt = QuantileFn::affine_combination(&[(1.0 - t, &q0), (t, &q1)]);
        let (nut, _) = measure_from_quantile(&qt, grid)?;
        values.push(eval_primal(&nut, problem, Engine::Oracle1D)?);
        chords.push((1.0 - t) * b0 + t * b1);
    }
    let max_excess = values
        .iter()
        .zip(&chords)
        .map(|(v, c)| v - c)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(CurveReport {
        ts: ts.to_vec(),
        values,
        chords,
        max_excess,
        tolerance: gap_tolerance(&grid),
    })
}

/// `𝒟̄(f; f̄) = Σ_{i≠1} aᵢ⟨fᵢ^c, μᵢ⟩ + a₁⟨f̄₁^c, μ₁⟩ + a₁∫(f̄₁ - f₁) dν̄`
/// for free potential lists `f` and `f_bar`.
pub fn eval_linearized(
    f: &[Potential],
    f_bar: &[Potential],
    nu_bar: &GridMeasure,
    problem: &Problem,
) -> f64 {
    let full = full_potentials(f, problem);
    let full_bar = full_potentials(f_bar, problem);
    let anchor = problem.anchor();
    let a1 = problem.a(anchor);
    let cost = problem.cost();
    let mut total = 0.0;
    for i in 0..problem.len() {
        let g = if i == anchor { &full_bar[i] } else { &full[i] };
        total += problem.a(i)
            * problem
                .marginal(i)
                .integrate(ctransform(g, &cost).transformed.values());
    }
    let diff: Vec<f64> = full_bar[anchor]
        .values()
        .iter()
        .zip(full[anchor].values())
        .map(|(a, b)| a - b)
        .collect();
    total + a1 * nu_bar.integrate(&diff)
}

/// Plan-weighted mean of `|c(x, y) - fᵢ^c(x) - fᵢ(y)|` for each marginal,
/// using the monotone plan from `μᵢ` to ν̄ (1D).
pub fn support_optimality(
    full: &[Potential],
    nu_bar: &GridMeasure,
    problem: &Problem,
) -> Result<Vec<f64>> {
    let grid = *problem.grid();
    let cost = problem.cost();
    let mut out = Vec::new();
    for (i, mu) in problem.marginals().iter().enumerate() {
        let fc = ctransform(&full[i], &cost).transformed;
        let (_, plan) = ot_1d_exact(mu, nu_bar, &cost)?;
        let mut acc = 0.0;
        let mut mass = 0.0;
        for &(s, t, m) in &plan.flow {
            let x = plan.source[s].0;
            let y = plan.target[t].0;
            let slack = cost.eval(&x, &y)
                - fc.values()[grid.nearest(&x)]
                - full[i].values()[grid.nearest(&y)];
            acc += m * slack.abs();
            mass += m;
        }
        out.push(acc / mass);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct DiagnosticsRecord {
    pub engine: Engine,
    pub primal_value: f64,
    pub dual_value: f64,
    pub duality_gap: f64,
    /// `|K_c(μᵢ, ν̄) - ⟨f̄ᵢ^c, μᵢ⟩ - ⟨f̄ᵢ, ν̄⟩|` per sorted marginal.
    pub per_term_gap: Vec<f64>,
    /// Largest dual-estimate residual behind the `K_c` values (0 if exact).
    pub engine_residual: f64,
    pub congruence: CongruenceReport,
    pub saddle_report: SaddleReport,
    pub lambda_hat: f64,
    /// `‖T_{f̄ᵢ^c}#μᵢ - ν̄‖₁` for every positive non-anchor marginal.
    pub uniqueness_l1: Vec<f64>,
    /// 1D only.
    pub support_gap: Option<Vec<f64>>,
    pub tolerance: f64,
}

impl DiagnosticsRecord {
    pub fn gaps_pass(&self) -> bool {
        self.duality_gap <= self.tolerance && self.per_term_gap.iter().all(|g| *g <= self.tolerance)
    }

    /// Hard gates pass and the quadratic saddle criterion holds.
    pub fn saddle_verified(&self) -> bool {
        self.gaps_pass() && self.saddle_report.quadratic_pass()
    }
}

/// Number of h-convexity samples drawn by [`diagnose`].
pub const DEFAULT_H_SAMPLES: usize = 16;

/// Every diagnostic for a solved instance.
pub fn diagnose(
    result: &SolveResult,
    problem: &Problem,
    engine: Engine,
    seed: u64,
) -> Result<DiagnosticsRecord> {
    let grid = *problem.grid();
    let cost = problem.cost();
    let nu = &result.barycenter;
    let full = &result.potentials;
    let mut primal = 0.0;
    let mut per_term_gap = Vec::new();
    let mut engine_residual: f64 = 0.0;
    for (i, mu) in problem.marginals().iter().enumerate() {
        let (k, residual) = kantorovich(mu, nu, &cost, engine)?;
        engine_residual = engine_residual.max(residual);
        primal += problem.a(i) * k;
        let fc = ctransform(&full[i], &cost).transformed;
        per_term_gap.push((k - mu.integrate(fc.values()) - nu.integrate(full[i].values())).abs());
    }
    let weights: Vec<f64> = (0..problem.len()).map(|i| problem.a(i)).collect();
    let congruence = congruence_check(full, &weights, nu);
    // potentials are only pinned down where ν̄ has mass
    let region = effective_support(nu, SUPPORT_TRIM);
    let mut saddle_report = if cost.is_quadratic() {
        quadratic_saddle_criterion_on(full, problem, Some(&region))?
    } else {
        SaddleReport {
            quadratic_applicable: false,
            min_second_difference: f64::NAN,
            hessian_lower_slack: f64::NAN,
            hessian_upper_slack: f64::NAN,
            tolerance: f64::NAN,
            h_samples: 0,
            h_sampled_violations: 0,
            h_lower_bound: f64::NAN,
        }
    };
    let hs = h_convexity_sample_on(full, problem, DEFAULT_H_SAMPLES, seed, Some(&region));
    saddle_report.h_samples = hs.samples;
    saddle_report.h_sampled_violations = hs.violations;
    saddle_report.h_lower_bound = hs.lower_bound;
    let eval = evaluate(full, problem)?;
    let uniqueness_l1 = problem
        .free_positive()
        .iter()
        .map(|&i| eval.pushed[i].l1_distance(nu))
        .collect();
    let support_gap = if grid.dim() == 1 {
        Some(support_optimality(full, nu, problem)?)
    } else {
        None
    };
    Ok(DiagnosticsRecord {
        engine,
        primal_value: primal,
        dual_value: result.state.dual_value,
        duality_gap: (primal - result.state.dual_value).abs(),
        per_term_gap,
        engine_residual,
        congruence,
        saddle_report,
        lambda_hat: lambda_convexity_on(&full[problem.anchor()], Some(&region)),
        uniqueness_l1,
        support_gap,
        tolerance: gap_tolerance(&grid),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::gaussian_on_grid;
    use crate::solver::redundant_potential;

    fn line(n: usize) -> Grid {
        Grid::line(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn effective_support_keeps_the_heavy_nodes() {
        let g = line(8);
        let nu =
            GridMeasure::new(g, vec![0.0, 1e-5, 0.2, 0.3, 0.4, 0.1 - 2e-5, 1e-5, 0.0]).unwrap();
        let m = effective_support(&nu, 1e-4);
        assert_eq!(m, vec![false, false, true, true, true, true, false, false]);
        assert_eq!(
            effective_support(&nu, 0.0).iter().filter(|b| **b).count(),
            6
        );
    }

    #[test]
    fn identical_marginals_have_zero_primal() {
        let g = line(64);
        let mu = gaussian_on_grid(g, &[0.5], 0.1).unwrap();
        let p = Problem::new(
            &[0.6, 0.6, -0.2],
            vec![mu.clone(), mu.clone(), mu.clone()],
            CostModel::Quadratic,
        )
        .unwrap();
        assert_eq!(eval_primal(&mu, &p, Engine::Oracle1D).unwrap(), 0.0);
    }

    #[test]
    fn extrapolation_primal_value() {
        let g = line(256);
        let mus = vec![
            gaussian_on_grid(g, &[0.5], 0.05).unwrap(),
            gaussian_on_grid(g, &[0.4], 0.05).unwrap(),
        ];
        let p = Problem::new(&[2.0, -1.0], mus, CostModel::Quadratic).unwrap();
        let nu = gaussian_on_grid(g, &[0.6], 0.05).unwrap();
        let b = eval_primal(&nu, &p, Engine::Oracle1D).unwrap();
        assert!((b + 0.01).abs() < 1e-3, "{b}");
    }

    #[test]
    fn engines_refuse_what_they_cannot_do() {
        let g = Grid::square(0.0, 1.0, 16).unwrap();
        let mu = gaussian_on_grid(g, &[0.5, 0.5], 0.2).unwrap();
        assert!(matches!(
            kantorovich(&mu, &mu, &CostModel::Quadratic, Engine::Oracle1D),
            Err(Error::EngineUnavailable(_))
        ));
        assert!(matches!(
            kantorovich(&mu, &mu, &CostModel::Quadratic, Engine::SmallExact),
            Err(Error::EngineUnavailable(_))
        ));
    }

    #[test]
    fn congruence_examples() {
        let g = line(21);
        let mu = gaussian_on_grid(g, &[0.5], 0.2).unwrap();
        let p = Problem::new(
            &[2.0, -1.0],
            vec![mu.clone(), mu.clone()],
            CostModel::Quadratic,
        )
        .unwrap();
        let f2 = Potential::from_fn(g, |y| y[0] * y[0]);
        let f1 = redundant_potential(std::slice::from_ref(&f2), &p);
        let w = [2.0, -1.0];
        let r = congruence_check(&[f1.clone(), f2.clone()], &w, &mu);
        assert!(r.raw < 1e-12);
        let r = congruence_check(&[f1, f2.shifted(0.1)], &w, &mu);
        assert!((r.raw - 0.1).abs() < 1e-12);
        assert!(r.normalized < 1e-12);
        assert!((r.infimum + 0.1).abs() < 1e-12);
    }

    #[test]
    fn dirac_potentials_are_congruent_after_normalization() {
        // a = (2, -1), μ₁ = δ_{0.5}, μ₂ = δ_{0.7}: ν̄ = δ_{0.3}; the pair
        // fᵢ(y) = c(xᵢ, y) - c(xᵢ, 0.3) + kᵢ is optimal for any constants
        let g = line(11);
        let (x1, x2, y0) = (0.5, 0.7, 0.3);
        let c = |x: f64, y: f64| 0.5 * (x - y) * (x - y);
        let f1 = Potential::from_fn(g, |y| c(x1, y[0]) - c(x1, y0) + 0.3);
        let f2 = Potential::from_fn(g, |y| c(x2, y[0]) - c(x2, y0) + 0.5);
        let nu = GridMeasure::dirac(g, 3);
        let r = congruence_check(&[f1, f2], &[2.0, -1.0], &nu);
        assert!(r.normalized <= 1e-9);
        assert!(r.raw > 0.0);
    }

    #[test]
    fn quadratic_criterion_examples() {
        let g = line(64);
        let mu = gaussian_on_grid(g, &[0.5], 0.1).unwrap();
        let p = Problem::new(
            &[0.6, 0.6, -0.2],
            vec![mu.clone(), mu.clone(), mu.clone()],
            CostModel::Quadratic,
        )
        .unwrap();
        let zeros = vec![Potential::zeros(g); 3];
        let r = quadratic_saddle_criterion(&zeros, &p).unwrap();
        assert!(r.quadratic_pass());
        assert!((r.min_second_difference - 0.4).abs() < 1e-6);
        let mut fs = zeros.clone();
        fs[1] = Potential::from_fn(g, |y| 0.5 * y[0] * y[0]);
        let r = quadratic_saddle_criterion(&fs, &p).unwrap();
        assert!(r.quadratic_pass());
        assert!((r.min_second_difference - 1.0).abs() < 1e-6);
        // D²f̄₂ = -2 on a concave bump: 0.6·(-2) < 0.2 - 0.6
        fs[1] = Potential::from_fn(g, |y| -(y[0] - 0.5).powi(2));
        let r = quadratic_saddle_criterion(&fs, &p).unwrap();
        assert!(!r.quadratic_pass());
        assert!(r.hessian_lower_slack < 0.0);
        assert!((r.hessian_lower_slack - (-1.2 + 0.4)).abs() < 1e-6);
        let pp = Problem::new(
            &[0.6, 0.6, -0.2],
            vec![mu.clone(), mu.clone(), mu],
            CostModel::PPower(3.0),
        )
        .unwrap();
        assert!(matches!(
            quadratic_saddle_criterion(&zeros, &pp),
            Err(Error::NotQuadraticCost)
        ));
    }

    #[test]
    fn h_sampling_on_convex_combinations() {
        let g = line(48);
        let mu = gaussian_on_grid(g, &[0.5], 0.1).unwrap();
        for w in [[0.6, 0.6, -0.2], [1.5, 0.5, -1.0]] {
            let p = Problem::new(
                &w,
                vec![mu.clone(), mu.clone(), mu.clone()],
                CostModel::Quadratic,
            )
            .unwrap();
            let s = h_convexity_sample(&vec![Potential::zeros(g); 3], &p, 20, 3);
            assert_eq!(s.violations, 0);
            assert!(s.checks > 0);
        }
    }

    #[test]
    fn lambda_estimates() {
        let g = Grid::square(-1.0, 1.0, 17).unwrap();
        assert!(
            (lambda_convexity_estimate(
                &Potential::from_fn(g, |y| 0.5 * (y[0] * y[0] + y[1] * y[1]))
            ) - 1.0)
                .abs()
                < 1e-9
        );
        assert!(
            lambda_convexity_estimate(&Potential::from_fn(g, |y| 0.3 * y[0] - y[1])).abs() < 1e-9
        );
        assert!(lambda_convexity_estimate(&Potential::from_fn(g, |y| -(y[0].abs()))) < 0.0);
    }

    #[test]
    fn directional_derivative_vanishes_at_the_marginal() {
        let g = line(128);
        let mu = gaussian_on_grid(g, &[0.5], 0.08).unwrap();
        let p = Problem::new(&[1.0], vec![mu.clone()], CostModel::Quadratic).unwrap();
        let w: Vec<f64> = (0..g.len())
            .map(|j| (std::f64::consts::PI * g.coord(0, j)).sin())
            .collect();
        let (formula, fd) = primal_directional_derivative(&mu, &w, &p, 1e-3).unwrap();
        assert_eq!(formula, 0.0);
        assert!(fd.abs() < 4.0 * g.h());
    }

    #[test]
    fn moving_toward_the_marginal_decreases_b() {
        let g = line(128);
        let mu = gaussian_on_grid(g, &[0.4], 0.06).unwrap();
        let nu = gaussian_on_grid(g, &[0.6], 0.06).unwrap();
        let p = Problem::new(&[1.0], vec![mu], CostModel::Quadratic).unwrap();
        let w = vec![-1.0; g.len()];
        let (formula, fd) = primal_directional_derivative(&nu, &w, &p, 1e-3).unwrap();
        assert!(formula < 0.0 && fd < 0.0);
        assert!((formula + 0.2).abs() < 4.0 * g.h());
    }

    #[test]
    fn linearized_functional_at_its_anchor() {
        let g = line(64);
        let mus = [0.4, 0.6, 0.5]
            .iter()
            .map(|m| gaussian_on_grid(g, &[*m], 0.05).unwrap())
            .collect();
        let p = Problem::new(&[0.6, 0.6, -0.2], mus, CostModel::Quadratic).unwrap();
        let fb = vec![
            Potential::from_fn(g, |y| 0.1 * y[0]),
            Potential::from_fn(g, |y| 0.02 * (5.0 * y[0]).sin()),
        ];
        let nu = gaussian_on_grid(g, &[0.5], 0.1).unwrap();
        let d = crate::solver::eval_dual(&fb, &p);
        assert!((eval_linearized(&fb, &fb, &nu, &p) - d).abs() < 1e-12);
    }

    #[test]
    fn curve_check_requires_one_positive_weight() {
        let g = line(32);
        let mu = gaussian_on_grid(g, &[0.5], 0.1).unwrap();
        let p = Problem::new(
            &[0.5, 0.5],
            vec![mu.clone(), mu.clone()],
            CostModel::Quadratic,
        )
        .unwrap();
        assert!(matches!(
            curve_convexity_check(&p, &mu, &mu, &[0.5]),
            Err(Error::OnePositiveWeightRequired { count: 2 })
        ));
    }

    #[test]
    fn curve_check_with_equal_endpoints_is_tight() {
        let g = line(64);
        let mus = vec![
            gaussian_on_grid(g, &[0.5], 0.05).unwrap(),
            gaussian_on_grid(g, &[0.45], 0.08).unwrap(),
        ];
        let p = Problem::new(&[2.0, -1.0], mus, CostModel::Quadratic).unwrap();
        let nu = gaussian_on_grid(g, &[0.55], 0.04).unwrap();
        let r = curve_convexity_check(&p, &nu, &nu, &[0.25, 0.5]).unwrap();
        assert!(r.max_excess.abs() < 1e-9);
    }
}
