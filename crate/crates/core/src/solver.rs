//! Min-max dual solver.
//!
//! The unknowns are the potentials `fᵢ` of every marginal except the anchor
//! (sorted index `problem.anchor()`, written `1` below). The anchor potential
//! is always derived, `f₁ = -Σ_{i≠1} (aᵢ/a₁) fᵢ`, so `Σ aᵢ fᵢ ≡ 0` holds at
//! every iterate by construction.
//!
//! The dual functional is `𝒟 = Σᵢ aᵢ ⟨fᵢ^c, μᵢ⟩`. With `ρᵢ = T_{fᵢ^c}#μᵢ`
//! and `δ⟨f^c, μ⟩/δf = -T_{f^c}#μ`, the chain rule through `f₁` gives
//!
//! ```text
//! δ𝒟/δfᵢ = -aᵢ ρᵢ + a₁ ρ₁ · (aᵢ / a₁) = aᵢ (ρ₁ - ρᵢ).
//! ```
//!
//! Positive-weight potentials ascend, `fᵢ += σ P(aᵢ(ρ₁ - ρᵢ))`, and
//! negative-weight potentials descend, `fᵢ -= σ P(aᵢ(ρ₁ - ρᵢ))`; since
//! `-aᵢ = |aᵢ|` on the negative set both read
//!
//! ```text
//! fᵢ += σ |aᵢ| P(ρ₁ - ρᵢ),
//! ```
//!
//! where `P = (-Δ_h + ε_p)⁻¹` is the Neumann preconditioner.
//!
//! Scaling: `ρ₁ - ρᵢ` is divided by the cell volume before `P` is applied,
//! turning node masses into densities so the step does not depend on the
//! resolution. The step is further divided by the largest marginal density:
//! linearizing the pushforward, a step moves `ρᵢ` at a rate proportional to
//! the local density of `μᵢ`, so this keeps the default `σ = 1` stable on
//! peaked marginals. `σ` is halved when the dual value oscillates over a
//! five-sweep window.
//!
//! Maps are taken in gradient mode and splatted multilinearly, so the
//! residual is a continuous function of the potentials.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ctransform::{c_concavify, ctransform};
use crate::diagnostics::{self, DiagnosticsRecord, Engine};
use crate::error::{Error, Result};
use crate::measure::{GridMeasure, Potential};
use crate::precond::NeumannSolver;
use crate::problem::Problem;
use crate::transport::{extract_map, pushforward, pushforward_with_clamp, MapMode, Splat};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub step_size: f64,
    pub precond_shift: f64,
    pub tol_residual: f64,
    pub max_iters: usize,
    pub concavify_every: usize,
    pub seed: u64,
    /// Amplitude of a seeded random initial perturbation; 0 starts from
    /// `fᵢ ≡ 0`.
    pub init_amplitude: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            step_size: 1.0,
            precond_shift: 1e-3,
            tol_residual: 1e-4,
            max_iters: 2000,
            concavify_every: 1,
            seed: 0,
            init_amplitude: 0.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.step_size, self.precond_shift, self.tol_residual];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidProblem(
                "step size, preconditioner shift and tolerance must be positive".into(),
            ));
        }
        if self.max_iters == 0 || self.concavify_every == 0 {
            return Err(Error::InvalidProblem(
                "max_iters and concavify_every must be positive".into(),
            ));
        }
        if !(self.init_amplitude.is_finite() && self.init_amplitude >= 0.0) {
            return Err(Error::InvalidProblem(
                "init_amplitude must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Free potentials (every sorted index except the anchor, in increasing
/// order) plus bookkeeping from the last evaluation.
#[derive(Debug, Clone)]
pub struct DualState {
    pub potentials: Vec<Potential>,
    pub iterate: usize,
    pub last_residuals: Vec<f64>,
    pub dual_value: f64,
    pub step_size: f64,
}

impl DualState {
    pub fn zeros(problem: &Problem, step_size: f64) -> Self {
        let free = problem.len() - 1;
        DualState {
            potentials: vec![Potential::zeros(*problem.grid()); free],
            iterate: 0,
            last_residuals: vec![0.0; free],
            dual_value: 0.0,
            step_size,
        }
    }

    /// All `m` potentials in sorted order with the anchor derived.
    pub fn full(&self, problem: &Problem) -> Vec<Potential> {
        full_potentials(&self.potentials, problem)
    }
}

/// `f₁ = -Σ_{i≠1} (aᵢ/a₁) fᵢ` for free potentials listed in
/// `problem.free_indices()` order.
pub fn redundant_potential(free: &[Potential], problem: &Problem) -> Potential {
    let a1 = problem.a(problem.anchor());
    let mut f1 = Potential::zeros(*problem.grid());
    for (f, i) in free.iter().zip(problem.free_indices()) {
        f1.add_scaled(-problem.a(i) / a1, f);
    }
    f1
}

pub fn full_potentials(free: &[Potential], problem: &Problem) -> Vec<Potential> {
    let mut out = Vec::with_capacity(problem.len());
    let mut it = free.iter();
    for i in 0..problem.len() {
        if i == problem.anchor() {
            out.push(redundant_potential(free, problem));
        } else {
            out.push(
                it.next()
                    .expect("one free potential per non-anchor marginal")
                    .clone(),
            );
        }
    }
    out
}

/// Largest nodewise `|Σ aᵢ fᵢ|`.
pub fn congruence_defect(full: &[Potential], problem: &Problem) -> f64 {
    let n = problem.grid().len();
    (0..n)
        .map(|j| {
            full.iter()
                .enumerate()
                .map(|(i, f)| problem.a(i) * f.values()[j])
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max)
}

/// `𝒟 = Σᵢ aᵢ ⟨fᵢ^c, μᵢ⟩` for all `m` potentials in sorted order.
pub fn eval_dual_full(full: &[Potential], problem: &Problem) -> f64 {
    let terms: Vec<f64> = full
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            problem.a(i)
                * problem
                    .marginal(i)
                    .integrate(ctransform(f, &problem.cost()).transformed.values())
        })
        .collect();
    terms.iter().sum()
}

/// `𝒟` for free potentials, with the anchor derived.
pub fn eval_dual(free: &[Potential], problem: &Problem) -> f64 {
    eval_dual_full(&full_potentials(free, problem), problem)
}

/// One evaluation of every transform, map and pushforward.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub dual_value: f64,
    /// `T_{fᵢ^c}#μᵢ` for all `m` marginals in sorted order.
    pub pushed: Vec<GridMeasure>,
    /// `‖ρ₁ - ρᵢ‖₁` for the free indices.
    pub residuals: Vec<f64>,
    pub clamped_fraction: f64,
}

impl Evaluation {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

pub fn evaluate(full: &[Potential], problem: &Problem) -> Result<Evaluation> {
    let cost = problem.cost();
    let parts: Vec<Result<(f64, GridMeasure, f64)>> = full
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let tr = ctransform(f, &cost);
            let mu = problem.marginal(i);
            let value = mu.integrate(tr.transformed.values());
            let map = extract_map(&tr, &cost, MapMode::Gradient)?;
            let (rho, clamped) = pushforward_with_clamp(mu, &map, Splat::Multilinear);
            Ok((value, rho, clamped))
        })
        .collect();
    let mut dual_value = 0.0;
    let mut pushed = Vec::with_capacity(full.len());
    let mut clamped_fraction: f64 = 0.0;
    for (i, part) in parts.into_iter().enumerate() {
        let (value, rho, clamped) = part?;
        dual_value += problem.a(i) * value;
        pushed.push(rho);
        clamped_fraction = clamped_fraction.max(clamped);
    }
    let anchor = &pushed[problem.anchor()];
    let residuals = problem
        .free_indices()
        .iter()
        .map(|&i| anchor.l1_distance(&pushed[i]))
        .collect();
    Ok(Evaluation {
        dual_value,
        pushed,
        residuals,
        clamped_fraction,
    })
}

/// `‖ρ₁ - ρᵢ‖₁` for each free index.
pub fn stationarity_residual(state: &DualState, problem: &Problem) -> Result<Vec<f64>> {
    Ok(evaluate(&state.full(problem), problem)?.residuals)
}

/// Reusable per-problem data for [`solver_step`].
pub struct StepContext {
    precond: NeumannSolver,
    density_scale: f64,
}

impl StepContext {
    pub fn new(problem: &Problem) -> Self {
        let grid = *problem.grid();
        let peak = problem
            .marginals()
            .iter()
            .flat_map(|m| m.mass().iter())
            .fold(0.0f64, |a, b| a.max(*b));
        StepContext {
            precond: NeumannSolver::new(grid),
            density_scale: peak / grid.cell_volume(),
        }
    }
}

/// Applies the update from an evaluation already taken at `state`.
fn apply_update(
    state: &mut DualState,
    eval: &Evaluation,
    problem: &Problem,
    config: &SolverConfig,
    ctx: &StepContext,
) {
    let grid = *problem.grid();
    let vol = grid.cell_volume();
    let anchor = &eval.pushed[problem.anchor()];
    let free = problem.free_indices();
    let sigma = state.step_size / ctx.density_scale;
    let steps: Vec<Vec<f64>> = free
        .par_iter()
        .map(|&i| {
            let r: Vec<f64> = anchor
                .mass()
                .iter()
                .zip(eval.pushed[i].mass())
                .map(|(a, b)| (a - b) / vol)
                .collect();
            ctx.precond.solve(&r, config.precond_shift)
        })
        .collect();
    for ((f, &i), step) in state.potentials.iter_mut().zip(&free).zip(steps) {
        let scale = sigma * problem.a(i).abs();
        for (v, s) in f.values_mut().iter_mut().zip(step) {
            *v += scale * s;
        }
    }
    state.iterate += 1;
    if state.iterate.is_multiple_of(config.concavify_every) {
        let cost = problem.cost();
        state.potentials = state
            .potentials
            .par_iter()
            .map(|f| c_concavify(f, &cost))
            .collect();
    }
    state.dual_value = eval.dual_value;
    state.last_residuals = eval.residuals.clone();
}

/// One sweep: evaluate, then `fᵢ += σ|aᵢ| P(ρ₁ - ρᵢ)` for every free
/// index, then concavify when due. The returned state records the dual value
/// and residuals measured before the update.
pub fn solver_step(
    state: &DualState,
    problem: &Problem,
    config: &SolverConfig,
) -> Result<DualState> {
    let ctx = StepContext::new(problem);
    let eval = evaluate(&state.full(problem), problem)?;
    check_divergence(state.iterate, eval.dual_value, None)?;
    let mut next = state.clone();
    apply_update(&mut next, &eval, problem, config, &ctx);
    Ok(next)
}

fn check_divergence(iterate: usize, dual: f64, growth: Option<(f64, f64)>) -> Result<()> {
    if !dual.is_finite() || dual.abs() > 1e12 {
        return Err(Error::Diverged {
            iterate,
            reason: format!("dual value {dual:e}"),
        });
    }
    if let Some((then, now)) = growth {
        if then > 0.0 && now > 10.0 * then {
            return Err(Error::Diverged {
                iterate,
                reason: format!("residual grew from {then:e} to {now:e} over 50 sweeps"),
            });
        }
    }
    Ok(())
}

/// ν̄ = T_{f₁^c}#μ₁.
pub fn recover_barycenter(
    full: &[Potential],
    problem: &Problem,
    splat: Splat,
) -> Result<GridMeasure> {
    let a = problem.anchor();
    let cost = problem.cost();
    let tr = ctransform(&full[a], &cost);
    let mode = match splat {
        Splat::NearestNode => MapMode::Argmin,
        Splat::Multilinear => MapMode::Gradient,
    };
    let map = extract_map(&tr, &cost, mode)?;
    pushforward(problem.marginal(a), &map, splat)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIters,
    Diverged,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "Converged",
            Status::MaxIters => "MaxIters",
            Status::Diverged => "Diverged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub iterate: usize,
    pub dual_value: f64,
    pub max_residual: f64,
    pub step_size: f64,
    /// Largest nodewise `|Σ aᵢ fᵢ|` at this iterate.
    pub congruence: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// All `m` potentials in sorted order; the anchor entry is derived.
    pub potentials: Vec<Potential>,
    pub barycenter: GridMeasure,
    pub status: Status,
    pub history: Vec<HistoryEntry>,
    pub diagnostics: Option<DiagnosticsRecord>,
    pub state: DualState,
    /// Set when ν̄ holds at least half its mass on three nodes or fewer,
    /// where the L1 residual stops resembling a continuum quantity.
    pub collapse_flag: bool,
    pub divergence: Option<String>,
}

impl SolveResult {
    pub fn final_residual(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |h| h.max_residual)
    }

    pub fn dual_value(&self) -> f64 {
        self.state.dual_value
    }
}

/// Runs the solver and attaches diagnostics with the default engine for
/// the grid dimension.
pub fn solve(problem: &Problem, config: &SolverConfig) -> Result<SolveResult> {
    solve_with(problem, config, Some(Engine::default_for(problem.grid())))
}

/// As [`solve`]; `engine = None` skips diagnostics.
pub fn solve_with(
    problem: &Problem,
    config: &SolverConfig,
    engine: Option<Engine>,
) -> Result<SolveResult> {
    config.validate()?;
    if problem.positive_count() < 2 {
        return Err(Error::OnePositiveWeight);
    }
    let ctx = StepContext::new(problem);
    let mut state = DualState::zeros(problem, config.step_size);
    if config.init_amplitude > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for f in &mut state.potentials {
            f.values_mut()
                .iter_mut()
                .for_each(|v| *v = config.init_amplitude * rng.gen_range(-1.0..1.0));
        }
        let cost = problem.cost();
        state.potentials = state
            .potentials
            .iter()
            .map(|f| c_concavify(f, &cost))
            .collect();
    }
    let mut history: Vec<HistoryEntry> = Vec::new();
    let mut status = Status::MaxIters;
    let mut divergence = None;
    let mut window: Vec<f64> = Vec::new();
    loop {
        let full = state.full(problem);
        let congruence = congruence_defect(&full, problem);
        let eval = evaluate(&full, problem)?;
        let max_residual = eval.max_residual();
        history.push(HistoryEntry {
            iterate: state.iterate,
            dual_value: eval.dual_value,
            max_residual,
            step_size: state.step_size,
            congruence,
        });
        state.dual_value = eval.dual_value;
        state.last_residuals = eval.residuals.clone();
        let growth =
            (history.len() > 50).then(|| (history[history.len() - 51].max_residual, max_residual));
        if let Err(e) = check_divergence(state.iterate, eval.dual_value, growth) {
            status = Status::Diverged;
            divergence = Some(e.to_string());
            break;
        }
        if max_residual <= config.tol_residual {
            status = Status::Converged;
            break;
        }
        if state.iterate >= config.max_iters {
            break;
        }
        window.push(eval.dual_value);
        if window.len() > 5 {
            window.remove(0);
        }
        if oscillates(&window) {
            state.step_size *= 0.5;
            window.clear();
        }
        apply_update(&mut state, &eval, problem, config, &ctx);
    }
    let potentials = state.full(problem);
    let barycenter = recover_barycenter(&potentials, problem, Splat::Multilinear)?;
    let collapse_flag = barycenter.top_k_mass(3) >= 0.5;
    let mut result = SolveResult {
        potentials,
        barycenter,
        status,
        history,
        diagnostics: None,
        state,
        collapse_flag,
        divergence,
    };
    if let Some(engine) = engine {
        result.diagnostics = Some(diagnostics::diagnose(
            &result,
            problem,
            engine,
            config.seed,
        )?);
    }
    Ok(result)
}

/// Strict alternation of the dual-value increments across a full window.
fn oscillates(window: &[f64]) -> bool {
    if window.len() < 5 {
        return false;
    }
    let scale = 1e-12 * (1.0 + window.iter().fold(0.0f64, |a, b| a.max(b.abs())));
    let d: Vec<f64> = window.windows(2).map(|w| w[1] - w[0]).collect();
    d.iter().all(|v| v.abs() > scale) && d.windows(2).all(|w| w[0] * w[1] < 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostModel;
    use crate::grid::Grid;
    use crate::measure::gaussian_on_grid;

    fn three_marginal(n: usize) -> Problem {
        let g = Grid::line(0.0, 1.0, n).unwrap();
        let mus = [0.4, 0.6, 0.5]
            .iter()
            .map(|m| gaussian_on_grid(g, &[*m], 0.05).unwrap())
            .collect();
        Problem::new(&[0.6, 0.6, -0.2], mus, CostModel::Quadratic).unwrap()
    }

    #[test]
    fn redundant_potential_examples() {
        let g = Grid::line(0.0, 1.0, 11).unwrap();
        let mu = gaussian_on_grid(g, &[0.5], 0.2).unwrap();
        let p = Problem::new(
            &[2.0, -1.0],
            vec![mu.clone(), mu.clone()],
            CostModel::Quadratic,
        )
        .unwrap();
        let f1 = redundant_potential(&[Potential::zeros(g)], &p);
        assert!(f1.values().iter().all(|v| *v == 0.0));
        let f1 = redundant_potential(&[Potential::from_fn(g, |y| y[0])], &p);
        for j in 0..11 {
            assert!((f1.values()[j] - g.coord(0, j) / 2.0).abs() < 1e-15);
        }
        let p = Problem::new(
            &[0.6, 0.6, -0.2],
            vec![mu.clone(), mu.clone(), mu],
            CostModel::Quadratic,
        )
        .unwrap();
        let free = [Potential::from_fn(g, |y| y[0]), Potential::constant(g, 1.0)];
        let f1 = redundant_potential(&free, &p);
        for j in 0..11 {
            assert!((f1.values()[j] - (-g.coord(0, j) + 1.0 / 3.0)).abs() < 1e-14);
        }
        let full = full_potentials(&free, &p);
        assert!(congruence_defect(&full, &p) < 1e-15);
    }

    #[test]
    fn zero_potentials_have_zero_dual() {
        let p = three_marginal(64);
        let free = vec![Potential::zeros(*p.grid()); 2];
        assert_eq!(eval_dual(&free, &p), 0.0);
    }

    #[test]
    fn constant_shift_leaves_the_dual_unchanged() {
        let p = three_marginal(64);
        let g = *p.grid();
        let free = vec![
            Potential::from_fn(g, |y| 0.1 * y[0] * y[0]),
            Potential::from_fn(g, |y| (3.0 * y[0]).sin() * 0.05),
        ];
        let before = eval_dual(&free, &p);
        let mut shifted = free.clone();
        shifted[0] = shifted[0].shifted(0.37);
        assert!((eval_dual(&shifted, &p) - before).abs() < 1e-9);
    }

    #[test]
    fn identical_marginals_are_a_fixed_point() {
        let g = Grid::line(0.0, 1.0, 64).unwrap();
        let mu = gaussian_on_grid(g, &[0.5], 0.1).unwrap();
        let p = Problem::new(
            &[0.6, 0.6, -0.2],
            vec![mu.clone(), mu.clone(), mu],
            CostModel::Quadratic,
        )
        .unwrap();
        let state = DualState::zeros(&p, 1.0);
        let next = solver_step(&state, &p, &SolverConfig::default()).unwrap();
        assert!(next.last_residuals.iter().all(|r| *r == 0.0));
        for f in &next.potentials {
            assert!(f.values().iter().all(|v| v.abs() < 1e-15));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // δ𝒟/δfᵢ = aᵢ(ρ₁ - ρᵢ), tested with argmin maps so the identity is
        // exact away from ties
        let p = three_marginal(48);
        let g = *p.grid();
        let cost = p.cost();
        let free = vec![
            Potential::from_fn(g, |y| 0.05 * (4.0 * y[0]).cos()),
            Potential::from_fn(g, |y| 0.02 * y[0]),
        ];
        let full = full_potentials(&free, &p);
        let pushed: Vec<GridMeasure> = full
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let tr = ctransform(f, &cost);
                let map = extract_map(&tr, &cost, MapMode::Argmin).unwrap();
                pushforward(p.marginal(i), &map, Splat::NearestNode).unwrap()
            })
            .collect();
        let phi = Potential::from_fn(g, |y| (7.0 * y[0]).sin());
        let base = eval_dual(&free, &p);
        let mut errors = Vec::new();
        for (k, &i) in p.free_indices().iter().enumerate() {
            let predicted: f64 = (0..g.len())
                .map(|j| {
                    p.a(i) * (pushed[p.anchor()].mass()[j] - pushed[i].mass()[j]) * phi.values()[j]
                })
                .sum();
            let mut errs = [0.0; 2];
            for (e, eps) in errs.iter_mut().zip([1e-3, 1e-4]) {
                let mut moved = free.clone();
                moved[k].add_scaled(eps, &phi);
                let fd = (eval_dual(&moved, &p) - base) / eps;
                *e = (fd - predicted).abs();
            }
            errors.push(errs);
            assert!(errs[1] <= errs[0] + 1e-9, "{errs:?}");
            assert!(
                errs[1] < 0.05 * (1.0 + predicted.abs()),
                "{errs:?} vs {predicted}"
            );
        }
    }

    #[test]
    fn congruence_holds_along_the_run() {
        let p = three_marginal(64);
        let config = SolverConfig {
            max_iters: 40,
            ..Default::default()
        };
        let out = solve_with(&p, &config, None).unwrap();
        assert!(out.history.iter().all(|h| h.congruence <= 1e-12));
    }

    #[test]
    fn one_positive_weight_is_redirected() {
        let g = Grid::line(0.0, 1.0, 32).unwrap();
        let mu = gaussian_on_grid(g, &[0.5], 0.1).unwrap();
        let p = Problem::new(&[2.0, -1.0], vec![mu.clone(), mu], CostModel::Quadratic).unwrap();
        assert!(matches!(
            solve_with(&p, &SolverConfig::default(), None),
            Err(Error::OnePositiveWeight)
        ));
    }

    #[test]
    fn oscillation_detector() {
        assert!(oscillates(&[0.0, 1.0, 0.0, 1.0, 0.0]));
        assert!(!oscillates(&[0.0, 1.0, 2.0, 3.0, 4.0]));
        assert!(!oscillates(&[0.0, 1.0, 0.0]));
    }
}
