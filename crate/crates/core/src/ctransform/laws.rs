//! Property suite for the discrete c-transform, runnable on random
//! potentials: involution, scaling, concavity, order reversal, modulus, and
//! agreement of the fast quadratic path with brute force.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ctransform, ctransform_brute, ctransform_brute_scaled, ctransform_fast_quadratic};
use crate::cost::CostModel;
use crate::grid::Grid;
use crate::measure::{GridMeasure, Potential};

/// Largest violation observed for each law (0 when it holds exactly).
#[derive(Debug, Clone, Default)]
pub struct LawReport {
    pub potentials: usize,
    /// `|(f^cc)^c - f^c|`, `max(f - f^cc, 0)` and `|f^cccc - f^cc|`.
    pub involution: f64,
    /// `|min_y a·c - f  -  a·(f/a)^c|` for `a ∈ {0.5, 2}`.
    pub scaling: f64,
    /// `max((1-t) f₁^c + t f₂^c - [(1-t) f₁ + t f₂]^c, 0)`.
    pub concavity: f64,
    /// `max(g^c - f^c, 0)` for `g >= f`.
    pub order_reversal: f64,
    /// Excess of the neighbour-difference Lipschitz constant of `f^c` over
    /// the cost's Lipschitz constant on the box (quadratic cost only).
    pub modulus: f64,
    /// `|fast - brute|` (quadratic cost only).
    pub fast_vs_brute: Option<f64>,
}

impl LawReport {
    pub fn max_violation(&self) -> f64 {
        [
            self.involution,
            self.scaling,
            self.concavity,
            self.order_reversal,
            self.modulus,
        ]
        .into_iter()
        .chain(self.fast_vs_brute)
        .fold(0.0, f64::max)
    }
}

fn max_excess(lhs: &[f64], rhs: &[f64]) -> f64 {
    lhs.iter()
        .zip(rhs)
        .map(|(a, b)| (a - b).max(0.0))
        .fold(0.0, f64::max)
}

pub fn random_potential(grid: Grid, rng: &mut impl Rng, amplitude: f64) -> Potential {
    let values = (0..grid.len())
        .map(|_| rng.gen_range(-amplitude..amplitude))
        .collect();
    Potential::new(grid, values).expect("finite samples")
}

/// Involution and the `f^cc >= f` half of the first law.
pub fn involution_violation(f: &Potential, cost: &CostModel) -> f64 {
    let fc = ctransform(f, cost).transformed;
    let fcc = ctransform(&fc, cost).transformed;
    let fccc = ctransform(&fcc, cost).transformed;
    let fcccc = ctransform(&fccc, cost).transformed;
    fccc.max_abs_diff(&fc)
        .max(max_excess(f.values(), fcc.values()))
        .max(fcccc.max_abs_diff(&fcc))
}

pub fn scaling_violation(f: &Potential, cost: &CostModel, a: f64) -> f64 {
    let direct = ctransform_brute_scaled(f, cost, a).transformed;
    let via = ctransform(&f.scaled(1.0 / a), cost).transformed.scaled(a);
    direct.max_abs_diff(&via)
}

pub fn concavity_violation(f1: &Potential, f2: &Potential, cost: &CostModel, t: f64) -> f64 {
    let mut mix = f1.scaled(1.0 - t);
    mix.add_scaled(t, f2);
    let lhs = ctransform(&mix, cost).transformed;
    let c1 = ctransform(f1, cost).transformed;
    let c2 = ctransform(f2, cost).transformed;
    let mut rhs = c1.scaled(1.0 - t);
    rhs.add_scaled(t, &c2);
    max_excess(rhs.values(), lhs.values())
}

pub fn order_violation(f: &Potential, g: &Potential, cost: &CostModel) -> f64 {
    debug_assert!(f.values().iter().zip(g.values()).all(|(a, b)| a >= b));
    let fc = ctransform(f, cost).transformed;
    let gc = ctransform(g, cost).transformed;
    max_excess(fc.values(), gc.values())
}

/// Largest `|Δf^c| / |Δx|` between axis neighbours.
pub fn neighbour_lipschitz(f: &Potential) -> f64 {
    let grid = f.grid();
    let v = f.values();
    let mut lip: f64 = 0.0;
    for j in 0..grid.len() {
        let mi = grid.multi_index(j);
        for (axis, &i) in mi.iter().enumerate().take(grid.dim()) {
            if i + 1 < grid.resolution()[axis] {
                let k = if axis == 0 {
                    j + 1
                } else {
                    j + grid.resolution()[0]
                };
                lip = lip.max((v[k] - v[j]).abs() / grid.spacing()[axis]);
            }
        }
    }
    lip
}

/// Forward difference `(⟨(f + εφ)^c, μ⟩ - ⟨f^c, μ⟩)/ε` next to the
/// first-variation value `-⟨φ, T#μ⟩`, with `T` the argmin map of `f^c`.
pub fn first_variation(
    f: &Potential,
    phi: &Potential,
    mu: &GridMeasure,
    cost: &CostModel,
    eps: f64,
) -> (f64, f64) {
    let tr = ctransform(f, cost);
    let mut moved = f.clone();
    moved.add_scaled(eps, phi);
    let base = mu.integrate(tr.transformed.values());
    let bumped = mu.integrate(ctransform(&moved, cost).transformed.values());
    let formula = -mu
        .mass()
        .iter()
        .zip(&tr.argmin)
        .map(|(m, &y)| m * phi.values()[y])
        .sum::<f64>();
    ((bumped - base) / eps, formula)
}

/// `err(ε₁)/err(ε₂)` for the forward difference of [`first_variation`].
pub fn first_variation_ratio(
    f: &Potential,
    phi: &Potential,
    mu: &GridMeasure,
    cost: &CostModel,
    eps: (f64, f64),
) -> f64 {
    let err = |e: f64| {
        let (fd, formula) = first_variation(f, phi, mu, cost, e);
        (fd - formula).abs()
    };
    err(eps.0) / err(eps.1)
}

/// Runs every law on `count` random potentials drawn from `seed`.
pub fn run_law_suite(grid: Grid, cost: &CostModel, count: usize, seed: u64) -> LawReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = LawReport {
        potentials: count,
        ..Default::default()
    };
    let ts = [0.25, 0.5, 0.75];
    for n in 0..count {
        let f = random_potential(grid, &mut rng, 0.5);
        let f2 = random_potential(grid, &mut rng, 0.5);
        report.involution = report.involution.max(involution_violation(&f, cost));
        let a = if n % 2 == 0 { 0.5 } else { 2.0 };
        report.scaling = report.scaling.max(scaling_violation(&f, cost, a));
        let t = ts[n % ts.len()];
        report.concavity = report.concavity.max(concavity_violation(&f, &f2, cost, t));
        let bump = random_potential(grid, &mut rng, 0.25);
        let lower = Potential::new(
            grid,
            f.values()
                .iter()
                .zip(bump.values())
                .map(|(a, b)| a - b.abs())
                .collect(),
        )
        .expect("finite");
        report.order_reversal = report.order_reversal.max(order_violation(&f, &lower, cost));
        if cost.is_quadratic() {
            let fc = ctransform(&f, cost).transformed;
            // |∇ₓ c| <= diam on the box for |x - y|²/2
            let excess = neighbour_lipschitz(&fc) - grid.diameter();
            report.modulus = report.modulus.max(excess.max(0.0));
            let fast = ctransform_fast_quadratic(&f).transformed;
            let brute = ctransform_brute(&f, cost).transformed;
            let d = fast.max_abs_diff(&brute);
            report.fast_vs_brute = Some(report.fast_vs_brute.unwrap_or(0.0).max(d));
        }
    }
    report
}
