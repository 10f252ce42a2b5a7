use std::path::{Path, PathBuf};

use sbary::diagnostics::{DiagnosticsRecord, Engine};
use sbary::io::{write_binary, write_density_csv, write_node_csv};
use sbary::oracle::{primal_descent_1d, quantile_primal, signed_barycenter_1d};
use sbary::solver::{solve_with, SolveResult, Status};
use sbary::{GridMeasure, Problem};

use crate::config::{join, RunConfig};
use crate::heatmap::emit_heatmap;
use crate::report::Report;
use crate::{write_file, CliError, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_UNVERIFIED};

/// Iterations of the primal descent fallback for one positive weight.
pub const DESCENT_ITERS: usize = 300;

/// Command-line overrides for `solve`.
#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub engine: Option<Engine>,
    pub no_diagnostics: bool,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: u8,
    /// One-line explanation for a nonzero exit code.
    pub cause: Option<String>,
    pub report: Report,
    pub out_dir: PathBuf,
}

/// Loads `config_path` and runs it; relative paths in the file resolve
/// against its directory.
pub fn run(config_path: &Path, opts: &SolveOptions) -> Result<Outcome, CliError> {
    let config = RunConfig::load(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    run_config(config, base, opts)
}

pub fn run_config(
    mut config: RunConfig,
    base: &Path,
    opts: &SolveOptions,
) -> Result<Outcome, CliError> {
    if let Some(seed) = opts.seed {
        config.solver.seed = seed;
    }
    if let Some(engine) = opts.engine {
        config.diagnostics.engine = Some(engine.as_str().to_string());
    }
    if opts.no_diagnostics {
        config.diagnostics.enabled = false;
    }
    let problem = config.problem(base)?;
    let out_dir = opts
        .out
        .clone()
        .unwrap_or_else(|| base.join(&config.output));
    std::fs::create_dir_all(&out_dir).map_err(|source| CliError::Output {
        path: out_dir.display().to_string(),
        source,
    })?;

    let mut report = Report::new();
    describe_config(&config, &problem, &mut report);
    let (exit_code, cause) = if problem.positive_count() == 1 {
        one_positive(&problem, &out_dir, &mut report)?
    } else {
        let engine = match config.engine()? {
            Some(e) => e,
            None => Engine::default_for(problem.grid()),
        };
        let engine = config.diagnostics.enabled.then_some(engine);
        let result =
            solve_with(&problem, &config.solver.to_config(), engine).map_err(CliError::Solve)?;
        write_solver_outputs(&problem, &result, &out_dir, &mut report)?;
        solver_verdict(&result)
    };
    report.put("exit_code", exit_code);
    if let Some(c) = &cause {
        report.put("cause", c);
    }
    write_file(&out_dir.join("report.txt"), report.render())?;
    Ok(Outcome {
        exit_code,
        cause,
        report,
        out_dir,
    })
}

fn describe_config(config: &RunConfig, problem: &Problem, r: &mut Report) {
    let grid = problem.grid();
    r.put("grid.lower", join(grid.lower()));
    r.put("grid.upper", join(grid.upper()));
    r.put("grid.resolution", join(grid.resolution()));
    r.put("grid.h", grid.h());
    r.put("cost", config.cost.describe());
    r.put("weights", join(&config.weights));
    for (k, m) in config.marginals.iter().enumerate() {
        r.put(format!("marginal.{k}"), m.describe());
    }
    r.put(
        "anchor_input",
        problem.weights().input_position(problem.anchor()),
    );
    let s = &config.solver;
    r.put("solver.step_size", s.step_size);
    r.put("solver.precond_shift", s.precond_shift);
    r.put("solver.tol_residual", s.tol_residual);
    r.put("solver.max_iters", s.max_iters);
    r.put("solver.concavify_every", s.concavify_every);
    r.put("solver.seed", s.seed);
    r.put("solver.init_amplitude", s.init_amplitude);
    r.put("diagnostics.enabled", config.diagnostics.enabled);
    let engine = config
        .diagnostics
        .engine
        .clone()
        .unwrap_or_else(|| Engine::default_for(grid).as_str().into());
    r.put("diagnostics.engine", engine);
}

fn solver_verdict(result: &SolveResult) -> (u8, Option<String>) {
    match result.status {
        Status::Converged => match &result.diagnostics {
            Some(d) if d.saddle_verified() => (EXIT_OK, None),
            Some(d) if !d.gaps_pass() => (
                EXIT_UNVERIFIED,
                Some("converged but the duality gap exceeds its tolerance".into()),
            ),
            Some(_) => (
                EXIT_UNVERIFIED,
                Some("converged but saddle sufficiency is unverified".into()),
            ),
            None => (
                EXIT_UNVERIFIED,
                Some("converged; diagnostics were disabled".into()),
            ),
        },
        Status::MaxIters => (
            EXIT_NOT_CONVERGED,
            Some(format!(
                "no convergence after {} sweeps (residual {:e})",
                result.state.iterate,
                result.final_residual()
            )),
        ),
        Status::Diverged => (
            EXIT_NOT_CONVERGED,
            Some(
                result
                    .divergence
                    .clone()
                    .unwrap_or_else(|| "diverged".into()),
            ),
        ),
    }
}

fn write_measure(measure: &GridMeasure, dir: &Path, stem: &str) -> Result<(), CliError> {
    write_density_csv(&dir.join(format!("{stem}.csv")), measure)?;
    write_binary(&dir.join(format!("{stem}.sbgd")), measure)?;
    if measure.grid().dim() == 2 {
        let density: Vec<f64> = measure
            .mass()
            .iter()
            .enumerate()
            .map(|(j, m)| m / measure.grid().quadrature_weight(j))
            .collect();
        emit_heatmap(measure.grid(), &density, dir, stem)?;
    }
    Ok(())
}

fn describe_barycenter(nu: &GridMeasure, r: &mut Report) -> bool {
    let collapse = nu.top_k_mass(3) >= 0.5;
    let mean = nu.mean();
    r.put("barycenter.mean", join(&mean[..nu.grid().dim()]));
    r.put("barycenter.variance", nu.variance());
    r.put("barycenter.top3_mass", nu.top_k_mass(3));
    r.put("collapse_flag", collapse);
    collapse
}

fn write_solver_outputs(
    problem: &Problem,
    result: &SolveResult,
    dir: &Path,
    r: &mut Report,
) -> Result<(), CliError> {
    let grid = problem.grid();
    write_measure(&result.barycenter, dir, "barycenter")?;
    let weights = problem.weights();
    for (i, f) in result.potentials.iter().enumerate() {
        let k = weights.input_position(i);
        let stem = format!("potential_{k}");
        write_node_csv(
            &dir.join(format!("{stem}.csv")),
            grid,
            f.values(),
            "potential",
        )?;
        if grid.dim() == 2 {
            emit_heatmap(grid, f.values(), dir, &stem)?;
        }
        let role = if i == problem.anchor() {
            "derived"
        } else {
            "free"
        };
        r.put(format!("potential.{k}"), format!("{role},{stem}.csv"));
    }
    let mut hist = String::from("iterate,dual_value,max_residual,step_size,congruence\n");
    for h in &result.history {
        hist.push_str(&format!(
            "{},{:e},{:e},{:e},{:e}\n",
            h.iterate, h.dual_value, h.max_residual, h.step_size, h.congruence
        ));
    }
    write_file(&dir.join("history.csv"), hist)?;

    r.put("route", "solver");
    r.put("status", result.status.as_str());
    r.put("iterations", result.state.iterate);
    r.put("final_residual", result.final_residual());
    for (n, res) in result.state.last_residuals.iter().enumerate() {
        let i = problem.free_indices()[n];
        r.put(format!("residual.{}", weights.input_position(i)), res);
    }
    r.put("dual_value", result.dual_value());
    r.put("final_step_size", result.state.step_size);
    if let Some(d) = &result.divergence {
        r.put("divergence", d);
    }
    describe_barycenter(&result.barycenter, r);
    if let Some(d) = &result.diagnostics {
        describe_diagnostics(problem, d, r);
    }
    Ok(())
}

fn describe_diagnostics(problem: &Problem, d: &DiagnosticsRecord, r: &mut Report) {
    let weights = problem.weights();
    r.put("diag.engine", d.engine.as_str());
    r.put("diag.primal_value", d.primal_value);
    r.put("diag.dual_value", d.dual_value);
    r.put("diag.duality_gap", d.duality_gap);
    for (i, g) in d.per_term_gap.iter().enumerate() {
        r.put(
            format!("diag.per_term_gap.{}", weights.input_position(i)),
            g,
        );
    }
    r.put("diag.engine_residual", d.engine_residual);
    r.put("diag.tolerance", d.tolerance);
    r.put("diag.gaps_pass", d.gaps_pass());
    r.put("diag.congruence.raw", d.congruence.raw);
    r.put("diag.congruence.normalized", d.congruence.normalized);
    r.put("diag.congruence.infimum", d.congruence.infimum);
    let s = &d.saddle_report;
    r.put("diag.saddle.quadratic_applicable", s.quadratic_applicable);
    r.put("diag.saddle.min_second_difference", s.min_second_difference);
    r.put("diag.saddle.hessian_lower_slack", s.hessian_lower_slack);
    r.put("diag.saddle.hessian_upper_slack", s.hessian_upper_slack);
    r.put("diag.saddle.tolerance", s.tolerance);
    r.put("diag.saddle.h_samples", s.h_samples);
    r.put("diag.saddle.h_violations", s.h_sampled_violations);
    r.put("diag.saddle.h_lower_bound", s.h_lower_bound);
    r.put("diag.saddle_verified", d.saddle_verified());
    r.put("diag.lambda_hat", d.lambda_hat);
    for (n, u) in d.uniqueness_l1.iter().enumerate() {
        let i = problem.free_positive()[n];
        r.put(
            format!("diag.uniqueness_l1.{}", weights.input_position(i)),
            u,
        );
    }
    if let Some(gaps) = &d.support_gap {
        for (i, g) in gaps.iter().enumerate() {
            r.put(format!("diag.support_gap.{}", weights.input_position(i)), g);
        }
    }
}

/// One positive weight: the quantile formula in 1D for the quadratic cost,
/// primal descent otherwise.
fn one_positive(
    problem: &Problem,
    dir: &Path,
    r: &mut Report,
) -> Result<(u8, Option<String>), CliError> {
    if problem.grid().dim() != 1 {
        return Err(CliError::Input(
            "a single positive weight is only supported on 1D grids".into(),
        ));
    }
    if problem.cost().is_quadratic() {
        let sb = signed_barycenter_1d(problem).map_err(CliError::Solve)?;
        r.put("monotone_flag", sb.monotone);
        r.put("max_drop", sb.max_drop);
        r.put("clamped", sb.clamped);
        if sb.monotone {
            r.put("route", "quantile");
            r.put(
                "primal_value",
                quantile_primal(problem, &sb.quantile).map_err(CliError::Solve)?,
            );
            write_measure(&sb.measure, dir, "barycenter")?;
            describe_barycenter(&sb.measure, r);
            return Ok((EXIT_OK, None));
        }
    }
    let pd = primal_descent_1d(problem, DESCENT_ITERS, 1.0).map_err(CliError::Solve)?;
    r.put("route", "primal_descent");
    r.put("iterations", DESCENT_ITERS);
    r.put("primal_value", pd.primal_value);
    write_measure(&pd.measure, dir, "barycenter")?;
    let mut hist = String::from("iterate,primal_value\n");
    for (t, v) in pd.history.iter().enumerate() {
        hist.push_str(&format!("{t},{v:e}\n"));
    }
    write_file(&dir.join("history.csv"), hist)?;
    describe_barycenter(&pd.measure, r);
    Ok((
        EXIT_UNVERIFIED,
        Some(
            "one positive weight outside the monotone regime; primal descent is uncertified".into(),
        ),
    ))
}

/// Maps a run result to the process exit code, printing the one-line cause.
pub fn exit_status(result: &Result<Outcome, CliError>) -> u8 {
    match result {
        Ok(o) => {
            if let Some(c) = &o.cause {
                eprintln!("{c}");
            }
            o.exit_code
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
