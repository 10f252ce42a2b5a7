//! The `oracle` and `check-transform` subcommands.

use std::path::Path;

use sbary::ctransform::laws::run_law_suite;
use sbary::io::{write_binary, write_density_csv};
use sbary::oracle::{quantile_primal, signed_barycenter_1d};
use sbary::{gaussian_on_grid, CostModel, Grid, Problem};

use crate::config::join;
use crate::report::Report;
use crate::{CliError, EXIT_OK, EXIT_UNVERIFIED};

/// Largest law violation accepted by `check-transform`.
pub const LAW_TOLERANCE: f64 = 1e-9;

pub fn parse_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("not a number: {t:?}")))
        })
        .collect()
}

/// `m,s` pairs for Gaussian marginals.
pub fn parse_gauss(text: &str) -> Result<(f64, f64), CliError> {
    match parse_list(text)?.as_slice() {
        [m, s] => Ok((*m, *s)),
        _ => Err(CliError::Input(format!(
            "expected mean,sd but got {text:?}"
        ))),
    }
}

#[derive(Debug, Clone)]
pub struct OracleArgs {
    pub weights: Vec<f64>,
    pub gaussians: Vec<(f64, f64)>,
    pub nodes: usize,
    pub lower: f64,
    pub upper: f64,
}

/// Quantile-formula barycenter of 1D Gaussians under the quadratic cost.
/// Exit 0 when the combination is monotone, 2 when it is not and the
/// result is therefore uncertified.
pub fn oracle(args: &OracleArgs, out: Option<&Path>) -> Result<(u8, Report), CliError> {
    let grid = Grid::line(args.lower, args.upper, args.nodes)?;
    let mus = args
        .gaussians
        .iter()
        .map(|(m, s)| gaussian_on_grid(grid, &[*m], *s))
        .collect::<Result<Vec<_>, _>>()?;
    let problem = Problem::new(&args.weights, mus, CostModel::Quadratic)?;
    let sb = signed_barycenter_1d(&problem)?;
    let mut r = Report::new();
    r.put("grid.lower", args.lower);
    r.put("grid.upper", args.upper);
    r.put("grid.resolution", args.nodes);
    r.put("weights", join(&args.weights));
    for (k, (m, s)) in args.gaussians.iter().enumerate() {
        r.put(
            format!("marginal.{k}"),
            format!("gaussian(mean={m},sd={s})"),
        );
    }
    r.put("route", "quantile");
    r.put("monotone_flag", sb.monotone);
    r.put("max_drop", sb.max_drop);
    r.put("clamped", sb.clamped);
    r.put("primal_value", quantile_primal(&problem, &sb.quantile)?);
    r.put("barycenter.mean", sb.measure.mean()[0]);
    r.put("barycenter.variance", sb.measure.variance());
    r.put("collapse_flag", sb.measure.top_k_mass(3) >= 0.5);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Output {
            path: dir.display().to_string(),
            source,
        })?;
        write_density_csv(&dir.join("barycenter.csv"), &sb.measure)?;
        write_binary(&dir.join("barycenter.sbgd"), &sb.measure)?;
        crate::write_file(&dir.join("report.txt"), r.render())?;
    }
    Ok((
        if sb.monotone {
            EXIT_OK
        } else {
            EXIT_UNVERIFIED
        },
        r,
    ))
}

pub fn parse_cost(text: &str) -> Result<CostModel, CliError> {
    match text.split_once(':') {
        None if text == "quadratic" => Ok(CostModel::Quadratic),
        Some(("ppower", p)) => {
            let p = p
                .parse()
                .map_err(|_| CliError::Input(format!("bad exponent in {text:?}")))?;
            Ok(CostModel::ppower(p)?)
        }
        _ => Err(CliError::Input(format!(
            "unknown cost {text:?}; use quadratic or ppower:<p>"
        ))),
    }
}

/// Runs the c-transform law suite on the unit line (`dim = 1`) or the unit
/// square with `nodes` per axis. Exit 0 when every law holds to
/// [`LAW_TOLERANCE`], 2 otherwise.
pub fn check_transform(
    nodes: usize,
    dim: usize,
    count: usize,
    seed: u64,
    cost: &CostModel,
) -> Result<(u8, Report), CliError> {
    let grid = match dim {
        1 => Grid::line(0.0, 1.0, nodes)?,
        2 => Grid::square(0.0, 1.0, nodes)?,
        _ => return Err(CliError::Input(format!("dim must be 1 or 2, got {dim}"))),
    };
    let law = run_law_suite(grid, cost, count, seed);
    let mut r = Report::new();
    r.put("grid.resolution", join(grid.resolution()));
    r.put("potentials", law.potentials);
    r.put("seed", seed);
    r.put("involution", law.involution);
    r.put("scaling", law.scaling);
    r.put("concavity", law.concavity);
    r.put("order_reversal", law.order_reversal);
    r.put("modulus", law.modulus);
    if let Some(fb) = law.fast_vs_brute {
        r.put("fast_vs_brute", fb);
    }
    let pass = law.max_violation() <= LAW_TOLERANCE;
    r.put("max_violation", law.max_violation());
    r.put("tolerance", LAW_TOLERANCE);
    r.put("pass", pass);
    Ok((if pass { EXIT_OK } else { EXIT_UNVERIFIED }, r))
}
