//! JSON run configuration.
//!
//! Lengths are in grid coordinates, `step_size` in cost units and
//! `tol_residual` in mass (L1 distance between probability vectors). Every
//! field except `grid`, `weights` and `marginals` has a default, and the
//! report written after a run lists the value actually used for each.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sbary::diagnostics::Engine;
use sbary::io::{ingest_density, read_binary};
use sbary::solver::SolverConfig;
use sbary::{gaussian_on_grid, validate_weights, CostModel, Grid, GridMeasure, Problem};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    #[serde(default)]
    pub cost: CostSpec,
    pub weights: Vec<f64>,
    pub marginals: Vec<MarginalSpec>,
    /// Input position of the anchor marginal; defaults to the largest
    /// positive weight.
    #[serde(default)]
    pub anchor: Option<usize>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CostSpec {
    #[default]
    Quadratic,
    Ppower {
        p: f64,
    },
}

impl CostSpec {
    pub fn model(&self) -> Result<CostModel, CliError> {
        match *self {
            CostSpec::Quadratic => Ok(CostModel::Quadratic),
            CostSpec::Ppower { p } => Ok(CostModel::ppower(p)?),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            CostSpec::Quadratic => "quadratic".into(),
            CostSpec::Ppower { p } => format!("ppower:{p}"),
        }
    }
}

/// A marginal: a Gaussian sampled on the grid, a density CSV or an `SBGD1`
/// file. Paths are relative to the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum MarginalSpec {
    Gaussian { mean: Vec<f64>, sd: f64 },
    Csv(PathBuf),
    Binary(PathBuf),
}

impl MarginalSpec {
    pub fn describe(&self) -> String {
        match self {
            MarginalSpec::Gaussian { mean, sd } => format!("gaussian(mean={},sd={sd})", join(mean)),
            MarginalSpec::Csv(p) => format!("csv({})", p.display()),
            MarginalSpec::Binary(p) => format!("binary({})", p.display()),
        }
    }

    fn load(&self, grid: Grid, base: &Path) -> Result<GridMeasure, CliError> {
        match self {
            MarginalSpec::Gaussian { mean, sd } => Ok(gaussian_on_grid(grid, mean, *sd)?),
            MarginalSpec::Csv(p) => Ok(ingest_density(&base.join(p), grid)?.measure),
            MarginalSpec::Binary(p) => {
                let m = read_binary(&base.join(p))?;
                if !m.grid().same_as(&grid) {
                    return Err(CliError::Input(format!(
                        "{} was written on a different grid",
                        p.display()
                    )));
                }
                Ok(m)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub step_size: f64,
    pub precond_shift: f64,
    pub tol_residual: f64,
    pub max_iters: usize,
    pub concavify_every: usize,
    pub seed: u64,
    pub init_amplitude: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSpec {
            step_size: d.step_size,
            precond_shift: d.precond_shift,
            tol_residual: d.tol_residual,
            max_iters: d.max_iters,
            concavify_every: d.concavify_every,
            seed: d.seed,
            init_amplitude: d.init_amplitude,
        }
    }
}

impl SolverSpec {
    pub fn to_config(&self) -> SolverConfig {
        SolverConfig {
            step_size: self.step_size,
            precond_shift: self.precond_shift,
            tol_residual: self.tol_residual,
            max_iters: self.max_iters,
            concavify_every: self.concavify_every,
            seed: self.seed,
            init_amplitude: self.init_amplitude,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSpec {
    pub enabled: bool,
    /// `oracle1d`, `smallexact` or `dual2d`; defaults by grid dimension.
    pub engine: Option<String>,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        DiagnosticsSpec {
            enabled: true,
            engine: None,
        }
    }
}

pub(crate) fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        let g = &self.grid;
        Ok(Grid::new(&g.lower, &g.upper, &g.resolution)?)
    }

    pub fn engine(&self) -> Result<Option<Engine>, CliError> {
        self.diagnostics
            .engine
            .as_deref()
            .map(Engine::parse)
            .transpose()
            .map_err(CliError::from)
    }

    /// Checks everything that does not need the marginal files.
    pub fn validate(&self) -> Result<(), CliError> {
        self.grid()?;
        self.cost.model()?;
        validate_weights(&self.weights)?;
        if self.marginals.len() != self.weights.len() {
            return Err(CliError::Input(format!(
                "{} weights but {} marginals",
                self.weights.len(),
                self.marginals.len()
            )));
        }
        if let Some(a) = self.anchor {
            if a >= self.weights.len() {
                return Err(CliError::Input(format!("anchor {a} out of range")));
            }
        }
        self.solver.to_config().validate()?;
        self.engine()?;
        Ok(())
    }

    /// Loads the marginals and assembles the problem.
    pub fn problem(&self, base: &Path) -> Result<Problem, CliError> {
        self.validate()?;
        let grid = self.grid()?;
        let cost = self.cost.model()?;
        let marginals = self
            .marginals
            .iter()
            .map(|m| m.load(grid, base))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Problem::with_anchor(
            &self.weights,
            marginals,
            cost,
            self.anchor,
        )?)
    }
}
