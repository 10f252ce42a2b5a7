//! Grid-based solver and verification toolkit for signed Wasserstein
//! barycenters: minimizers of `Σ aᵢ K_c(μᵢ, ν)` over probability measures `ν`
//! for affine weights `aᵢ` that may be negative.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`], [`measure`], [`cost`], [`weights`], [`problem`], [`io`]:
//!   domain primitives and file formats;
//! * [`ctransform`]: discrete c-transforms (brute force and a linear-time
//!   path for the quadratic cost);
//! * [`transport`]: induced maps, pushforwards and 1D quantile functions;
//! * [`precond`]: the Neumann `(-Δ + ε)⁻¹` preconditioner;
//! * [`solver`]: the min-max dual ascent/descent solver;
//! * [`oracle`]: exact low-dimensional ground truth;
//! * [`diagnostics`]: optimality, duality and saddle-sufficiency checks.

pub mod cost;
pub mod ctransform;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod io;
pub mod measure;
pub mod oracle;
pub mod precond;
pub mod problem;
pub mod solver;
pub mod transport;
pub mod weights;

pub use cost::CostModel;
pub use error::{Error, Result};
pub use grid::{Grid, Point};
pub use measure::{gaussian_on_grid, GridMeasure, Potential};
pub use problem::Problem;
pub use weights::{validate_weights, WeightVector};
