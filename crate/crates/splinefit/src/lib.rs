//! Tensor-product B-spline surface fitting by iterative point adjustment.
//!
//! The crate fits a clamped B-spline surface to a rectangular grid of data
//! points by repeatedly moving each control point along an adjusting vector,
//! the basis-weighted sum of the current residuals it influences. Two update
//! rules are provided: a fixed global step weight, and an adaptive variant
//! that scales each control point's weight by the inverse square root of its
//! accumulated squared adjustment history, which keeps large steps safe early
//! and lets stale control points keep moving late.
//!
//! Module map:
//!
//! * [`basis`] — clamped knot vectors, local basis evaluation, parameter
//!   grids, and knot placement by parameter averaging.
//! * [`grid`] — rectangular data grids and control nets.
//! * [`fitting`] — residuals, adjusting vectors, both update rules, and the
//!   full fitting loop with its stopping and divergence rules.
//! * [`oracle`] — a dense mirror of the fitting problem (collocation matrix,
//!   normal-equation solve, largest Gram eigenvalue) for smallish instances,
//!   used to cross-check the iterative path and pick safe step weights.
//! * [`harness`] — synthetic benchmark surfaces, seeded Gaussian noise, and
//!   parallel step-weight sweeps.
//! * [`io`] — plain-text grids, OBJ meshes, and JSON configs/reports.
//!
//! ```
//! use splinefit::basis::{averaging_knots, uniform_params, ParamGrid};
//! use splinefit::fitting::{run_fit, FitConfig, Method};
//! use splinefit::grid::ControlNet;
//! use splinefit::harness::{generate_synthetic, SyntheticSurface};
//!
//! let data = generate_synthetic(SyntheticSurface::Peaks, 20, 20)?;
//! let grid = ParamGrid::new(uniform_params(20)?, uniform_params(20)?)?;
//! let kv_u = averaging_knots(grid.u(), 3, 8)?;
//! let kv_v = averaging_knots(grid.v(), 3, 8)?;
//! let net = ControlNet::zeros(8, 8, 3)?;
//! let config = FitConfig::new(Method::AdagradLspia, 1.0);
//! let report = run_fit(&data, &grid, &kv_u, &kv_v, net, &config)?;
//! assert!(report.final_error.is_finite());
//! # Ok::<(), splinefit::Error>(())
//! ```

pub mod basis;
pub mod error;
pub mod fitting;
pub mod grid;
pub mod harness;
pub mod io;
pub mod oracle;

pub use error::{Error, Result};
