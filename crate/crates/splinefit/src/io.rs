//! File formats: whitespace-separated point grids, Wavefront OBJ meshes,
//! JSON run configurations, fit reports, and sweep summaries.
//!
//! The grid format is a single header line `rows cols dim` followed by one
//! line per point (row-major), each holding `dim` coordinates. Floats are
//! written with the shortest representation that parses back to the same
//! value, so write-then-read is lossless.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fitting::{
    FitConfig, FitReport, Method, DEFAULT_EPSILON, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE,
};
use crate::grid::{ControlNet, DataGrid};
use crate::harness::{NoiseSpec, SweepRecord, SweepResult, SweepSpec};

/// Fixed-width scientific rendering (17 significant digits) used by the CSV
/// exports: round-trip exact and identical for identical values.
pub(crate) fn csv_number(x: f64) -> String {
    format!("{x:.16e}")
}

// ---------------------------------------------------------------------------
// Point grids
// ---------------------------------------------------------------------------

/// Writes a data grid in the plain-text grid format.
pub fn write_grid(path: &Path, data: &DataGrid) -> Result<()> {
    write_grid_parts(path, data.rows(), data.cols(), data.dim(), data.coords())
}

/// Writes a control net in the same grid format (rows = first index).
pub fn write_net(path: &Path, net: &ControlNet) -> Result<()> {
    write_grid_parts(path, net.m(), net.n(), net.dim(), net.coords())
}

/// Reads a data grid written by [`write_grid`].
pub fn read_grid(path: &Path) -> Result<DataGrid> {
    let (rows, cols, dim, coords) = parse_grid_text(path)?;
    DataGrid::from_coords(rows, cols, dim, coords)
        .map_err(|e| Error::parse(path, e.to_string()))
}

/// Reads a control net written by [`write_net`].
pub fn read_net(path: &Path) -> Result<ControlNet> {
    let (rows, cols, dim, coords) = parse_grid_text(path)?;
    ControlNet::from_coords(rows, cols, dim, coords)
        .map_err(|e| Error::parse(path, e.to_string()))
}

fn write_grid_parts(
    path: &Path,
    rows: usize,
    cols: usize,
    dim: usize,
    coords: &[f64],
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("{rows} {cols} {dim}\n"));
    for point in coords.chunks(dim) {
        for (i, v) in point.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn parse_grid_text(path: &Path) -> Result<(usize, usize, usize, Vec<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(path, "empty file; expected a `rows cols dim` header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::parse(
            path,
            format!("header must be `rows cols dim`, got {header:?}"),
        ));
    }
    let parse_count = |name: &str, token: &str| -> Result<usize> {
        token
            .parse()
            .map_err(|_| Error::parse(path, format!("bad {name} {token:?} in header")))
    };
    let rows = parse_count("row count", fields[0])?;
    let cols = parse_count("column count", fields[1])?;
    let dim = parse_count("dimension", fields[2])?;
    let expected = rows
        .checked_mul(cols)
        .filter(|n| n.checked_mul(dim).is_some())
        .ok_or_else(|| Error::parse(path, "grid size overflows"))?;

    let mut body: Vec<(usize, &str)> = lines.enumerate().map(|(i, l)| (i + 2, l)).collect();
    while body.last().is_some_and(|(_, l)| l.trim().is_empty()) {
        body.pop();
    }
    if body.len() != expected {
        return Err(Error::parse(
            path,
            format!("expected {expected} data lines, found {}", body.len()),
        ));
    }
    let mut coords = Vec::with_capacity(expected * dim);
    for (lineno, line) in body {
        let start = coords.len();
        for token in line.split_whitespace() {
            let value: f64 = token.parse().map_err(|_| {
                Error::parse(path, format!("line {lineno}: bad number {token:?}"))
            })?;
            coords.push(value);
        }
        let found = coords.len() - start;
        if found != dim {
            return Err(Error::parse(
                path,
                format!("line {lineno}: expected {dim} coordinates, found {found}"),
            ));
        }
    }
    Ok((rows, cols, dim, coords))
}

// ---------------------------------------------------------------------------
// Wavefront OBJ
// ---------------------------------------------------------------------------

/// Exports a grid as a triangulated Wavefront OBJ mesh: one vertex per grid
/// point (points beyond three coordinates are truncated, flat grids padded
/// with zeros) and two triangles per grid cell, with 1-based indices.
pub fn write_obj(path: &Path, grid: &DataGrid) -> Result<()> {
    let (rows, cols) = (grid.rows(), grid.cols());
    let mut out = String::new();
    for r in 0..rows {
        for c in 0..cols {
            let p = grid.point(r, c);
            let coord = |i: usize| p.get(i).copied().unwrap_or(0.0);
            out.push_str(&format!("v {} {} {}\n", coord(0), coord(1), coord(2)));
        }
    }
    for r in 0..rows.saturating_sub(1) {
        for c in 0..cols - 1 {
            let a = r * cols + c + 1;
            let b = a + 1;
            let d = a + cols;
            let e = d + 1;
            out.push_str(&format!("f {a} {b} {e}\nf {a} {e} {d}\n"));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

/// How the initial control net is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    /// All control points at the origin.
    #[default]
    Zero,
    /// Control points copied from evenly strided data points.
    Subsample,
}

impl std::fmt::Display for InitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InitKind::Zero => "zero",
            InitKind::Subsample => "subsample",
        })
    }
}

impl std::str::FromStr for InitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(InitKind::Zero),
            "subsample" => Ok(InitKind::Subsample),
            other => Err(Error::InvalidArgument(format!(
                "unknown initialization {other:?}; expected zero or subsample"
            ))),
        }
    }
}

/// A complete fitting run as stored on disk: method and step settings plus
/// the basis layout and optional input noise. Unknown keys are rejected so
/// typos fail loudly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,
    pub mu: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_degree")]
    pub degree_u: usize,
    #[serde(default = "default_degree")]
    pub degree_v: usize,
    pub ctrl_rows: usize,
    pub ctrl_cols: usize,
    #[serde(default)]
    pub init: InitKind,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

fn default_max_iterations() -> usize {
    DEFAULT_MAX_ITERATIONS
}

fn default_degree() -> usize {
    3
}

impl RunConfig {
    /// The per-iteration settings this run hands to the fitter.
    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            method: self.method,
            mu: self.mu,
            epsilon: self.epsilon,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.fit_config().validate()?;
        for (name, ctrl, degree) in [
            ("rows", self.ctrl_rows, self.degree_u),
            ("columns", self.ctrl_cols, self.degree_v),
        ] {
            if ctrl < degree + 1 || ctrl < 2 {
                return Err(Error::InvalidArgument(format!(
                    "control net needs at least max(2, degree + 1) {name}, \
                     got {ctrl} for degree {degree}"
                )));
            }
        }
        if let Some(noise) = &self.noise {
            noise.validate()?;
        }
        Ok(())
    }
}

/// Reads and validates a JSON run configuration.
pub fn read_run_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let config: RunConfig =
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
    config.validate()?;
    Ok(config)
}

// ---------------------------------------------------------------------------
// Reports and summaries
// ---------------------------------------------------------------------------

/// Writes a fit report as pretty-printed JSON.
pub fn write_report(path: &Path, report: &FitReport) -> Result<()> {
    write_json(path, report)
}

/// Reads a fit report written by [`write_report`].
pub fn read_report(path: &Path) -> Result<FitReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
}

/// Aggregate view of a weight sweep: the sampled interval, how many runs
/// converged, and the winning records by error, time, and iteration count
/// (absent when nothing converged).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepSummary {
    pub method: Method,
    pub weight_min: f64,
    pub weight_max: f64,
    pub sample_count: usize,
    pub converged_count: usize,
    pub min_error: Option<SweepRecord>,
    pub min_time: Option<SweepRecord>,
    pub min_iterations: Option<SweepRecord>,
}

impl SweepSummary {
    pub fn from_result(spec: &SweepSpec, result: &SweepResult) -> Self {
        SweepSummary {
            method: spec.method,
            weight_min: spec.weight_min,
            weight_max: spec.weight_max,
            sample_count: spec.sample_count,
            converged_count: result.converged_count(),
            min_error: result.min_error().copied(),
            min_time: result.min_time().copied(),
            min_iterations: result.min_iterations().copied(),
        }
    }
}

/// Writes a sweep summary as pretty-printed JSON.
pub fn write_sweep_summary(path: &Path, summary: &SweepSummary) -> Result<()> {
    write_json(path, summary)
}

/// Reads a sweep summary written by [`write_sweep_summary`].
pub fn read_sweep_summary(path: &Path) -> Result<SweepSummary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::parse(path, e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
