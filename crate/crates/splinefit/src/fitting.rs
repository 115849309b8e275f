//! Progressive least-squares fitting of tensor-product B-spline surfaces.
//!
//! The fit minimizes the squared distance between a rectangular grid of data
//! points and the surface evaluated at the grid's parameters. Each iteration
//! forms residuals `q - c(t)`, gathers them into one adjusting vector per
//! control point (the gradient of `0.5 * sum |q - c(t)|^2`), and moves every
//! control point against its adjusting vector. Two steppers are provided: a
//! constant-weight step ([`lspia_step`]) and an adaptive step that divides the
//! weight by the square root of the running sum of squared adjusting-vector
//! norms ([`adagrad_step`]).
//!
//! Reported fitting errors are the plain sum of squared residual norms,
//! without the 1/2 factor of the differentiated objective.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::basis::{sample_surface, BasisTable, KnotVector, ParamGrid};
use crate::error::{Error, Result};
use crate::grid::{ControlNet, DataGrid};

/// Default accumulator offset of the adaptive stepper.
pub const DEFAULT_EPSILON: f64 = 1e-8;
/// Default stopping threshold on the change of consecutive fitting errors.
pub const DEFAULT_TOLERANCE: f64 = 1e-7;
/// Default iteration cap.
pub const DEFAULT_MAX_ITERATIONS: usize = 1000;

/// Multiple of the initial error beyond which a run is declared divergent.
const DIVERGENCE_FACTOR: f64 = 1e12;

/// Which stepper drives the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Constant-weight progressive iteration.
    #[serde(rename = "LSPIA")]
    Lspia,
    /// Adaptive-weight iteration with per-control-point accumulators.
    #[serde(rename = "AdagradLSPIA")]
    AdagradLspia,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Lspia => "LSPIA",
            Method::AdagradLspia => "AdagradLSPIA",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lspia" => Ok(Method::Lspia),
            "adagradlspia" | "adagrad-lspia" | "adagrad" => Ok(Method::AdagradLspia),
            other => Err(Error::InvalidArgument(format!(
                "unknown method {other:?}; expected \"lspia\" or \"adagrad-lspia\""
            ))),
        }
    }
}

/// Hyperparameters of one fitting run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FitConfig {
    pub method: Method,
    /// Step weight: the constant weight for [`Method::Lspia`], the numerator
    /// of the adaptive weight for [`Method::AdagradLspia`].
    pub mu: f64,
    /// Offset added to the accumulator before the square root; only the
    /// adaptive stepper reads it.
    pub epsilon: f64,
    /// The run converges when `|E_k - E_{k+1}| < tolerance`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl FitConfig {
    /// Config with the given method and weight and default
    /// epsilon/tolerance/iteration cap.
    pub fn new(method: Method, mu: f64) -> Self {
        FitConfig {
            method,
            mu,
            epsilon: DEFAULT_EPSILON,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "step weight mu must be positive and finite, got {}",
                self.mu
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be nonnegative and finite, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument(
                "max iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One adjusting vector per control point, laid out like the control net.
/// Entry `(i, j)` is the gradient of `0.5 * sum |q - c(t)|^2` with respect to
/// control point `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustingField {
    m: usize,
    n: usize,
    dim: usize,
    coords: Vec<f64>,
}

impl AdjustingField {
    /// Builds a field from interleaved coordinates (mainly for tests and
    /// custom drivers); shape rules match [`ControlNet::from_coords`].
    pub fn from_coords(m: usize, n: usize, dim: usize, coords: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 || dim == 0 || coords.len() != m * n * dim {
            return Err(Error::DimensionMismatch(format!(
                "adjusting field of {m} x {n} x {dim} needs {} coordinates, got {}",
                m * n * dim,
                coords.len()
            )));
        }
        Ok(AdjustingField { m, n, dim, coords })
    }

    fn zeros(m: usize, n: usize, dim: usize) -> Self {
        AdjustingField {
            m,
            n,
            dim,
            coords: vec![0.0; m * n * dim],
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adjusting vector of control point `(i, j)`.
    pub fn vector(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.n + j) * self.dim;
        &self.coords[start..start + self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Squared norm of the adjusting vector with flat index `i * n + j`.
    fn norm_sq(&self, flat: usize) -> f64 {
        self.coords[flat * self.dim..(flat + 1) * self.dim]
            .iter()
            .map(|c| c * c)
            .sum()
    }
}

/// Mutable state of an iteration in flight.
#[derive(Debug, Clone, PartialEq)]
pub struct FitState {
    net: ControlNet,
    accumulators: Vec<f64>,
    iteration: usize,
    error_history: Vec<f64>,
}

impl FitState {
    /// Fresh state around an initial net: zero accumulators, iteration 0,
    /// empty error history. Drivers record the initial error before stepping
    /// and one error after every step, keeping `error_history.len() ==
    /// iteration + 1`.
    pub fn new(net: ControlNet) -> Self {
        let accumulators = vec![0.0; net.num_points()];
        FitState {
            net,
            accumulators,
            iteration: 0,
            error_history: Vec::new(),
        }
    }

    pub fn net(&self) -> &ControlNet {
        &self.net
    }

    /// Running sums of squared adjusting-vector norms, one per control point
    /// in row-major order. All zero until the adaptive stepper runs.
    pub fn accumulators(&self) -> &[f64] {
        &self.accumulators
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn error_history(&self) -> &[f64] {
        &self.error_history
    }

    /// Appends a fitting error to the history; see [`FitState::new`] for the
    /// recording discipline.
    pub fn record_error(&mut self, error: f64) {
        self.error_history.push(error);
    }

    pub fn into_net(self) -> ControlNet {
        self.net
    }

    fn check_field(&self, field: &AdjustingField) -> Result<()> {
        if field.m != self.net.m() || field.n != self.net.n() || field.dim != self.net.dim() {
            return Err(Error::DimensionMismatch(format!(
                "adjusting field {} x {} x {} does not match net {} x {} x {}",
                field.m,
                field.n,
                field.dim,
                self.net.m(),
                self.net.n(),
                self.net.dim()
            )));
        }
        Ok(())
    }
}

/// Result of a completed (or capped) fitting run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FitReport {
    /// Whether the consecutive-error test fired before the iteration cap.
    pub converged: bool,
    /// Number of steps taken.
    pub iterations: usize,
    /// Last entry of `error_history`.
    pub final_error: f64,
    /// Fitting error after 0, 1, ... steps; entry 0 is the initial error.
    pub error_history: Vec<f64>,
    /// Cumulative wall-clock seconds at which each history entry was recorded.
    pub time_history: Vec<f64>,
    /// Total wall-clock seconds of the run.
    pub wall_time_seconds: f64,
    pub final_net: ControlNet,
}

/// Sum of squared residual norms between the data and the surface sampled at
/// the grid parameters.
pub fn fitting_error(
    data: &DataGrid,
    net: &ControlNet,
    kv_u: &KnotVector,
    kv_v: &KnotVector,
    grid: &ParamGrid,
) -> Result<f64> {
    let r = residuals(data, net, kv_u, kv_v, grid)?;
    Ok(r.coords().iter().map(|c| c * c).sum())
}

/// Difference vectors `q - c(t)` on the data grid.
pub fn residuals(
    data: &DataGrid,
    net: &ControlNet,
    kv_u: &KnotVector,
    kv_v: &KnotVector,
    grid: &ParamGrid,
) -> Result<DataGrid> {
    check_fit_dims(data, net, grid)?;
    let sampled = sample_surface(net, kv_u, kv_v, grid)?;
    let coords = data
        .coords()
        .iter()
        .zip(sampled.coords())
        .map(|(q, c)| q - c)
        .collect();
    DataGrid::from_coords(data.rows(), data.cols(), data.dim(), coords)
}

/// Adjusting vectors: for each control point `(i, j)`, the negated sum of
/// residuals weighted by that control point's basis product, assembled by
/// scattering each residual into the `(deg_u + 1) * (deg_v + 1)` control
/// indices whose bases are nonzero at its parameter.
pub fn adjusting_vectors(
    data: &DataGrid,
    net: &ControlNet,
    kv_u: &KnotVector,
    kv_v: &KnotVector,
    grid: &ParamGrid,
) -> Result<AdjustingField> {
    let r = residuals(data, net, kv_u, kv_v, grid)?;
    let dim = data.dim();
    let n = net.n();
    let mut field = AdjustingField::zeros(net.m(), n, dim);
    let table_u = BasisTable::build(kv_u, grid.u())?;
    let table_v = BasisTable::build(kv_v, grid.v())?;
    for a in 0..data.rows() {
        for b in 0..data.cols() {
            let delta = r.point(a, b);
            for (ku, &bu) in table_u.values(a).iter().enumerate() {
                let i = table_u.first(a) + ku;
                for (kv, &bv) in table_v.values(b).iter().enumerate() {
                    let j = table_v.first(b) + kv;
                    let w = bu * bv;
                    let dst = &mut field.coords[(i * n + j) * dim..(i * n + j + 1) * dim];
                    for (d, &x) in dst.iter_mut().zip(delta) {
                        *d -= w * x;
                    }
                }
            }
        }
    }
    Ok(field)
}

/// Constant-weight step: every control point moves by `-mu` times its
/// adjusting vector. Accumulators are untouched; the iteration count
/// advances by one.
pub fn lspia_step(mut state: FitState, field: &AdjustingField, mu: f64) -> Result<FitState> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step weight mu must be positive and finite, got {mu}"
        )));
    }
    state.check_field(field)?;
    for (p, d) in state.net.coords_mut().iter_mut().zip(&field.coords) {
        *p -= mu * d;
    }
    state.iteration += 1;
    Ok(state)
}

/// Adaptive step: each control point's accumulator first grows by the squared
/// norm of its adjusting vector, then the point moves by
/// `-mu / sqrt(epsilon + accumulator)` times that vector. The weight uses the
/// freshly updated accumulator.
pub fn adagrad_step(
    mut state: FitState,
    field: &AdjustingField,
    mu: f64,
    epsilon: f64,
) -> Result<FitState> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step weight mu must be positive and finite, got {mu}"
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    state.check_field(field)?;
    let dim = field.dim;
    for flat in 0..state.accumulators.len() {
        state.accumulators[flat] += field.norm_sq(flat);
        let w = mu / (epsilon + state.accumulators[flat]).sqrt();
        let p = &mut state.net.coords_mut()[flat * dim..(flat + 1) * dim];
        let d = &field.coords[flat * dim..(flat + 1) * dim];
        for (pc, &dc) in p.iter_mut().zip(d) {
            *pc -= w * dc;
        }
    }
    state.iteration += 1;
    Ok(state)
}

/// Runs the configured iteration from `initial_net` until the change of
/// consecutive fitting errors drops below the tolerance or the iteration cap
/// is reached.
///
/// The error history starts with the initial error (entry 0) and gains one
/// entry per step; the initial entry never triggers the stopping test on its
/// own. If an error exceeds `1e12` times the initial error or turns
/// non-finite, the run aborts with [`Error::Diverged`] carrying the last
/// finite state.
pub fn run_fit(
    data: &DataGrid,
    grid: &ParamGrid,
    kv_u: &KnotVector,
    kv_v: &KnotVector,
    initial_net: ControlNet,
    config: &FitConfig,
) -> Result<FitReport> {
    config.validate()?;
    check_fit_dims(data, &initial_net, grid)?;
    if initial_net.m() != kv_u.num_basis() || initial_net.n() != kv_v.num_basis() {
        return Err(Error::DimensionMismatch(format!(
            "control net is {} x {} but the knot vectors define {} x {} basis functions",
            initial_net.m(),
            initial_net.n(),
            kv_u.num_basis(),
            kv_v.num_basis()
        )));
    }
    if initial_net.num_points() > data.num_points() {
        return Err(Error::InvalidArgument(format!(
            "{} control points exceed the {} data points",
            initial_net.num_points(),
            data.num_points()
        )));
    }

    let start = Instant::now();
    let table_u = BasisTable::build(kv_u, grid.u())?;
    let table_v = BasisTable::build(kv_v, grid.v())?;
    let (rows, cols, dim) = (data.rows(), data.cols(), data.dim());
    let (m, n) = (initial_net.m(), initial_net.n());

    let mut mid = vec![0.0; rows * n * dim];
    let mut row_buf = vec![0.0; cols * dim];
    let mut gather = vec![0.0; m * cols * dim];
    let mut field = AdjustingField::zeros(m, n, dim);
    let mut time_history = Vec::with_capacity(config.max_iterations + 1);

    let mut state = FitState::new(initial_net);
    contract_u(state.net.coords(), &table_u, n, dim, &mut mid);
    let initial_error =
        residual_scatter_pass(data, &mid, &table_u, &table_v, n, &mut row_buf, &mut gather);
    state.record_error(initial_error);
    time_history.push(start.elapsed().as_secs_f64());

    let guard = DIVERGENCE_FACTOR * initial_error;
    let mut last_finite_net = state.net.clone();
    let mut prev_error = initial_error;
    let mut converged = false;

    while state.iteration < config.max_iterations {
        finish_scatter(&gather, &table_v, cols, &mut field);
        state = match config.method {
            Method::Lspia => lspia_step(state, &field, config.mu)?,
            Method::AdagradLspia => adagrad_step(state, &field, config.mu, config.epsilon)?,
        };
        contract_u(state.net.coords(), &table_u, n, dim, &mut mid);
        let error =
            residual_scatter_pass(data, &mid, &table_u, &table_v, n, &mut row_buf, &mut gather);
        if !error.is_finite() || error > guard {
            let iterations = state.iteration - 1;
            let report = FitReport {
                converged: false,
                iterations,
                final_error: prev_error,
                error_history: state.error_history,
                time_history,
                wall_time_seconds: start.elapsed().as_secs_f64(),
                final_net: last_finite_net,
            };
            return Err(Error::Diverged {
                iteration: state.iteration,
                error,
                report: Box::new(report),
            });
        }
        state.record_error(error);
        time_history.push(start.elapsed().as_secs_f64());
        last_finite_net.clone_from(&state.net);
        if (prev_error - error).abs() < config.tolerance {
            converged = true;
            break;
        }
        prev_error = error;
    }

    Ok(FitReport {
        converged,
        iterations: state.iteration,
        final_error: *state.error_history.last().expect("history is never empty"),
        error_history: state.error_history,
        time_history,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        final_net: state.net,
    })
}

fn check_fit_dims(data: &DataGrid, net: &ControlNet, grid: &ParamGrid) -> Result<()> {
    if grid.u().len() != data.rows() || grid.v().len() != data.cols() {
        return Err(Error::DimensionMismatch(format!(
            "parameter grid is {} x {} but the data grid is {} x {}",
            grid.u().len(),
            grid.v().len(),
            data.rows(),
            data.cols()
        )));
    }
    if net.dim() != data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "control points live in R^{} but data points in R^{}",
            net.dim(),
            data.dim()
        )));
    }
    Ok(())
}

/// First contraction of the separated surface evaluation: for each u
/// parameter `a`, `mid[a]` holds `sum_i B_i(u_a) * P[i]` as an `n x dim` row.
fn contract_u(net_coords: &[f64], table_u: &BasisTable, n: usize, dim: usize, mid: &mut [f64]) {
    let row_len = n * dim;
    mid.fill(0.0);
    for a in 0..mid.len() / row_len {
        let out = &mut mid[a * row_len..(a + 1) * row_len];
        let first = table_u.first(a);
        for (k, &w) in table_u.values(a).iter().enumerate() {
            let src = &net_coords[(first + k) * row_len..(first + k + 1) * row_len];
            for (o, &s) in out.iter_mut().zip(src) {
                *o += w * s;
            }
        }
    }
}

/// Fused second contraction, residual formation, and u-direction scatter.
/// For each data row, evaluates the surface from `mid`, forms the residual
/// row `q - c(t)` in `row_buf`, and immediately contracts it into `gather`
/// (`m x cols x dim`), so the full residual grid is never materialized.
/// Returns the sum of squared residual norms.
fn residual_scatter_pass(
    data: &DataGrid,
    mid: &[f64],
    table_u: &BasisTable,
    table_v: &BasisTable,
    n: usize,
    row_buf: &mut [f64],
    gather: &mut [f64],
) -> f64 {
    let (rows, cols, dim) = (data.rows(), data.cols(), data.dim());
    let row_len = cols * dim;
    gather.fill(0.0);
    let mut total = 0.0;
    for a in 0..rows {
        let mid_row = &mid[a * n * dim..(a + 1) * n * dim];
        if dim == 3 {
            // Three-dimensional data dominates in practice; keeping the
            // accumulators in named locals lets them live in registers
            // through the window loop.
            for b in 0..cols {
                let first = table_v.first(b);
                let weights = table_v.values(b);
                let q = data.point(a, b);
                let window = &mid_row[first * 3..(first + weights.len()) * 3];
                let (mut s0, mut s1, mut s2) = (0.0f64, 0.0f64, 0.0f64);
                for (&w, src) in weights.iter().zip(window.chunks_exact(3)) {
                    s0 += w * src[0];
                    s1 += w * src[1];
                    s2 += w * src[2];
                }
                let (d0, d1, d2) = (q[0] - s0, q[1] - s1, q[2] - s2);
                row_buf[b * 3] = d0;
                row_buf[b * 3 + 1] = d1;
                row_buf[b * 3 + 2] = d2;
                total += d0 * d0;
                total += d1 * d1;
                total += d2 * d2;
            }
        } else {
            for b in 0..cols {
                let first = table_v.first(b);
                let weights = table_v.values(b);
                let q = data.point(a, b);
                let out = &mut row_buf[b * dim..(b + 1) * dim];
                out.fill(0.0);
                let window = &mid_row[first * dim..(first + weights.len()) * dim];
                for (&w, src) in weights.iter().zip(window.chunks_exact(dim)) {
                    for (o, &s) in out.iter_mut().zip(src) {
                        *o += w * s;
                    }
                }
                for (o, &qc) in out.iter_mut().zip(q) {
                    let d = qc - *o;
                    *o = d;
                    total += d * d;
                }
            }
        }
        let first = table_u.first(a);
        for (k, &w) in table_u.values(a).iter().enumerate() {
            let dst = &mut gather[(first + k) * row_len..(first + k + 1) * row_len];
            for (g, &r) in dst.iter_mut().zip(row_buf.iter()) {
                *g += w * r;
            }
        }
    }
    total
}

/// Final contraction of the scatter: collapses `gather` over the v windows
/// into the adjusting field, negating on the way.
fn finish_scatter(gather: &[f64], table_v: &BasisTable, cols: usize, field: &mut AdjustingField) {
    let dim = field.dim;
    let n = field.n;
    let row_len = cols * dim;
    field.coords.fill(0.0);
    for i in 0..field.m {
        let gathered = &gather[i * row_len..(i + 1) * row_len];
        let out = &mut field.coords[i * n * dim..(i + 1) * n * dim];
        for b in 0..cols {
            let first = table_v.first(b);
            let weights = table_v.values(b);
            let point = &gathered[b * dim..(b + 1) * dim];
            let window = &mut out[first * dim..(first + weights.len()) * dim];
            for (&w, dst) in weights.iter().zip(window.chunks_exact_mut(dim)) {
                for (d, &s) in dst.iter_mut().zip(point) {
                    *d -= w * s;
                }
            }
        }
    }
}
