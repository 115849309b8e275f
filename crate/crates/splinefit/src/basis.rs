//! Clamped B-spline basis: knot vectors, Cox-de Boor evaluation, and
//! tensor-product surface evaluation.
//!
//! Knot vectors live on the domain `[0, 1]` and are clamped: the first and
//! last `degree + 1` knots coincide with the domain endpoints, so the surface
//! interpolates the corner control points. Evaluation at a parameter `t`
//! touches exactly `degree + 1` basis functions; [`KnotVector::basis_row`]
//! returns that dense window together with the index of its first function.

use crate::error::{Error, Result};
use crate::grid::{ControlNet, DataGrid};

/// A clamped, nondecreasing knot vector with its polynomial degree.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

impl KnotVector {
    /// Validates and wraps a knot vector.
    ///
    /// Requirements: at least `2 * (degree + 1)` knots, all finite and
    /// nondecreasing; the first and last `degree + 1` knots each collapse to a
    /// single value (clamping); the domain is nondegenerate; and every
    /// interior knot lies strictly between the domain endpoints.
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        let min_len = 2 * (degree + 1);
        if knots.len() < min_len {
            return Err(Error::InvalidArgument(format!(
                "degree {degree} needs at least {min_len} knots, got {}",
                knots.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidArgument(
                "knot vector contains a non-finite value".into(),
            ));
        }
        if knots.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument(
                "knot vector must be nondecreasing".into(),
            ));
        }
        let last = knots.len() - 1;
        let start = knots[degree];
        let end = knots[last - degree];
        if knots[0] != start {
            return Err(Error::InvalidArgument(format!(
                "first {} knots must coincide (clamped start)",
                degree + 1
            )));
        }
        if knots[last] != end {
            return Err(Error::InvalidArgument(format!(
                "last {} knots must coincide (clamped end)",
                degree + 1
            )));
        }
        if start >= end {
            return Err(Error::InvalidArgument(
                "knot domain is degenerate (start >= end)".into(),
            ));
        }
        if knots[degree + 1..last - degree]
            .iter()
            .any(|&k| k <= start || k >= end)
        {
            return Err(Error::InvalidArgument(
                "interior knots must lie strictly inside the domain".into(),
            ));
        }
        Ok(KnotVector { degree, knots })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions defined by this knot vector.
    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Parameter interval `[start, end]` on which the basis is defined.
    pub fn domain(&self) -> (f64, f64) {
        (
            self.knots[self.degree],
            self.knots[self.knots.len() - 1 - self.degree],
        )
    }

    /// Index `s` of the knot span containing `t`: `knots[s] <= t < knots[s+1]`,
    /// with the domain endpoint mapped to the last nonempty span.
    pub fn find_span(&self, t: f64) -> Result<usize> {
        let (start, end) = self.domain();
        if !(t >= start && t <= end) {
            return Err(Error::OutOfDomain {
                value: t,
                start,
                end,
            });
        }
        let last = self.num_basis() - 1;
        if t >= self.knots[last + 1] {
            return Ok(last);
        }
        if t <= self.knots[self.degree] {
            return Ok(self.degree);
        }
        let mut low = self.degree;
        let mut high = last + 1;
        let mut mid = (low + high) / 2;
        while t < self.knots[mid] || t >= self.knots[mid + 1] {
            if t < self.knots[mid] {
                high = mid;
            } else {
                low = mid;
            }
            mid = (low + high) / 2;
        }
        Ok(mid)
    }

    /// Evaluates the `degree + 1` basis functions that are nonzero at `t`
    /// with the Cox-de Boor triangular recurrence.
    pub fn basis_row(&self, t: f64) -> Result<BasisRow> {
        let span = self.find_span(t)?;
        let p = self.degree;
        let mut values = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        values[0] = 1.0;
        for j in 1..=p {
            left[j] = t - self.knots[span + 1 - j];
            right[j] = self.knots[span + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = values[r] / (right[r + 1] + left[j - r]);
                values[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            values[j] = saved;
        }
        Ok(BasisRow {
            first_index: span - p,
            values,
        })
    }
}

/// The dense window of basis values at one parameter: `values[k]` is basis
/// function `first_index + k` evaluated there. All other basis functions
/// vanish at that parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisRow {
    first_index: usize,
    values: Vec<f64>,
}

impl BasisRow {
    pub fn first_index(&self) -> usize {
        self.first_index
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Per-direction parameter assignments of a rectangular data grid: `u[a]` is
/// the parameter of data row `a`, `v[b]` the parameter of data column `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    u: Vec<f64>,
    v: Vec<f64>,
}

impl ParamGrid {
    /// Validates parameter sequences: finite, strictly increasing, within
    /// `[0, 1]`, and pinned to the endpoints whenever there are two or more
    /// values. A single-value sequence may sit anywhere in the domain.
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        validate_params(&u, "u parameters")?;
        validate_params(&v, "v parameters")?;
        Ok(ParamGrid { u, v })
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }
}

fn validate_params(params: &[f64], what: &str) -> Result<()> {
    if params.is_empty() {
        return Err(Error::InvalidArgument(format!("{what} must be nonempty")));
    }
    if params.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "{what} contain a non-finite value"
        )));
    }
    if params.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!(
            "{what} must be strictly increasing"
        )));
    }
    let first = params[0];
    let last = params[params.len() - 1];
    if first < 0.0 || last > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "{what} must lie within [0, 1]"
        )));
    }
    if params.len() >= 2 && (first != 0.0 || last != 1.0) {
        return Err(Error::InvalidArgument(format!(
            "{what} must start at 0 and end at 1"
        )));
    }
    Ok(())
}

/// `count` uniformly spaced parameters on `[0, 1]`, endpoints included.
pub fn uniform_params(count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::InvalidArgument(format!(
            "uniform parameterization needs at least 2 values, got {count}"
        )));
    }
    let step = (count - 1) as f64;
    Ok((0..count).map(|i| i as f64 / step).collect())
}

/// Builds a clamped knot vector for `num_ctrl` basis functions of the given
/// degree by the averaging technique: the parameters are subsampled at the
/// stride `floor(k * (len - 1) / (num_ctrl - 1))` and each interior knot is
/// the mean of `degree` consecutive subsampled parameters. For degree 0 the
/// interior knots fall at midpoints of consecutive subsampled parameters.
pub fn averaging_knots(params: &[f64], degree: usize, num_ctrl: usize) -> Result<KnotVector> {
    validate_params(params, "parameters")?;
    if num_ctrl <= degree {
        return Err(Error::InvalidArgument(format!(
            "need more than degree {degree} control points per direction, got {num_ctrl}"
        )));
    }
    if num_ctrl > params.len() {
        return Err(Error::InvalidArgument(format!(
            "{num_ctrl} control points need at least that many parameters, got {}",
            params.len()
        )));
    }

    let mut knots = Vec::with_capacity(num_ctrl + degree + 1);
    knots.extend(std::iter::repeat_n(0.0, degree + 1));
    if num_ctrl >= 2 {
        let selected: Vec<f64> = (0..num_ctrl)
            .map(|k| params[k * (params.len() - 1) / (num_ctrl - 1)])
            .collect();
        if degree == 0 {
            for j in 1..num_ctrl {
                knots.push(0.5 * (selected[j - 1] + selected[j]));
            }
        } else {
            for j in 1..=num_ctrl - 1 - degree {
                let window = &selected[j..j + degree];
                knots.push(window.iter().sum::<f64>() / degree as f64);
            }
        }
    }
    knots.extend(std::iter::repeat_n(1.0, degree + 1));
    KnotVector::new(degree, knots)
}

/// Evaluates the tensor-product surface defined by `net` at `(u, v)`,
/// returning the image point in `R^dim`.
pub fn eval_surface(
    net: &ControlNet,
    kv_u: &KnotVector,
    kv_v: &KnotVector,
    u: f64,
    v: f64,
) -> Result<Vec<f64>> {
    check_net_dims(net, kv_u, kv_v)?;
    let row_u = kv_u.basis_row(u)?;
    let row_v = kv_v.basis_row(v)?;
    let mut point = vec![0.0; net.dim()];
    accumulate_point(net, &row_u, &row_v, &mut point);
    Ok(point)
}

/// Evaluates the surface at every `(u[a], v[b])` pair of the parameter grid,
/// producing a data grid of the same shape as the parameter grid.
pub fn sample_surface(
    net: &ControlNet,
    kv_u: &KnotVector,
    kv_v: &KnotVector,
    grid: &ParamGrid,
) -> Result<DataGrid> {
    check_net_dims(net, kv_u, kv_v)?;
    let table_u = BasisTable::build(kv_u, grid.u())?;
    let table_v = BasisTable::build(kv_v, grid.v())?;
    let dim = net.dim();
    let mut out = DataGrid::zeros(grid.u().len(), grid.v().len(), dim)?;
    for a in 0..grid.u().len() {
        for b in 0..grid.v().len() {
            let mut point = vec![0.0; dim];
            accumulate_point(net, &table_u.row(a), &table_v.row(b), &mut point);
            out.point_mut(a, b).copy_from_slice(&point);
        }
    }
    Ok(out)
}

fn check_net_dims(net: &ControlNet, kv_u: &KnotVector, kv_v: &KnotVector) -> Result<()> {
    if net.m() != kv_u.num_basis() || net.n() != kv_v.num_basis() {
        return Err(Error::DimensionMismatch(format!(
            "control net is {} x {} but the knot vectors define {} x {} basis functions",
            net.m(),
            net.n(),
            kv_u.num_basis(),
            kv_v.num_basis()
        )));
    }
    Ok(())
}

fn accumulate_point(net: &ControlNet, row_u: &BasisRow, row_v: &BasisRow, point: &mut [f64]) {
    for (iu, &bu) in row_u.values().iter().enumerate() {
        let i = row_u.first_index() + iu;
        for (jv, &bv) in row_v.values().iter().enumerate() {
            let j = row_v.first_index() + jv;
            let w = bu * bv;
            for (c, out) in point.iter_mut().enumerate() {
                *out += w * net.point(i, j)[c];
            }
        }
    }
}

/// Basis rows of one direction evaluated at every parameter of that
/// direction, stored densely for reuse across fitting iterations.
#[derive(Debug, Clone)]
pub(crate) struct BasisTable {
    width: usize,
    first: Vec<usize>,
    values: Vec<f64>,
}

impl BasisTable {
    pub(crate) fn build(kv: &KnotVector, params: &[f64]) -> Result<Self> {
        let width = kv.degree() + 1;
        let mut first = Vec::with_capacity(params.len());
        let mut values = Vec::with_capacity(params.len() * width);
        for &t in params {
            let row = kv.basis_row(t)?;
            first.push(row.first_index());
            values.extend_from_slice(row.values());
        }
        Ok(BasisTable {
            width,
            first,
            values,
        })
    }

    pub(crate) fn first(&self, at: usize) -> usize {
        self.first[at]
    }

    pub(crate) fn values(&self, at: usize) -> &[f64] {
        &self.values[at * self.width..(at + 1) * self.width]
    }

    fn row(&self, at: usize) -> BasisRow {
        BasisRow {
            first_index: self.first[at],
            values: self.values(at).to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic_bezier_knots() -> KnotVector {
        KnotVector::new(3, vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn single_span_cubic_matches_bernstein_at_half() {
        let row = cubic_bezier_knots().basis_row(0.5).unwrap();
        assert_eq!(row.first_index(), 0);
        let expected = [0.125, 0.375, 0.375, 0.125];
        for (got, want) in row.values().iter().zip(expected) {
            assert!(
                (got - want).abs() <= 1e-12,
                "basis value {got} != Bernstein value {want}"
            );
        }
    }

    #[test]
    fn degree_zero_row_is_indicator() {
        let kv = KnotVector::new(0, vec![0.0, 0.5, 1.0]).unwrap();
        let row = kv.basis_row(0.25).unwrap();
        assert_eq!(row.first_index(), 0);
        assert_eq!(row.values(), &[1.0]);
        let row = kv.basis_row(0.5).unwrap();
        assert_eq!(row.first_index(), 1);
        let row = kv.basis_row(1.0).unwrap();
        assert_eq!(row.first_index(), 1);
    }

    #[test]
    fn find_span_examples_and_endpoint_convention() {
        let kv = KnotVector::new(1, vec![0.0, 0.0, 0.5, 1.0, 1.0]).unwrap();
        assert_eq!(kv.find_span(0.7).unwrap(), 2);
        assert_eq!(kv.find_span(0.0).unwrap(), 1);
        assert_eq!(kv.find_span(0.5).unwrap(), 2);
        // The right endpoint maps to the last nonempty span.
        assert_eq!(kv.find_span(1.0).unwrap(), kv.num_basis() - 1);
    }

    #[test]
    fn find_span_matches_linear_scan_oracle() {
        let kv = averaging_knots(&uniform_params(17).unwrap(), 3, 9).unwrap();
        let linear = |t: f64| -> usize {
            let last = kv.num_basis() - 1;
            if t >= kv.knots()[last + 1] {
                return last;
            }
            (kv.degree()..=last)
                .find(|&s| kv.knots()[s] <= t && t < kv.knots()[s + 1])
                .unwrap()
        };
        for k in 0..=200 {
            let t = k as f64 / 200.0;
            assert_eq!(kv.find_span(t).unwrap(), linear(t), "span mismatch at t = {t}");
        }
    }

    #[test]
    fn out_of_domain_parameters_are_rejected() {
        let kv = cubic_bezier_knots();
        assert!(matches!(kv.find_span(-0.1), Err(Error::OutOfDomain { .. })));
        assert!(matches!(kv.find_span(1.1), Err(Error::OutOfDomain { .. })));
        assert!(matches!(kv.find_span(f64::NAN), Err(Error::OutOfDomain { .. })));
        assert!(matches!(kv.basis_row(2.0), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn knot_validation_rejects_malformed_vectors() {
        // Too short for the degree.
        assert!(KnotVector::new(2, vec![0.0, 0.0, 1.0, 1.0]).is_err());
        // Decreasing.
        assert!(KnotVector::new(1, vec![0.0, 0.0, 0.6, 0.4, 1.0, 1.0]).is_err());
        // Unclamped start.
        assert!(KnotVector::new(1, vec![0.0, 0.1, 0.5, 1.0, 1.0]).is_err());
        // Degenerate domain.
        assert!(KnotVector::new(0, vec![0.0, 0.0]).is_err());
        // Interior knot sitting on the boundary.
        assert!(KnotVector::new(1, vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn uniform_params_are_evenly_spaced_with_pinned_ends() {
        let p = uniform_params(5).unwrap();
        assert_eq!(p, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(uniform_params(1).is_err());
        let p = uniform_params(251).unwrap();
        assert_eq!(p[0], 0.0);
        assert_eq!(p[250], 1.0);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn averaging_knots_ten_params_degree_three_five_ctrl() {
        // Subsampled parameters are i/9 for i in {0, 2, 4, 6, 9}; the single
        // interior knot is the mean of 2/9, 4/9, 6/9.
        let kv = averaging_knots(&uniform_params(10).unwrap(), 3, 5).unwrap();
        assert_eq!(kv.knots().len(), 9);
        let expected = [0.0, 0.0, 0.0, 0.0, 4.0 / 9.0, 1.0, 1.0, 1.0, 1.0];
        for (got, want) in kv.knots().iter().zip(expected) {
            assert!(
                (got - want).abs() <= 1e-15,
                "knot {got} differs from expected {want}"
            );
        }
    }

    #[test]
    fn averaging_knots_match_window_mean_oracle() {
        // Independent recomputation: pick the strided parameters, then take
        // plain arithmetic means of each length-`degree` window.
        let params = uniform_params(251).unwrap();
        let (degree, num_ctrl) = (3, 25);
        let kv = averaging_knots(&params, degree, num_ctrl).unwrap();
        assert_eq!(kv.knots().len(), num_ctrl + degree + 1);

        let mut expected = vec![0.0; degree + 1];
        for j in 1..=num_ctrl - 1 - degree {
            let mut acc = 0.0;
            for w in 0..degree {
                let sel = (j + w) * (params.len() - 1) / (num_ctrl - 1);
                acc += params[sel];
            }
            expected.push(acc / degree as f64);
        }
        expected.extend(std::iter::repeat_n(1.0, degree + 1));
        for (got, want) in kv.knots().iter().zip(&expected) {
            assert!((got - want).abs() <= 1e-15);
        }

        let interior = &kv.knots()[degree + 1..kv.knots().len() - degree - 1];
        assert_eq!(interior.len(), num_ctrl - degree - 1);
        assert!(interior.windows(2).all(|w| w[0] < w[1]));
        assert!(interior.iter().all(|&k| 0.0 < k && k < 1.0));
    }

    #[test]
    fn averaging_knots_no_interior_when_counts_collapse() {
        let kv = averaging_knots(&[0.0, 0.5, 1.0], 2, 3).unwrap();
        assert_eq!(kv.knots(), &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn averaging_knots_reject_bad_counts() {
        let params = uniform_params(4).unwrap();
        assert!(averaging_knots(&params, 3, 3).is_err());
        assert!(averaging_knots(&params, 1, 5).is_err());
    }

    #[test]
    fn partition_of_unity_on_dense_parameter_sweep() {
        let kv = averaging_knots(&uniform_params(40).unwrap(), 3, 12).unwrap();
        for k in 0..=1000 {
            let t = k as f64 / 1000.0;
            let row = kv.basis_row(t).unwrap();
            let sum: f64 = row.values().iter().sum();
            assert!(
                (sum - 1.0).abs() <= 1e-12,
                "basis row at t = {t} sums to {sum}"
            );
            assert!(row.values().iter().all(|&b| b >= -1e-14));
            assert_eq!(row.values().len(), kv.degree() + 1);
            assert!(row.first_index() + kv.degree() < kv.num_basis());
        }
    }

    #[test]
    fn bilinear_patch_evaluates_to_bilinear_interpolation() {
        let kv = KnotVector::new(1, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let net = ControlNet::from_coords(
            2,
            2,
            3,
            vec![
                0.0, 0.0, 0.0, // p00
                0.0, 1.0, 0.0, // p01
                1.0, 0.0, 0.0, // p10
                1.0, 1.0, 1.0, // p11
            ],
        )
        .unwrap();
        let p = eval_surface(&net, &kv, &kv, 0.5, 0.5).unwrap();
        assert!((p[0] - 0.5).abs() <= 1e-15);
        assert!((p[1] - 0.5).abs() <= 1e-15);
        assert!((p[2] - 0.25).abs() <= 1e-15);
        // Oracle: bilinear interpolation x = u, y = v, z = u * v.
        for &(u, v) in &[(0.25, 0.75), (0.0, 1.0), (0.9, 0.1)] {
            let p = eval_surface(&net, &kv, &kv, u, v).unwrap();
            assert!((p[0] - u).abs() <= 1e-15);
            assert!((p[1] - v).abs() <= 1e-15);
            assert!((p[2] - u * v).abs() <= 1e-15);
        }
    }

    #[test]
    fn corners_interpolate_corner_control_points_exactly() {
        let kv_u = averaging_knots(&uniform_params(9).unwrap(), 3, 5).unwrap();
        let kv_v = averaging_knots(&uniform_params(11).unwrap(), 2, 6).unwrap();
        let mut coords = Vec::new();
        for i in 0..5 {
            for j in 0..6 {
                coords.extend_from_slice(&[i as f64, j as f64, (i * j) as f64 + 0.25]);
            }
        }
        let net = ControlNet::from_coords(5, 6, 3, coords).unwrap();
        for &(u, v, i, j) in &[
            (0.0, 0.0, 0usize, 0usize),
            (0.0, 1.0, 0, 5),
            (1.0, 0.0, 4, 0),
            (1.0, 1.0, 4, 5),
        ] {
            let p = eval_surface(&net, &kv_u, &kv_v, u, v).unwrap();
            assert_eq!(p.as_slice(), net.point(i, j), "corner ({u}, {v})");
        }
    }

    #[test]
    fn eval_rejects_mismatched_net() {
        let kv = cubic_bezier_knots();
        let net = ControlNet::zeros(3, 4, 3).unwrap();
        assert!(matches!(
            eval_surface(&net, &kv, &kv, 0.5, 0.5),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn sample_surface_matches_pointwise_evaluation() {
        let kv_u = averaging_knots(&uniform_params(7).unwrap(), 2, 4).unwrap();
        let kv_v = averaging_knots(&uniform_params(6).unwrap(), 3, 4).unwrap();
        let coords: Vec<f64> = (0..4 * 4 * 2).map(|k| (k as f64).sin()).collect();
        let net = ControlNet::from_coords(4, 4, 2, coords).unwrap();
        let grid = ParamGrid::new(uniform_params(7).unwrap(), uniform_params(6).unwrap()).unwrap();
        let sampled = sample_surface(&net, &kv_u, &kv_v, &grid).unwrap();
        assert_eq!((sampled.rows(), sampled.cols(), sampled.dim()), (7, 6, 2));
        for (a, &u) in grid.u().iter().enumerate() {
            for (b, &v) in grid.v().iter().enumerate() {
                let p = eval_surface(&net, &kv_u, &kv_v, u, v).unwrap();
                assert_eq!(sampled.point(a, b), p.as_slice());
            }
        }
    }

    #[test]
    fn param_grid_validation() {
        assert!(ParamGrid::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0]).is_ok());
        // Single-parameter directions may sit anywhere in the domain.
        assert!(ParamGrid::new(vec![0.4], vec![0.4]).is_ok());
        assert!(ParamGrid::new(vec![0.0, 0.5], vec![0.0, 1.0]).is_err());
        assert!(ParamGrid::new(vec![0.0, 0.5, 0.5, 1.0], vec![0.0, 1.0]).is_err());
        assert!(ParamGrid::new(vec![], vec![0.0, 1.0]).is_err());
    }
}
