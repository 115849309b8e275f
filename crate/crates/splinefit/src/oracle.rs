//! Dense verification oracle for the iterative fit.
//!
//! Everything here trades speed for transparency: the collocation matrix is
//! materialized densely, the normal equations are solved with an in-crate
//! Cholesky factorization, and the largest Gram eigenvalue comes from plain
//! power iteration. Instances are refused above a fixed size cap; the oracle
//! exists to cross-check the sparse iteration on small problems, not to fit
//! production-sized grids.

use crate::basis::{BasisTable, KnotVector, ParamGrid};
use crate::error::{Error, Result};
use crate::grid::{ControlNet, DataGrid};

/// Maximum number of data points (matrix rows) the oracle accepts.
pub const MAX_DENSE_ROWS: usize = 10_000;
/// Maximum number of control points (matrix columns) the oracle accepts.
pub const MAX_DENSE_COLS: usize = 2_500;

/// Relative pivot threshold below which the factorization declares the
/// normal matrix rank-deficient.
const PIVOT_TOLERANCE: f64 = 1e-12;

/// Row-major dense collocation matrix: row `a * num_v + b` holds the basis
/// products of parameter `(u_a, v_b)`, column `i * ctrl_cols + j` belongs to
/// control point `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseCollocation {
    num_rows: usize,
    ctrl_rows: usize,
    ctrl_cols: usize,
    entries: Vec<f64>,
}

impl DenseCollocation {
    /// Wraps a prebuilt matrix; mainly useful for constructing degenerate
    /// cases in tests. `entries` is row-major with `ctrl_rows * ctrl_cols`
    /// columns.
    pub fn new(
        num_rows: usize,
        ctrl_rows: usize,
        ctrl_cols: usize,
        entries: Vec<f64>,
    ) -> Result<Self> {
        let num_cols = ctrl_rows * ctrl_cols;
        check_cap(num_rows, num_cols)?;
        if num_rows == 0 || num_cols == 0 {
            return Err(Error::InvalidArgument(
                "collocation matrix must be nonempty".into(),
            ));
        }
        if entries.len() != num_rows * num_cols {
            return Err(Error::DimensionMismatch(format!(
                "collocation of {num_rows} x {num_cols} needs {} entries, got {}",
                num_rows * num_cols,
                entries.len()
            )));
        }
        if entries.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument(
                "collocation entries must be finite".into(),
            ));
        }
        Ok(DenseCollocation {
            num_rows,
            ctrl_rows,
            ctrl_cols,
            entries,
        })
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_cols(&self) -> usize {
        self.ctrl_rows * self.ctrl_cols
    }

    /// Control-net shape the columns are indexed by.
    pub fn ctrl_shape(&self) -> (usize, usize) {
        (self.ctrl_rows, self.ctrl_cols)
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let k = self.num_cols();
        &self.entries[r * k..(r + 1) * k]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

fn check_cap(rows: usize, cols: usize) -> Result<()> {
    if rows > MAX_DENSE_ROWS || cols > MAX_DENSE_COLS {
        return Err(Error::OracleTooLarge {
            rows,
            cols,
            max_rows: MAX_DENSE_ROWS,
            max_cols: MAX_DENSE_COLS,
        });
    }
    Ok(())
}

/// Materializes the collocation matrix of the tensor-product basis on the
/// parameter grid. Each row carries at most `(deg_u + 1) * (deg_v + 1)`
/// nonzero entries and sums to one.
pub fn assemble_dense(
    kv_u: &KnotVector,
    kv_v: &KnotVector,
    grid: &ParamGrid,
) -> Result<DenseCollocation> {
    let num_rows = grid.u().len() * grid.v().len();
    let (m, n) = (kv_u.num_basis(), kv_v.num_basis());
    check_cap(num_rows, m * n)?;
    let table_u = BasisTable::build(kv_u, grid.u())?;
    let table_v = BasisTable::build(kv_v, grid.v())?;
    let k = m * n;
    let mut entries = vec![0.0; num_rows * k];
    for a in 0..grid.u().len() {
        for b in 0..grid.v().len() {
            let row = &mut entries[(a * grid.v().len() + b) * k..][..k];
            for (ku, &bu) in table_u.values(a).iter().enumerate() {
                let i = table_u.first(a) + ku;
                for (kvv, &bv) in table_v.values(b).iter().enumerate() {
                    let j = table_v.first(b) + kvv;
                    row[i * n + j] = bu * bv;
                }
            }
        }
    }
    DenseCollocation::new(num_rows, m, n, entries)
}

/// Normal matrix `A^T A`, row-major `k x k`.
fn gram(a: &DenseCollocation) -> Vec<f64> {
    let k = a.num_cols();
    let mut g = vec![0.0; k * k];
    for r in 0..a.num_rows {
        let row = a.row(r);
        for i in 0..k {
            let ai = row[i];
            if ai == 0.0 {
                continue;
            }
            for j in i..k {
                g[i * k + j] += ai * row[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            g[i * k + j] = g[j * k + i];
        }
    }
    g
}

/// Lower-triangular Cholesky factor of a symmetric matrix, or `None` when a
/// pivot falls below the relative threshold (rank deficiency).
fn cholesky(g: &[f64], k: usize) -> Option<Vec<f64>> {
    let max_diag = (0..k).fold(0.0_f64, |acc, i| acc.max(g[i * k + i].abs()));
    let tol = PIVOT_TOLERANCE * max_diag.max(f64::MIN_POSITIVE);
    let mut l = vec![0.0; k * k];
    for j in 0..k {
        let mut d = g[j * k + j];
        for s in 0..j {
            d -= l[j * k + s] * l[j * k + s];
        }
        if d <= tol {
            return None;
        }
        let dj = d.sqrt();
        l[j * k + j] = dj;
        for i in j + 1..k {
            let mut off = g[i * k + j];
            for s in 0..j {
                off -= l[i * k + s] * l[j * k + s];
            }
            l[i * k + j] = off / dj;
        }
    }
    Some(l)
}

/// Solves `L L^T x = b` in place given the lower factor.
fn solve_cholesky(l: &[f64], k: usize, b: &mut [f64]) {
    for i in 0..k {
        let mut s = b[i];
        for j in 0..i {
            s -= l[i * k + j] * b[j];
        }
        b[i] = s / l[i * k + i];
    }
    for i in (0..k).rev() {
        let mut s = b[i];
        for j in i + 1..k {
            s -= l[j * k + i] * b[j];
        }
        b[i] = s / l[i * k + i];
    }
}

/// Solves the normal equations `A^T A p = A^T q` coordinate by coordinate and
/// returns the unique least-squares control net. Fails with
/// [`Error::RankDeficient`] when the normal matrix is not positive definite.
pub fn normal_solve(a: &DenseCollocation, data: &DataGrid) -> Result<ControlNet> {
    if data.num_points() != a.num_rows {
        return Err(Error::DimensionMismatch(format!(
            "collocation has {} rows but the data grid has {} points",
            a.num_rows,
            data.num_points()
        )));
    }
    let k = a.num_cols();
    let dim = data.dim();
    let g = gram(a);
    let l = cholesky(&g, k).ok_or(Error::RankDeficient)?;

    let mut coords = vec![0.0; k * dim];
    let mut rhs = vec![0.0; k];
    for c in 0..dim {
        rhs.fill(0.0);
        for r in 0..a.num_rows {
            let q = data.coords()[r * dim + c];
            for (i, &ai) in a.row(r).iter().enumerate() {
                if ai != 0.0 {
                    rhs[i] += ai * q;
                }
            }
        }
        solve_cholesky(&l, k, &mut rhs);
        for i in 0..k {
            coords[i * dim + c] = rhs[i];
        }
    }
    ControlNet::from_coords(a.ctrl_rows, a.ctrl_cols, dim, coords)
}

/// Largest eigenvalue estimate and definiteness of the normal matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramSpectrum {
    /// Power-iteration estimate of the largest eigenvalue of `A^T A`.
    pub lambda_max: f64,
    /// Whether the Cholesky factorization of `A^T A` succeeded.
    pub positive_definite: bool,
}

/// Estimates the largest Gram eigenvalue by power iteration from the
/// normalized all-ones vector, stopping after 200 iterations or when the
/// Rayleigh quotient changes by less than `1e-10` relatively.
pub fn gram_spectrum(a: &DenseCollocation) -> GramSpectrum {
    let k = a.num_cols();
    let g = gram(a);
    let positive_definite = cholesky(&g, k).is_some();

    let mut x = vec![1.0 / (k as f64).sqrt(); k];
    let mut y = vec![0.0; k];
    let mut lambda = 0.0;
    for iter in 0..200 {
        for i in 0..k {
            let mut s = 0.0;
            for j in 0..k {
                s += g[i * k + j] * x[j];
            }
            y[i] = s;
        }
        let rayleigh: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            // The start vector lies in the null space; nothing to amplify.
            lambda = 0.0;
            break;
        }
        for (xi, &yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
        if iter > 0 && (rayleigh - lambda).abs() <= 1e-10 * rayleigh.abs() {
            lambda = rayleigh;
            break;
        }
        lambda = rayleigh;
    }
    GramSpectrum {
        lambda_max: lambda,
        positive_definite,
    }
}

/// Necessary full-rank condition: in each direction, every basis function
/// must be strictly positive at some parameter. A basis function no
/// parameter supports yields a zero collocation column, so the least-squares
/// problem cannot have a unique minimizer.
pub fn schoenberg_whitney_check(
    kv_u: &KnotVector,
    kv_v: &KnotVector,
    grid: &ParamGrid,
) -> Result<bool> {
    Ok(direction_covered(kv_u, grid.u())? && direction_covered(kv_v, grid.v())?)
}

fn direction_covered(kv: &KnotVector, params: &[f64]) -> Result<bool> {
    let mut covered = vec![false; kv.num_basis()];
    for &t in params {
        let row = kv.basis_row(t)?;
        for (k, &b) in row.values().iter().enumerate() {
            if b > 0.0 {
                covered[row.first_index() + k] = true;
            }
        }
    }
    Ok(covered.into_iter().all(|c| c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{averaging_knots, sample_surface, uniform_params};

    fn bilinear_corner_setup() -> (KnotVector, ParamGrid) {
        let kv = KnotVector::new(1, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let grid = ParamGrid::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        (kv, grid)
    }

    #[test]
    fn bilinear_corner_collocation_is_identity() {
        let (kv, grid) = bilinear_corner_setup();
        let a = assemble_dense(&kv, &kv, &grid).unwrap();
        assert_eq!((a.num_rows(), a.num_cols()), (4, 4));
        for r in 0..4 {
            for c in 0..4 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert_eq!(a.row(r)[c], want, "entry ({r}, {c})");
            }
        }
        let spectrum = gram_spectrum(&a);
        assert!((spectrum.lambda_max - 1.0).abs() <= 1e-12);
        assert!(spectrum.positive_definite);
    }

    #[test]
    fn collocation_rows_sum_to_one() {
        let params_u = uniform_params(9).unwrap();
        let params_v = uniform_params(8).unwrap();
        let kv_u = averaging_knots(&params_u, 3, 5).unwrap();
        let kv_v = averaging_knots(&params_v, 2, 4).unwrap();
        let grid = ParamGrid::new(params_u, params_v).unwrap();
        let a = assemble_dense(&kv_u, &kv_v, &grid).unwrap();
        for r in 0..a.num_rows() {
            let sum: f64 = a.row(r).iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12, "row {r} sums to {sum}");
        }
    }

    #[test]
    fn duplicate_columns_are_rank_deficient() {
        // Two identical columns: the Gram matrix is singular.
        let entries = vec![
            1.0, 1.0, 0.0, //
            0.0, 0.0, 1.0, //
            2.0, 2.0, 1.0, //
            1.0, 1.0, 3.0,
        ];
        let a = DenseCollocation::new(4, 1, 3, entries).unwrap();
        assert!(!gram_spectrum(&a).positive_definite);
        let data = DataGrid::from_coords(4, 1, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(matches!(
            normal_solve(&a, &data),
            Err(Error::RankDeficient)
        ));
    }

    #[test]
    fn normal_solve_recovers_a_sampled_net() {
        // Data generated exactly by a known net must be fit with zero
        // residual, so the solver returns that net.
        let params_u = uniform_params(12).unwrap();
        let params_v = uniform_params(10).unwrap();
        let kv_u = averaging_knots(&params_u, 3, 6).unwrap();
        let kv_v = averaging_knots(&params_v, 2, 5).unwrap();
        let grid = ParamGrid::new(params_u, params_v).unwrap();
        let coords: Vec<f64> = (0..6 * 5 * 3).map(|k| (k as f64 * 0.47).sin()).collect();
        let truth = ControlNet::from_coords(6, 5, 3, coords).unwrap();
        let data = sample_surface(&truth, &kv_u, &kv_v, &grid).unwrap();

        let a = assemble_dense(&kv_u, &kv_v, &grid).unwrap();
        let solved = normal_solve(&a, &data).unwrap();
        for (got, want) in solved.coords().iter().zip(truth.coords()) {
            assert!(
                (got - want).abs() <= 1e-9,
                "solver drifted: {got} vs {want}"
            );
        }
    }

    #[test]
    fn normal_solve_gradient_vanishes_on_noisy_data() {
        let params_u = uniform_params(11).unwrap();
        let params_v = uniform_params(9).unwrap();
        let kv_u = averaging_knots(&params_u, 2, 5).unwrap();
        let kv_v = averaging_knots(&params_v, 3, 4).unwrap();
        let grid = ParamGrid::new(params_u.clone(), params_v.clone()).unwrap();
        let coords: Vec<f64> = (0..11 * 9 * 2)
            .map(|k| (k as f64 * 0.83).cos() + 0.1 * (k as f64 * 2.11).sin())
            .collect();
        let data = DataGrid::from_coords(11, 9, 2, coords).unwrap();

        let a = assemble_dense(&kv_u, &kv_v, &grid).unwrap();
        let p = normal_solve(&a, &data).unwrap();
        // Gradient A^T (A p - q) evaluated from the raw entries.
        let k = a.num_cols();
        let dim = data.dim();
        let mut scale = 0.0_f64;
        let mut worst = 0.0_f64;
        for c in 0..dim {
            let mut grad = vec![0.0; k];
            for r in 0..a.num_rows() {
                let row = a.row(r);
                let mut ap = 0.0;
                for (i, &ai) in row.iter().enumerate() {
                    ap += ai * p.coords()[i * dim + c];
                }
                let resid = ap - data.coords()[r * dim + c];
                for (i, &ai) in row.iter().enumerate() {
                    grad[i] += ai * resid;
                }
                scale = scale.max(ap.abs()).max(data.coords()[r * dim + c].abs());
            }
            worst = worst.max(grad.iter().fold(0.0_f64, |m, g| m.max(g.abs())));
        }
        assert!(
            worst <= 1e-8 * scale.max(1.0),
            "normal-equation gradient max {worst} too large"
        );
    }

    #[test]
    fn power_iteration_matches_independent_estimate() {
        let params_u = uniform_params(4).unwrap();
        let params_v = uniform_params(4).unwrap();
        let kv_u = averaging_knots(&params_u, 2, 3).unwrap();
        let kv_v = averaging_knots(&params_v, 2, 3).unwrap();
        let grid = ParamGrid::new(params_u, params_v).unwrap();
        let a = assemble_dense(&kv_u, &kv_v, &grid).unwrap();
        let got = gram_spectrum(&a).lambda_max;

        // Independent oracle: 500 power steps from a different start vector,
        // largest-eigenvalue estimate via the norm ratio.
        let k = a.num_cols();
        let g = gram(&a);
        let mut x: Vec<f64> = (0..k).map(|i| 1.0 + (i as f64 * 0.7).sin()).collect();
        let mut lambda = 0.0;
        for _ in 0..500 {
            let mut y = vec![0.0; k];
            for i in 0..k {
                for j in 0..k {
                    y[i] += g[i * k + j] * x[j];
                }
            }
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            lambda = ny / nx;
            for (xi, yi) in x.iter_mut().zip(y) {
                *xi = yi / ny;
            }
        }
        assert!(
            (got - lambda).abs() <= 1e-6 * lambda,
            "power estimates disagree: {got} vs {lambda}"
        );
    }

    #[test]
    fn support_check_accepts_interpolation_setup() {
        for degree in 1..=3 {
            let params = uniform_params(8).unwrap();
            let kv = averaging_knots(&params, degree, 8).unwrap();
            let grid = ParamGrid::new(params.clone(), params.clone()).unwrap();
            assert!(
                schoenberg_whitney_check(&kv, &kv, &grid).unwrap(),
                "degree {degree} interpolation setup must pass"
            );
        }
    }

    #[test]
    fn support_check_accepts_dense_fitting_setup() {
        let params = uniform_params(251).unwrap();
        let kv = averaging_knots(&params, 3, 25).unwrap();
        let grid = ParamGrid::new(params.clone(), params).unwrap();
        assert!(schoenberg_whitney_check(&kv, &kv, &grid).unwrap());
    }

    #[test]
    fn support_check_rejects_clustered_parameters() {
        // A single parameter in the first span leaves later basis functions
        // unsupported when there are more controls than degree + 1.
        let full = uniform_params(9).unwrap();
        let kv = averaging_knots(&full, 1, 5).unwrap();
        let grid = ParamGrid::new(vec![0.05], vec![0.05]).unwrap();
        assert!(!schoenberg_whitney_check(&kv, &kv, &grid).unwrap());
    }

    #[test]
    fn oracle_refuses_oversized_instances() {
        let params = uniform_params(101).unwrap();
        let kv = KnotVector::new(1, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let grid = ParamGrid::new(params.clone(), params).unwrap();
        assert!(matches!(
            assemble_dense(&kv, &kv, &grid),
            Err(Error::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn dense_collocation_shape_validation() {
        assert!(DenseCollocation::new(2, 1, 2, vec![0.0; 3]).is_err());
        assert!(DenseCollocation::new(2, 1, 2, vec![0.0, f64::INFINITY, 0.0, 0.0]).is_err());
        assert!(DenseCollocation::new(2, 1, 2, vec![0.0; 4]).is_ok());
    }
}
