//! Rectangular grids of d-dimensional points.
//!
//! Both the fitting targets ([`DataGrid`]) and the unknowns of the
//! least-squares problem ([`ControlNet`]) are rectangular grids of points in
//! `R^dim`, stored row-major with coordinates interleaved.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_shape(rows: usize, cols: usize, dim: usize, len: usize, what: &str) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument(format!(
            "{what} must have at least one row and one column (got {rows} x {cols})"
        )));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "{what} points must have at least one coordinate"
        )));
    }
    let expected = rows * cols * dim;
    if len != expected {
        return Err(Error::DimensionMismatch(format!(
            "{what} of {rows} x {cols} x {dim} needs {expected} coordinates, got {len}"
        )));
    }
    Ok(())
}

fn check_finite(coords: &[f64], what: &str) -> Result<()> {
    if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "{what} coordinate {pos} is not finite"
        )));
    }
    Ok(())
}

/// A `rows x cols` grid of points in `R^dim`, stored row-major: the point at
/// grid position `(r, c)` occupies coordinates `[(r * cols + c) * dim ..][..dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataGrid {
    rows: usize,
    cols: usize,
    dim: usize,
    coords: Vec<f64>,
}

impl DataGrid {
    /// Builds a grid from interleaved coordinates. All coordinates must be
    /// finite and the buffer length must equal `rows * cols * dim`.
    pub fn from_coords(rows: usize, cols: usize, dim: usize, coords: Vec<f64>) -> Result<Self> {
        check_shape(rows, cols, dim, coords.len(), "data grid")?;
        check_finite(&coords, "data grid")?;
        Ok(DataGrid {
            rows,
            cols,
            dim,
            coords,
        })
    }

    /// Grid with every coordinate zero.
    pub fn zeros(rows: usize, cols: usize, dim: usize) -> Result<Self> {
        check_shape(rows, cols, dim, rows * cols * dim, "data grid")?;
        Ok(DataGrid {
            rows,
            cols,
            dim,
            coords: vec![0.0; rows * cols * dim],
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of points in the grid.
    pub fn num_points(&self) -> usize {
        self.rows * self.cols
    }

    /// Coordinates of the point at `(r, c)`.
    pub fn point(&self, r: usize, c: usize) -> &[f64] {
        let start = (r * self.cols + c) * self.dim;
        &self.coords[start..start + self.dim]
    }

    /// Mutable coordinates of the point at `(r, c)`.
    pub fn point_mut(&mut self, r: usize, c: usize) -> &mut [f64] {
        let start = (r * self.cols + c) * self.dim;
        &mut self.coords[start..start + self.dim]
    }

    /// Full interleaved coordinate buffer.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// An `m x n` net of control points in `R^dim`; the unknowns of the fit.
/// Storage matches [`DataGrid`]: row-major, coordinates interleaved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlNet {
    m: usize,
    n: usize,
    dim: usize,
    coords: Vec<f64>,
}

impl ControlNet {
    /// Builds a net from interleaved coordinates. All coordinates must be
    /// finite and the buffer length must equal `m * n * dim`.
    pub fn from_coords(m: usize, n: usize, dim: usize, coords: Vec<f64>) -> Result<Self> {
        check_shape(m, n, dim, coords.len(), "control net")?;
        check_finite(&coords, "control net")?;
        Ok(ControlNet { m, n, dim, coords })
    }

    /// Net with every control point at the origin; the default initializer.
    pub fn zeros(m: usize, n: usize, dim: usize) -> Result<Self> {
        check_shape(m, n, dim, m * n * dim, "control net")?;
        Ok(ControlNet {
            m,
            n,
            dim,
            coords: vec![0.0; m * n * dim],
        })
    }

    /// Optional initializer that copies an evenly strided subsample of the
    /// data grid: control point `(i, j)` takes the data point nearest to the
    /// fractional position `(i / (m-1), j / (n-1))` of the grid.
    pub fn subsample(data: &DataGrid, m: usize, n: usize) -> Result<Self> {
        check_shape(m, n, data.dim(), m * n * data.dim(), "control net")?;
        let pick = |k: usize, count: usize, avail: usize| -> usize {
            if count <= 1 {
                return 0;
            }
            let pos = (k as f64) * ((avail - 1) as f64) / ((count - 1) as f64);
            pos.round() as usize
        };
        let mut coords = Vec::with_capacity(m * n * data.dim());
        for i in 0..m {
            let r = pick(i, m, data.rows());
            for j in 0..n {
                let c = pick(j, n, data.cols());
                coords.extend_from_slice(data.point(r, c));
            }
        }
        ControlNet::from_coords(m, n, data.dim(), coords)
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

    /// Number of control points.
    pub fn num_points(&self) -> usize {
        self.m * self.n
    }

    /// Coordinates of the control point at `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.n + j) * self.dim;
        &self.coords[start..start + self.dim]
    }

    /// Mutable coordinates of the control point at `(i, j)`.
    pub fn point_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let start = (i * self.n + j) * self.dim;
        &mut self.coords[start..start + self.dim]
    }

    /// Full interleaved coordinate buffer.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub(crate) fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }
}

impl<'de> Deserialize<'de> for ControlNet {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            m: usize,
            n: usize,
            dim: usize,
            coords: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        ControlNet::from_coords(raw.m, raw.n, raw.dim, raw.coords)
            .map_err(serde::de::Error::custom)
    }
}
