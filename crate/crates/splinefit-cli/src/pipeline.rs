//! Shared assembly between subcommands: noise application, parameter and
//! knot construction, the coverage gate, control-net initialization, and the
//! process exit-code policy.

use std::fmt;
use std::path::Path;

use splinefit::basis::{averaging_knots, sample_surface, uniform_params, KnotVector, ParamGrid};
use splinefit::grid::{ControlNet, DataGrid};
use splinefit::harness::{add_noise, NoiseSpec};
use splinefit::io::{write_obj, InitKind, RunConfig};
use splinefit::oracle::schoenberg_whitney_check;
use splinefit::Error;

/// CLI-level failures, separated by how the process should exit:
/// usage and configuration problems exit 2, divergence after writing the
/// partial outputs exits 3, and everything else exits 1.
#[derive(Debug)]
pub enum CliError {
    /// A flag or configuration file is unusable.
    Usage(Error),
    /// The coverage gate failed: some basis function sees no parameter.
    Support,
    /// The iteration diverged; whatever partial outputs were requested have
    /// already been written.
    Diverged(String),
    /// Any other library failure (I/O, parsing, shape mismatches, ...).
    Lib(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Support => 1,
            CliError::Diverged(_) => 3,
            CliError::Lib(err) => match err {
                Error::InvalidArgument(_) => 2,
                Error::Diverged { .. } => 3,
                _ => 1,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(err) => write!(f, "{err}"),
            CliError::Support => write!(
                f,
                "coverage check failed: every basis function needs a parameter \
                 where it is positive (Schoenberg-Whitney); the control net is \
                 too large or the data too thin for a unique fit"
            ),
            CliError::Diverged(msg) => write!(f, "{msg}; partial outputs were written"),
            CliError::Lib(err) => write!(f, "{err}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        CliError::Lib(err)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Everything a fitting run needs, derived from the raw data grid and the
/// basis settings.
pub struct Prepared {
    pub data: DataGrid,
    pub grid: ParamGrid,
    pub kv_u: KnotVector,
    pub kv_v: KnotVector,
    pub net: ControlNet,
}

/// Basis and initialization settings shared by the subcommands.
pub struct BasisSettings {
    pub degree_u: usize,
    pub degree_v: usize,
    pub ctrl_rows: usize,
    pub ctrl_cols: usize,
    pub init: InitKind,
    pub noise: Option<NoiseSpec>,
}

impl BasisSettings {
    pub fn from_config(config: &RunConfig) -> Self {
        BasisSettings {
            degree_u: config.degree_u,
            degree_v: config.degree_v,
            ctrl_rows: config.ctrl_rows,
            ctrl_cols: config.ctrl_cols,
            init: config.init,
            noise: config.noise,
        }
    }
}

/// Applies noise, derives uniform parameters and averaged knots from the data
/// shape, gates on the coverage condition, and initializes the control net.
pub fn prepare(raw: DataGrid, settings: &BasisSettings) -> CliResult<Prepared> {
    let data = match &settings.noise {
        Some(spec) => add_noise(&raw, spec)?,
        None => raw,
    };
    let u = uniform_params(data.rows())?;
    let v = uniform_params(data.cols())?;
    let kv_u = averaging_knots(&u, settings.degree_u, settings.ctrl_rows)?;
    let kv_v = averaging_knots(&v, settings.degree_v, settings.ctrl_cols)?;
    let grid = ParamGrid::new(u, v)?;
    if !schoenberg_whitney_check(&kv_u, &kv_v, &grid)? {
        return Err(CliError::Support);
    }
    let net = match settings.init {
        InitKind::Zero => ControlNet::zeros(settings.ctrl_rows, settings.ctrl_cols, data.dim())?,
        InitKind::Subsample => {
            ControlNet::subsample(&data, settings.ctrl_rows, settings.ctrl_cols)?
        }
    };
    Ok(Prepared {
        data,
        grid,
        kv_u,
        kv_v,
        net,
    })
}

/// Samples the fitted surface on a uniform `rows x cols` grid and writes it
/// as a triangulated OBJ mesh.
pub fn export_sampled_obj(
    path: &Path,
    net: &ControlNet,
    kv_u: &KnotVector,
    kv_v: &KnotVector,
    rows: usize,
    cols: usize,
) -> CliResult<()> {
    let grid = ParamGrid::new(uniform_params(rows)?, uniform_params(cols)?)?;
    let sampled = sample_surface(net, kv_u, kv_v, &grid)?;
    write_obj(path, &sampled)?;
    Ok(())
}
