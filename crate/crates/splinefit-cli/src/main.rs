//! `splinefit` — fit tensor-product B-spline surfaces to gridded data.
//!
//! Subcommands: `generate` samples a built-in synthetic surface (optionally
//! with seeded Gaussian noise), `fit` runs one fitting configuration and
//! writes a JSON report, `sweep` ranks many step weights over an interval,
//! and `compare` runs two configurations on the same data side by side.
//!
//! Exit codes: 0 on success, 1 for runtime failures (unreadable files,
//! rank-deficient setups, shape mismatches), 2 for usage or configuration
//! errors, and 3 when the iteration diverges (partial outputs are still
//! written).

mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use splinefit::fitting::{
    run_fit, FitReport, Method, DEFAULT_EPSILON, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE,
};
use splinefit::harness::{
    add_noise, export_sweep_csv, export_trace_csv, generate_synthetic, run_sweep, NoiseSpec,
    SweepSpec, SyntheticSurface,
};
use splinefit::io::{
    read_grid, read_run_config, write_grid, write_net, write_obj, write_report,
    write_sweep_summary, InitKind, RunConfig, SweepSummary,
};
use splinefit::Error;

use pipeline::{export_sampled_obj, prepare, BasisSettings, CliError, CliResult, Prepared};

#[derive(Parser)]
#[command(
    name = "splinefit",
    version,
    about = "Fit tensor-product B-spline surfaces to gridded data",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a built-in synthetic surface onto a grid file.
    Generate(GenerateArgs),
    /// Fit a surface to a data grid using a JSON run configuration.
    Fit(FitArgs),
    /// Sweep the step weight over an interval and rank the runs.
    Sweep(SweepArgs),
    /// Run two configurations on the same data and report both.
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Which surface to sample: plane, peaks, or ridge.
    #[arg(long)]
    surface: SyntheticSurface,
    /// Grid rows to sample.
    #[arg(long)]
    rows: usize,
    /// Grid columns to sample.
    #[arg(long)]
    cols: usize,
    /// Output grid file.
    #[arg(long)]
    out: PathBuf,
    /// Standard deviation of additive Gaussian noise (omit for clean data).
    #[arg(long)]
    sigma: Option<f64>,
    /// Seed for the noise stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also export the sampled grid as a triangulated OBJ mesh.
    #[arg(long)]
    obj_out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Input data grid.
    #[arg(long)]
    data: PathBuf,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output JSON fit report.
    #[arg(long)]
    report: PathBuf,
    /// Optional per-iteration CSV trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Optional fitted control net as a grid file.
    #[arg(long)]
    net_out: Option<PathBuf>,
    /// Optional OBJ mesh sampled from the fitted surface.
    #[arg(long)]
    obj_out: Option<PathBuf>,
    /// Mesh sampling rows (defaults to the data rows).
    #[arg(long)]
    obj_rows: Option<usize>,
    /// Mesh sampling columns (defaults to the data columns).
    #[arg(long)]
    obj_cols: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    /// Input data grid.
    #[arg(long)]
    data: PathBuf,
    /// Update rule to sweep: LSPIA or AdagradLSPIA.
    #[arg(long)]
    method: Method,
    /// Low end of the sampled weight interval (exclusive; default 0).
    #[arg(long)]
    weight_min: Option<f64>,
    /// High end of the sampled weight interval (inclusive; defaults to 0.02
    /// for LSPIA and 20 for AdagradLSPIA).
    #[arg(long)]
    weight_max: Option<f64>,
    /// Number of weights to sample.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Basis degree along rows.
    #[arg(long, default_value_t = 3)]
    degree_u: usize,
    /// Basis degree along columns.
    #[arg(long, default_value_t = 3)]
    degree_v: usize,
    /// Control-net rows.
    #[arg(long)]
    ctrl_rows: usize,
    /// Control-net columns.
    #[arg(long)]
    ctrl_cols: usize,
    /// Control-net initialization: zero or subsample.
    #[arg(long, default_value_t = InitKind::Zero)]
    init: InitKind,
    /// Adaptive-weight damping term.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Stop when consecutive errors differ by less than this.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Iteration cap per run.
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iterations: usize,
    /// Additive Gaussian noise applied to the data before fitting.
    #[arg(long)]
    sigma: Option<f64>,
    /// Seed for the noise stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the sweep (defaults to all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output CSV with one record per sampled weight.
    #[arg(long)]
    out_csv: PathBuf,
    /// Optional JSON summary with the winning records.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Input data grid.
    #[arg(long)]
    data: PathBuf,
    /// First run configuration.
    #[arg(long)]
    config_a: PathBuf,
    /// Second run configuration.
    #[arg(long)]
    config_b: PathBuf,
    /// Output JSON holding both configurations and reports.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Compare(args) => cmd_compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> CliResult<()> {
    let clean = generate_synthetic(args.surface, args.rows, args.cols)?;
    let data = match args.sigma {
        Some(sigma) => add_noise(
            &clean,
            &NoiseSpec {
                sigma,
                seed: args.seed,
            },
        )?,
        None => clean,
    };
    write_grid(&args.out, &data)?;
    println!(
        "wrote {} x {} {} grid to {}",
        args.rows,
        args.cols,
        args.surface,
        args.out.display()
    );
    if let Some(path) = &args.obj_out {
        write_obj(path, &data)?;
        println!("wrote mesh to {}", path.display());
    }
    Ok(())
}

fn cmd_fit(args: FitArgs) -> CliResult<()> {
    let raw = read_grid(&args.data)?;
    let config = read_run_config(&args.config).map_err(CliError::Usage)?;
    let Prepared {
        data,
        grid,
        kv_u,
        kv_v,
        net,
    } = prepare(raw, &BasisSettings::from_config(&config))?;

    let (report, diverged) = match run_fit(&data, &grid, &kv_u, &kv_v, net, &config.fit_config())
    {
        Ok(report) => (report, None),
        Err(err @ Error::Diverged { .. }) => {
            let msg = err.to_string();
            let Error::Diverged { report, .. } = err else {
                unreachable!()
            };
            (*report, Some(msg))
        }
        Err(other) => return Err(other.into()),
    };

    write_report(&args.report, &report)?;
    println!("wrote report to {}", args.report.display());
    if let Some(path) = &args.trace {
        export_trace_csv(&report, path)?;
        println!("wrote trace to {}", path.display());
    }
    if let Some(path) = &args.net_out {
        write_net(path, &report.final_net)?;
        println!("wrote control net to {}", path.display());
    }
    if let Some(path) = &args.obj_out {
        let rows = args.obj_rows.unwrap_or_else(|| data.rows());
        let cols = args.obj_cols.unwrap_or_else(|| data.cols());
        export_sampled_obj(path, &report.final_net, &kv_u, &kv_v, rows, cols)?;
        println!("wrote mesh to {}", path.display());
    }

    match diverged {
        None => {
            println!(
                "{} after {} iterations; final error {:e}",
                if report.converged { "converged" } else { "stopped at the iteration cap" },
                report.iterations,
                report.final_error
            );
            Ok(())
        }
        Some(msg) => Err(CliError::Diverged(msg)),
    }
}

fn cmd_sweep(args: SweepArgs) -> CliResult<()> {
    let raw = read_grid(&args.data)?;
    let noise = args.sigma.map(|sigma| NoiseSpec {
        sigma,
        seed: args.seed,
    });
    let settings = BasisSettings {
        degree_u: args.degree_u,
        degree_v: args.degree_v,
        ctrl_rows: args.ctrl_rows,
        ctrl_cols: args.ctrl_cols,
        init: args.init,
        noise,
    };
    let Prepared {
        data,
        grid,
        kv_u,
        kv_v,
        net,
    } = prepare(raw, &settings)?;

    let (default_min, default_max) = match args.method {
        Method::Lspia => (0.0, 0.02),
        Method::AdagradLspia => (0.0, 20.0),
    };
    let spec = SweepSpec {
        method: args.method,
        weight_min: args.weight_min.unwrap_or(default_min),
        weight_max: args.weight_max.unwrap_or(default_max),
        sample_count: args.samples,
        epsilon: args.epsilon,
        tolerance: args.tolerance,
        max_iterations: args.max_iterations,
    };
    let result = match args.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| {
                CliError::Usage(Error::InvalidArgument(format!(
                    "cannot build a {jobs}-thread pool: {e}"
                )))
            })?
            .install(|| run_sweep(&data, &grid, &kv_u, &kv_v, &net, &spec)),
        None => run_sweep(&data, &grid, &kv_u, &kv_v, &net, &spec),
    }?;

    export_sweep_csv(&result, &args.out_csv)?;
    println!(
        "wrote {} sweep records to {}",
        result.records().len(),
        args.out_csv.display()
    );
    if let Some(path) = &args.summary {
        let summary = SweepSummary::from_result(&spec, &result);
        write_sweep_summary(path, &summary)?;
        println!("wrote summary to {}", path.display());
    }
    println!(
        "{} of {} runs converged",
        result.converged_count(),
        result.records().len()
    );
    if let Some(best) = result.min_error() {
        println!(
            "best error {:e} at weight {} after {} iterations",
            best.final_error, best.weight, best.iterations
        );
    }
    Ok(())
}

/// One half of a comparison: the configuration that ran, whether it tripped
/// the divergence guard, and the (possibly partial) report.
#[derive(Serialize)]
struct CompareSide {
    config: RunConfig,
    diverged: bool,
    report: FitReport,
}

#[derive(Serialize)]
struct CompareOutput {
    a: CompareSide,
    b: CompareSide,
}

fn cmd_compare(args: CompareArgs) -> CliResult<()> {
    let raw = read_grid(&args.data)?;
    let config_a = read_run_config(&args.config_a).map_err(CliError::Usage)?;
    let config_b = read_run_config(&args.config_b).map_err(CliError::Usage)?;

    let mut divergences = Vec::new();
    let mut side = |label: &str, config: &RunConfig| -> CliResult<CompareSide> {
        let Prepared {
            data,
            grid,
            kv_u,
            kv_v,
            net,
        } = prepare(raw.clone(), &BasisSettings::from_config(config))?;
        match run_fit(&data, &grid, &kv_u, &kv_v, net, &config.fit_config()) {
            Ok(report) => Ok(CompareSide {
                config: config.clone(),
                diverged: false,
                report,
            }),
            Err(err @ Error::Diverged { .. }) => {
                divergences.push(format!("run {label}: {err}"));
                let Error::Diverged { report, .. } = err else {
                    unreachable!()
                };
                Ok(CompareSide {
                    config: config.clone(),
                    diverged: true,
                    report: *report,
                })
            }
            Err(other) => Err(other.into()),
        }
    };
    let output = CompareOutput {
        a: side("a", &config_a)?,
        b: side("b", &config_b)?,
    };

    let mut text = serde_json::to_string_pretty(&output).map_err(|e| {
        CliError::Lib(Error::InvalidArgument(format!(
            "cannot serialize comparison: {e}"
        )))
    })?;
    text.push('\n');
    std::fs::write(&args.out, text).map_err(|e| {
        CliError::Lib(Error::Io {
            path: args.out.clone(),
            source: e,
        })
    })?;
    println!("wrote comparison to {}", args.out.display());
    for (label, s) in [("a", &output.a), ("b", &output.b)] {
        println!(
            "{label}: {} after {} iterations; final error {:e}",
            if s.diverged {
                "diverged"
            } else if s.report.converged {
                "converged"
            } else {
                "hit the iteration cap"
            },
            s.report.iterations,
            s.report.final_error
        );
    }

    if divergences.is_empty() {
        Ok(())
    } else {
        Err(CliError::Diverged(divergences.join("; ")))
    }
}
