//! `cascade`: command-line access to simulation, frozen-system analysis and
//! regime mapping.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 invalid bisection bracket.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;
use tipping_cascade::bifurcation::{branch_diagram, FoldCurveOptions};
use tipping_cascade::output;
use tipping_cascade::regimes::{
    bisect_boundary, sweep_regimes, trace_boundary_from_map, BisectOptions, BoundaryCurve, BoundaryKind, ScanAxis,
    SweepOptions,
};
use tipping_cascade::{
    classify_config, cusp_points, fold_curves, frozen_equilibria, frozen_tipping_trajectory, integrate_cascade,
    locate_events, predict_dwub, BoundaryError, ConfigError, IntegrationError,
};

pub mod config;
pub mod figures;

use config::{ConfigDocument, CouplingKind, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "cascade", version, about = "Coupled tipping elements under ramp forcing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Write the data behind a figure class (3, 4, 5, 6, 7, 8 or 9) into the `--out` directory.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u8).range(3..=9))]
    pub seed_figure: Option<u8>,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON run configuration; absent keys take default values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Set a configuration key, e.g. `lambda_plus=1` or `solver.rel_tol=1e-10`. Repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Coupling family.
    #[arg(long, global = true, value_enum)]
    pub coupling: Option<CouplingKind>,
    /// Coupling strength.
    #[arg(long, global = true)]
    pub b: Option<f64>,
    /// Timescale ratio.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Output file, `-` for standard output (the default); a directory for `--seed-figure`.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps and boundary tracing.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the cascade and write the trajectory CSV.
    Simulate {
        /// Resample on a uniform grid with this spacing instead of writing solver nodes.
        #[arg(long)]
        dt: Option<f64>,
        /// Also write the located events as JSON.
        #[arg(long, value_name = "PATH")]
        events: Option<PathBuf>,
    },
    /// Simulate and classify; writes the JSON report.
    Classify,
    /// Single-element branches over a lambda grid, or all cascade equilibria with `--coupled`.
    FrozenBranches {
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        lambda_min: f64,
        #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
        lambda_max: f64,
        #[arg(long, default_value_t = 801)]
        samples: usize,
        #[arg(long)]
        coupled: bool,
    },
    /// Fold curves in the (lambda, b) plane, with cusp rows.
    FoldCurves {
        #[arg(long, default_value_t = 0.05)]
        b_min: f64,
        #[arg(long, default_value_t = 10.0)]
        b_max: f64,
    },
    /// Frozen upstream tipping path from the fold at lambda = 2.
    TippingTrajectory,
    /// Frozen-limit prediction of downstream tipping within upstream tipping.
    PredictDwub,
    /// Classify every cell of the (b, epsilon) grid.
    RegimeMap,
    /// Bisect one boundary point, or trace a boundary across a coarse map.
    Boundary {
        /// Boundary to locate: onset_alignment, offset_alignment, tracking_tipping, overshoot_extent or intermediate_state.
        #[arg(long, value_parser = parse_kind)]
        kind: BoundaryKind,
        /// Scan parameter for a single point.
        #[arg(long, value_parser = parse_axis, default_value = "b")]
        axis: ScanAxis,
        /// Bracket `lo,hi` of the scan parameter; without it the boundary is traced over the grids.
        #[arg(long, value_name = "LO,HI")]
        bracket: Option<String>,
        /// Which sign change along each map row to trace (0 = first).
        #[arg(long, default_value_t = 0)]
        occurrence: usize,
        /// Bisection tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn parse_kind(s: &str) -> Result<BoundaryKind, String> {
    s.parse()
}

fn parse_axis(s: &str) -> Result<ScanAxis, String> {
    match s {
        "b" => Ok(ScanAxis::B),
        "epsilon" | "eps" => Ok(ScanAxis::Epsilon),
        _ => Err(format!("unknown axis `{s}` (expected b or epsilon)")),
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Bracket(String),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Bracket(_) => 4,
        }
    }
}

impl From<IntegrationError> for CliError {
    fn from(e: IntegrationError) -> Self {
        match e {
            IntegrationError::Config(c) => CliError::Config(c),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<BoundaryError> for CliError {
    fn from(e: BoundaryError) -> Self {
        match e {
            BoundaryError::BracketInvalid { .. } => CliError::Bracket(e.to_string()),
            BoundaryError::Simulation { source: IntegrationError::Config(c), .. } => CliError::Config(c),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

/// Parses `argv` and runs; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(summary) => {
            eprintln!("{summary}");
            0
        }
        Err(CliError::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Resolves the run configuration from `--config`, `--coupling`,
/// `--override`, `--b` and `--epsilon`, in that order.
pub fn resolve_config(common: &CommonArgs) -> Result<RunConfig, ConfigError> {
    let mut doc = match &common.config {
        Some(path) => ConfigDocument::from_path(path)?,
        None => ConfigDocument::default(),
    };
    if let Some(kind) = common.coupling {
        doc.set("coupling.kind", kind.as_str().into())?;
    }
    for assignment in &common.overrides {
        doc.apply_override(assignment)?;
    }
    if let Some(b) = common.b {
        doc.set("coupling.b", b.into())?;
    }
    if let Some(eps) = common.epsilon {
        doc.set("epsilon", eps.into())?;
    }
    doc.parse()
}

fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match out {
        Some(path) if path != Path::new("-") => Ok(Box::new(BufWriter::new(File::create(path)?))),
        _ => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn write_json<T: serde::Serialize>(out: &Option<PathBuf>, value: &T) -> Result<(), CliError> {
    let mut w = open_out(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn parse_bracket(s: &str) -> Result<(f64, f64), ConfigError> {
    let bad = || ConfigError::invalid("--bracket", format!("expected `lo,hi`, got `{s}`"));
    let (lo, hi) = s.split_once(',').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// Runs the parsed command and returns the one-line summary.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let run = resolve_config(&cli.common)?;
    let out = &cli.common.out;
    if let Some(n) = cli.seed_figure {
        let dir = out
            .as_deref()
            .filter(|p| *p != Path::new("-"))
            .ok_or_else(|| ConfigError::invalid("--out", "--seed-figure needs an output directory"))?;
        let manifest = figures::seed_figure(n, &run, dir, cli.common.jobs)?;
        return Ok(format!("seed-figure {n}: {} files in {}", manifest.files.len(), dir.display()));
    }
    let Some(command) = &cli.command else {
        return Err(ConfigError::invalid("command", "no subcommand given (see --help)").into());
    };
    let config = run.cascade()?;

    match command {
        Command::Simulate { dt, events } => {
            for warning in config.solver.warnings(&config.shift) {
                eprintln!("warning: {warning}");
            }
            let traj = integrate_cascade(&config)?;
            let mut w = open_out(out)?;
            match dt {
                Some(dt) if *dt > 0.0 => {
                    let n = ((traj.t_end() - traj.t_start()) / dt).floor() as usize;
                    let grid = (0..=n).map(|i| traj.t_start() + *dt * i as f64);
                    output::write_trajectory(&mut w, traj.resample(grid))?;
                }
                Some(_) => return Err(ConfigError::invalid("--dt", "must be positive").into()),
                None => output::write_trajectory(&mut w, traj.nodes())?,
            }
            w.flush()?;
            let located = locate_events(&traj, &config);
            if let Some(path) = events {
                write_json(&Some(path.clone()), &serde_json::json!({ "events": located }))?;
            }
            Ok(format!(
                "simulate: {} nodes on [{}, {}], {} events",
                traj.len(),
                output::fmt_num(traj.t_start()),
                output::fmt_num(traj.t_end()),
                located.len()
            ))
        }
        Command::Classify => {
            let (_, report) = classify_config(&config, &run.classify)?;
            write_json(out, &report)?;
            Ok(format!(
                "classify: {} (b = {}, epsilon = {}{})",
                report.scenario,
                config.coupling.strength(),
                config.epsilon,
                if report.boundary_flag { ", on a boundary" } else { "" }
            ))
        }
        Command::FrozenBranches { lambda_min, lambda_max, samples, coupled } => {
            if *samples < 2 || lambda_min >= lambda_max {
                return Err(ConfigError::invalid("--samples", "need at least 2 samples over a nonempty range").into());
            }
            let lambdas: Vec<f64> = (0..*samples)
                .map(|i| lambda_min + (lambda_max - lambda_min) * i as f64 / (*samples - 1) as f64)
                .collect();
            let mut w = open_out(out)?;
            let rows = if *coupled {
                let eqs: Vec<_> =
                    lambdas.iter().flat_map(|&l| frozen_equilibria(l, &config.coupling, config.epsilon)).collect();
                output::write_equilibria(&mut w, &eqs)?;
                eqs.len()
            } else {
                let rows = branch_diagram(lambdas);
                output::write_branch_diagram(&mut w, &rows)?;
                rows.len()
            };
            w.flush()?;
            Ok(format!("frozen-branches: {rows} rows"))
        }
        Command::FoldCurves { b_min, b_max } => {
            let b = config.coupling.strength();
            let lo = b_min.min(b);
            let hi = b_max.max(b);
            if !(lo > 0.0 && lo < hi) {
                return Err(ConfigError::invalid("--b-min", "need 0 < b_min < b_max").into());
            }
            let opts = FoldCurveOptions { b_range: (lo, hi), ..Default::default() };
            let curves = fold_curves(&config.coupling, &opts);
            let cusps = cusp_points(&config.coupling);
            let mut w = open_out(out)?;
            output::write_fold_curves(&mut w, &curves, &cusps)?;
            w.flush()?;
            let points: usize = curves.iter().map(|c| c.points.len()).sum();
            Ok(format!("fold-curves: {} curves, {points} points, {} cusps", curves.len(), cusps.len()))
        }
        Command::TippingTrajectory => {
            let path = frozen_tipping_trajectory();
            let mut w = open_out(out)?;
            output::write_tipping_path(&mut w, &path, &config.coupling)?;
            w.flush()?;
            Ok(format!("tipping-trajectory: {} points over t = {}", path.times.len(), output::fmt_num(path.duration())))
        }
        Command::PredictDwub => {
            let prediction = predict_dwub(&config.coupling, &config.shift);
            write_json(out, &prediction)?;
            Ok(format!("predict-dwub: {}", prediction.outcome.as_str()))
        }
        Command::RegimeMap => {
            let opts = SweepOptions { jobs: cli.common.jobs, classify: run.classify };
            let map = sweep_regimes(&config, &run.b_grid()?, &run.eps_grid(), &opts)?;
            let mut w = open_out(out)?;
            output::write_regime_map(&mut w, &map)?;
            w.flush()?;
            Ok(format!(
                "regime-map: {} cells, {} failed, provenance {}",
                map.cells.len(),
                map.failures(),
                &map.provenance[..12]
            ))
        }
        Command::Boundary { kind, axis, bracket, occurrence, tol } => {
            let opts = BisectOptions { tol: *tol, classify: run.classify, ..Default::default() };
            let curve = match bracket {
                Some(bracket) => {
                    let bracket = parse_bracket(bracket)?;
                    let fixed = match axis {
                        ScanAxis::B => config.epsilon,
                        ScanAxis::Epsilon => config.coupling.strength(),
                    };
                    let p = bisect_boundary(*kind, &config, *axis, fixed, bracket, &opts)?;
                    BoundaryCurve {
                        kind: *kind,
                        scan_axis: *axis,
                        points: vec![Some(p)],
                        tolerance_achieved: p.residual,
                    }
                }
                None => {
                    let sweep = SweepOptions { jobs: cli.common.jobs, classify: run.classify };
                    let map = sweep_regimes(&config, &run.b_grid()?, &run.eps_grid(), &sweep)?;
                    trace_boundary_from_map(*kind, &config, &map, *occurrence, &opts, cli.common.jobs)
                }
            };
            let mut w = open_out(out)?;
            output::write_boundaries(&mut w, std::slice::from_ref(&curve))?;
            w.flush()?;
            let found = curve.points.iter().flatten().count();
            Ok(format!(
                "boundary {}: {found} of {} points, residual <= {}",
                kind.as_str(),
                curve.points.len(),
                output::fmt_num(curve.tolerance_achieved)
            ))
        }
    }
}
