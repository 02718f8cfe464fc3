//! Data behind each figure class, written as plot-ready files.
//!
//! | class | contents |
//! |-------|----------|
//! | 3 | upstream response to shifts ending above (`lambda_plus = 4`) and below (`lambda_plus = 1`) the fold, single-element branches |
//! | 4, 5 | linear coupling panels: trajectories, frozen equilibria, fold curves |
//! | 6 | linear regime map and onset, offset and tracking boundaries |
//! | 7, 8 | localised coupling panels, fold curves with the cusp |
//! | 9 | localised regime map, onset, offset and overshoot boundaries, and the tracking boundary at `w = 1` |
//!
//! The panel strengths are not recoverable from the figures themselves; the
//! values below were chosen to land one panel in each regime at the default
//! `eps = 0.05`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use tipping_cascade::bifurcation::{branch_diagram, FoldCurveOptions};
use tipping_cascade::model::upper_branch;
use tipping_cascade::output;
use tipping_cascade::regimes::{
    sweep_regimes, trace_boundary, trace_boundary_from_map, BisectOptions, BoundaryCurve, BoundaryKind, ScanAxis,
    SweepOptions,
};
use tipping_cascade::{
    classify_config, cusp_points, fold_curves, frozen_equilibria, CascadeConfig, ClassificationReport, ConfigError,
};

use crate::config::{CouplingKind, RunConfig};
use crate::CliError;

pub const LINEAR_PANELS: [f64; 5] = [0.3, 0.55, 1.0, 2.0, 4.5];
pub const LOCALISED_PANELS: [f64; 5] = [1.0, 2.1, 2.5, 4.0, 6.0];

#[derive(Debug, Clone, Serialize)]
pub struct Panel {
    pub b: f64,
    pub trajectory: String,
    pub equilibria: String,
    pub report: ClassificationReport,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Manifest {
    pub figure: u8,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub panels: Vec<Panel>,
    /// Strengths bounding the overshoot window, for the localised family.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overshoot_window: Option<(f64, f64)>,
}

struct Writer<'a> {
    dir: &'a Path,
    manifest: Manifest,
}

impl Writer<'_> {
    fn file(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
    ) -> Result<String, CliError> {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        body(&mut w)?;
        w.flush()?;
        self.manifest.files.push(name.to_string());
        Ok(name.to_string())
    }
}

/// Writes the files for figure class `n` into `dir` (created if missing),
/// plus `manifest.json`.
pub fn seed_figure(n: u8, run: &RunConfig, dir: &Path, jobs: Option<usize>) -> Result<Manifest, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut w = Writer { dir, manifest: Manifest { figure: n, ..Default::default() } };
    let mut run = *run;
    match n {
        3 => upstream_cases(&run, &mut w)?,
        4 | 5 => {
            run.coupling.kind = CouplingKind::Linear;
            panels(&run, &LINEAR_PANELS, &mut w)?
        }
        6 => {
            run.coupling.kind = CouplingKind::Linear;
            regimes(&run, jobs, &mut w)?
        }
        7 | 8 => {
            run.coupling = crate::config::CouplingSection { kind: CouplingKind::Localised, ..Default::default() };
            panels(&run, &LOCALISED_PANELS, &mut w)?
        }
        9 => {
            run.coupling = crate::config::CouplingSection { kind: CouplingKind::Localised, ..Default::default() };
            regimes(&run, jobs, &mut w)?
        }
        _ => return Err(ConfigError::invalid("--seed-figure", format!("no figure class {n}")).into()),
    }
    let mut manifest = w.manifest;
    manifest.files.push("manifest.json".into());
    let f = BufWriter::new(File::create(dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(f, &manifest).map_err(std::io::Error::from)?;
    Ok(manifest)
}

fn upstream_cases(run: &RunConfig, w: &mut Writer) -> Result<(), CliError> {
    for lambda_plus in [4.0, 1.0] {
        let mut config = run.cascade()?;
        config.shift.lambda_plus = lambda_plus;
        config.offset_threshold_w = config.offset_threshold_w.min(upper_branch(lambda_plus).unwrap_or(2.0) - 1e-3);
        let traj = tipping_cascade::integrate_cascade(&config)?;
        w.file(&format!("upstream_lambda_plus_{lambda_plus}.csv"), |f| output::write_trajectory(f, traj.nodes()))?;
    }
    let rows = branch_diagram((0..=800).map(|i| -3.0 + 0.01 * i as f64));
    w.file("branches.csv", |f| output::write_branch_diagram(f, &rows))?;
    Ok(())
}

fn panels(run: &RunConfig, strengths: &[f64], w: &mut Writer) -> Result<(), CliError> {
    let base = run.cascade()?;
    for (i, &b) in strengths.iter().enumerate() {
        let config = base.with_strength(b);
        let (traj, report) = classify_config(&config, &run.classify)?;
        let trajectory = w.file(&format!("panel_{i}_trajectory.csv"), |f| output::write_trajectory(f, traj.nodes()))?;
        let eqs: Vec<_> = (0..=160)
            .map(|k| -3.0 + 0.05 * k as f64)
            .flat_map(|l| frozen_equilibria(l, &config.coupling, config.epsilon))
            .collect();
        let equilibria = w.file(&format!("panel_{i}_equilibria.csv"), |f| output::write_equilibria(f, &eqs))?;
        w.manifest.panels.push(Panel { b, trajectory, equilibria, report });
    }
    let opts = FoldCurveOptions { b_range: (0.05, 100.0), initial_samples: 400, ..Default::default() };
    let curves = fold_curves(&base.coupling, &opts);
    let cusps = cusp_points(&base.coupling);
    w.file("fold_curves.csv", |f| output::write_fold_curves(f, &curves, &cusps))?;
    Ok(())
}

/// Strengths where the overshoot of `M` through 2 starts (the cusp strength)
/// and where `M` no longer falls back below 2 on the new upstream branch.
fn overshoot_window(config: &CascadeConfig) -> (f64, f64) {
    let a = config.coupling.offset();
    let x_plus = upper_branch(config.shift.lambda_plus).unwrap_or(2.0);
    let unit = config.coupling.with_strength(1.0).value(x_plus) - a;
    (2.0 - a, (2.0 - a) / unit)
}

fn regimes(run: &RunConfig, jobs: Option<usize>, w: &mut Writer) -> Result<(), CliError> {
    let config = run.cascade()?;
    let map = sweep_regimes(&config, &run.b_grid()?, &run.eps_grid(), &SweepOptions { jobs, classify: run.classify })?;
    w.file("regime_map.csv", |f| output::write_regime_map(f, &map))?;

    let opts = BisectOptions { classify: run.classify, ..Default::default() };
    let trace = |kind| trace_boundary_from_map(kind, &config, &map, 0, &opts, jobs);
    let mut curves: Vec<BoundaryCurve> =
        vec![trace(BoundaryKind::OnsetAlignment), trace(BoundaryKind::OffsetAlignment)];
    match run.coupling.kind {
        CouplingKind::Linear => curves.push(trace(BoundaryKind::TrackingTipping)),
        CouplingKind::Localised => {
            curves.push(trace(BoundaryKind::OvershootExtent));
            let mut tracking = config;
            tracking.offset_threshold_w = 1.0;
            let window = overshoot_window(&config);
            w.manifest.overshoot_window = Some(window);
            let samples: Vec<_> = map.eps_grid.iter().map(|&e| (e, window)).collect();
            curves.push(trace_boundary(BoundaryKind::TrackingTipping, &tracking, ScanAxis::B, &samples, &opts, jobs));
        }
    }
    w.file("boundaries.csv", |f| output::write_boundaries(f, &curves))?;
    Ok(())
}
