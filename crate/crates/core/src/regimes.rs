//! Scenario maps over coupling strength `b` and timescale ratio `eps`, and
//! bisection of the boundaries between regimes.
//!
//! Boundaries are defined by a signed gap evaluated on full simulations:
//!
//! | kind | gap |
//! |------|-----|
//! | `onset_alignment` | `t_on^D - t_on^U` |
//! | `offset_alignment` | `t_off^D - t_off^U` |
//! | `tracking_tipping` | `+1` if the downstream element tips, else `-1` |
//! | `overshoot_extent` | `+1` if `M(x(t))` crosses back below 2, else `-1` |
//! | `intermediate_state` | `+1` if a third stable state is visited, else `-1` |
//!
//! A missing downstream event counts as `+inf`, i.e. "later than any time".

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::{classify_trajectory, ClassificationReport, ClassifyOptions, Scenario};
use crate::error::{BoundaryError, ConfigError, IntegrationError};
use crate::integrator::integrate_cascade;
use crate::model::{CascadeConfig, MIN_EPSILON};

/// `n` points from `lo` to `hi`, equally spaced in `log`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect(),
    }
}

pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Default `b` range for the coupling family of `config`.
pub fn default_b_range(config: &CascadeConfig) -> (f64, f64) {
    match config.coupling {
        crate::model::Coupling::Linear { .. } => (0.3, 6.0),
        crate::model::Coupling::Localised { .. } => (1.5, 8.0),
    }
}

pub const DEFAULT_EPS_RANGE: (f64, f64) = (1e-2, 1e2);
pub const DEFAULT_B_SAMPLES: usize = 60;
pub const DEFAULT_EPS_SAMPLES: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub message: String,
}

impl From<&IntegrationError> for CellFailure {
    fn from(err: &IntegrationError) -> Self {
        CellFailure { message: err.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeCell {
    pub b: f64,
    pub epsilon: f64,
    pub b_index: usize,
    pub eps_index: usize,
    pub result: Result<ClassificationReport, CellFailure>,
}

impl RegimeCell {
    pub fn scenario(&self) -> Option<Scenario> {
        self.result.as_ref().ok().map(|r| r.scenario)
    }
}

/// Classified `(b, eps)` grid; cells are stored `eps`-major, `b` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeMap {
    pub b_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub cells: Vec<RegimeCell>,
    /// SHA-256 of the template configuration and options.
    pub provenance: String,
}

impl RegimeMap {
    pub fn cell(&self, b_index: usize, eps_index: usize) -> &RegimeCell {
        &self.cells[eps_index * self.b_grid.len() + b_index]
    }

    /// Cells at fixed `eps`, in increasing `b`.
    pub fn row(&self, eps_index: usize) -> &[RegimeCell] {
        let n = self.b_grid.len();
        &self.cells[eps_index * n..(eps_index + 1) * n]
    }

    pub fn count(&self, scenario: Scenario) -> usize {
        self.cells.iter().filter(|c| c.scenario() == Some(scenario)).count()
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.result.is_err()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepOptions {
    /// Worker cap; `None` uses rayon's default.
    pub jobs: Option<usize>,
    pub classify: ClassifyOptions,
}

fn check_grid(name: &str, grid: &[f64], min: f64) -> Result<(), ConfigError> {
    if grid.is_empty() {
        return Err(ConfigError::invalid(name, "grid is empty"));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(ConfigError::invalid(name, "grid must be strictly increasing"));
    }
    if grid.iter().any(|v| !v.is_finite() || *v < min) {
        return Err(ConfigError::invalid(name, format!("grid values must be finite and at least {min}")));
    }
    Ok(())
}

fn provenance(template: &CascadeConfig, b_grid: &[f64], eps_grid: &[f64], opts: &ClassifyOptions) -> String {
    let doc = serde_json::json!({ "config": template, "b": b_grid, "epsilon": eps_grid, "classify": opts });
    let digest = Sha256::digest(doc.to_string().as_bytes());
    digest.iter().map(|byte| format!("{byte:02x}")).collect()
}

/// Runs `f` on a pool of `jobs` workers, or rayon's global pool.
pub(crate) fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

/// Simulates and classifies one parameter pair; horizon overruns are
/// classified on the partial trajectory.
pub fn evaluate_cell(
    template: &CascadeConfig,
    b: f64,
    epsilon: f64,
    opts: &ClassifyOptions,
) -> Result<ClassificationReport, IntegrationError> {
    let config = template.with_strength(b).with_epsilon(epsilon);
    let traj = integrate_cascade(&config)?;
    Ok(classify_trajectory(&traj, &config, opts))
}

/// Classifies every cell of the `(b, eps)` grid.
///
/// Cells are independent and run in parallel; results are assembled by grid
/// index, so the map does not depend on scheduling. A failed cell is
/// recorded with its diagnostic and the sweep carries on.
pub fn sweep_regimes(
    template: &CascadeConfig,
    b_grid: &[f64],
    eps_grid: &[f64],
    opts: &SweepOptions,
) -> Result<RegimeMap, ConfigError> {
    template.validate()?;
    check_grid("grids.b", b_grid, 0.0)?;
    check_grid("grids.epsilon", eps_grid, MIN_EPSILON)?;

    let jobs: Vec<(usize, usize)> = (0..eps_grid.len()).flat_map(|j| (0..b_grid.len()).map(move |i| (i, j))).collect();
    let classify = opts.classify;
    let cells = with_pool(opts.jobs, || {
        jobs.par_iter()
            .map(|&(i, j)| {
                let (b, epsilon) = (b_grid[i], eps_grid[j]);
                let result = evaluate_cell(template, b, epsilon, &classify).map_err(|e| CellFailure::from(&e));
                RegimeCell { b, epsilon, b_index: i, eps_index: j, result }
            })
            .collect::<Vec<_>>()
    });

    Ok(RegimeMap {
        b_grid: b_grid.to_vec(),
        eps_grid: eps_grid.to_vec(),
        cells,
        provenance: provenance(template, b_grid, eps_grid, &classify),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    OnsetAlignment,
    OffsetAlignment,
    TrackingTipping,
    OvershootExtent,
    IntermediateState,
}

impl BoundaryKind {
    pub const ALL: [BoundaryKind; 5] = [
        BoundaryKind::OnsetAlignment,
        BoundaryKind::OffsetAlignment,
        BoundaryKind::TrackingTipping,
        BoundaryKind::OvershootExtent,
        BoundaryKind::IntermediateState,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryKind::OnsetAlignment => "onset_alignment",
            BoundaryKind::OffsetAlignment => "offset_alignment",
            BoundaryKind::TrackingTipping => "tracking_tipping",
            BoundaryKind::OvershootExtent => "overshoot_extent",
            BoundaryKind::IntermediateState => "intermediate_state",
        }
    }

    /// Time-gap kinds converge on the residual; the others on bracket width.
    pub fn is_timed(self) -> bool {
        matches!(self, BoundaryKind::OnsetAlignment | BoundaryKind::OffsetAlignment)
    }

    pub fn default_tol(self) -> f64 {
        1e-6
    }

    /// The kind's signed gap for a classified cascade.
    pub fn gap(self, report: &ClassificationReport) -> f64 {
        let t = &report.timings;
        let indicator = |on: bool| if on { 1.0 } else { -1.0 };
        let diff = |d: Option<f64>, u: Option<f64>| match (d, u) {
            (Some(d), Some(u)) => d - u,
            (None, Some(_)) => f64::INFINITY,
            _ => f64::NAN,
        };
        match self {
            BoundaryKind::OnsetAlignment => diff(t.t_on_d, t.t_on_u),
            BoundaryKind::OffsetAlignment => diff(t.t_off_d, t.t_off_u),
            BoundaryKind::TrackingTipping => indicator(report.downstream_outcome.tipped()),
            BoundaryKind::OvershootExtent => indicator(!t.overshoot_windows.is_empty()),
            BoundaryKind::IntermediateState => indicator(report.intermediate_state == Some(true)),
        }
    }
}

impl std::str::FromStr for BoundaryKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BoundaryKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| format!("unknown boundary kind `{s}`"))
    }
}

/// Parameter varied during bisection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanAxis {
    B,
    Epsilon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub b: f64,
    pub epsilon: f64,
    /// `|gap|` for timed kinds, relative bracket width otherwise.
    pub residual: f64,
    pub bracket_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectOptions {
    /// Defaults to [`BoundaryKind::default_tol`].
    pub tol: Option<f64>,
    pub classify: ClassifyOptions,
    pub max_iterations: usize,
}

impl Default for BisectOptions {
    fn default() -> Self {
        BisectOptions { tol: None, classify: ClassifyOptions::default(), max_iterations: 200 }
    }
}

/// Gap of `kind` at one parameter pair, from a fresh simulation.
pub fn boundary_gap(
    kind: BoundaryKind,
    template: &CascadeConfig,
    b: f64,
    epsilon: f64,
    opts: &ClassifyOptions,
) -> Result<f64, BoundaryError> {
    let config = template.with_strength(b).with_epsilon(epsilon);
    let traj = match integrate_cascade(&config) {
        Ok(traj) => traj,
        Err(IntegrationError::HorizonExceeded { partial, .. }) => *partial,
        Err(source) => return Err(BoundaryError::Simulation { b, epsilon, source }),
    };
    Ok(kind.gap(&classify_trajectory(&traj, &config, opts)))
}

fn midpoint(axis: ScanAxis, lo: f64, hi: f64) -> f64 {
    match axis {
        ScanAxis::B => 0.5 * (lo + hi),
        ScanAxis::Epsilon => (lo * hi).sqrt(),
    }
}

/// Bisects the scan parameter between `bracket.0` and `bracket.1` until the
/// gap of `kind` vanishes to within `tol`.
///
/// The other parameter is held at `fixed`. The sign change across the
/// bracket is checked before any bisection.
pub fn bisect_boundary(
    kind: BoundaryKind,
    template: &CascadeConfig,
    axis: ScanAxis,
    fixed: f64,
    bracket: (f64, f64),
    opts: &BisectOptions,
) -> Result<BoundaryPoint, BoundaryError> {
    let tol = opts.tol.unwrap_or_else(|| kind.default_tol());
    let pair = |v: f64| match axis {
        ScanAxis::B => (v, fixed),
        ScanAxis::Epsilon => (fixed, v),
    };
    let gap = |v: f64| {
        let (b, eps) = pair(v);
        boundary_gap(kind, template, b, eps, &opts.classify)
    };
    let point = |v: f64, residual: f64, width: f64| {
        let (b, epsilon) = pair(v);
        BoundaryPoint { b, epsilon, residual, bracket_width: width }
    };

    let (mut lo, mut hi) = bracket;
    let (mut g_lo, g_hi) = (gap(lo)?, gap(hi)?);
    if g_lo.is_nan() || g_hi.is_nan() || g_lo.signum() == g_hi.signum() {
        return Err(BoundaryError::BracketInvalid { lo, hi, lo_gap: g_lo, hi_gap: g_hi });
    }
    if kind.is_timed() {
        if g_lo.abs() <= tol {
            return Ok(point(lo, g_lo.abs(), hi - lo));
        }
        if g_hi.abs() <= tol {
            return Ok(point(hi, g_hi.abs(), hi - lo));
        }
    }

    for _ in 0..opts.max_iterations {
        let mid = midpoint(axis, lo, hi);
        let width = (hi - lo).abs();
        if !kind.is_timed() && width <= tol * mid.abs() {
            return Ok(point(mid, width / mid.abs(), width));
        }
        if width <= 1e-14 * mid.abs().max(1.0) {
            break;
        }
        let g_mid = gap(mid)?;
        if g_mid.is_nan() {
            return Err(BoundaryError::Stalled { at: mid, residual: f64::NAN });
        }
        if kind.is_timed() && g_mid.abs() <= tol {
            return Ok(point(mid, g_mid.abs(), width));
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    let at = midpoint(axis, lo, hi);
    Err(BoundaryError::Stalled { at, residual: g_lo.abs() })
}

/// A traced boundary: one point (or gap marker) per sample of the fixed axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub kind: BoundaryKind,
    pub scan_axis: ScanAxis,
    pub points: Vec<Option<BoundaryPoint>>,
    /// Largest residual among the points found.
    pub tolerance_achieved: f64,
}

/// Applies [`bisect_boundary`] at each `(fixed, bracket)` sample, keeping
/// `None` where no valid bracket exists or bisection failed.
pub fn trace_boundary(
    kind: BoundaryKind,
    template: &CascadeConfig,
    scan_axis: ScanAxis,
    samples: &[(f64, (f64, f64))],
    opts: &BisectOptions,
    jobs: Option<usize>,
) -> BoundaryCurve {
    let points: Vec<Option<BoundaryPoint>> = with_pool(jobs, || {
        samples
            .par_iter()
            .map(|&(fixed, bracket)| bisect_boundary(kind, template, scan_axis, fixed, bracket, opts).ok())
            .collect()
    });
    let tolerance_achieved = points.iter().flatten().map(|p| p.residual).fold(0.0, f64::max);
    BoundaryCurve { kind, scan_axis, points, tolerance_achieved }
}

/// Brackets in `b` for each `eps` row of a coarse map: the neighbouring cells
/// between which the gap of `kind` first changes sign (`occurrence = 0`),
/// second changes sign (`occurrence = 1`), and so on.
pub fn brackets_from_map(kind: BoundaryKind, map: &RegimeMap, occurrence: usize) -> Vec<(f64, Option<(f64, f64)>)> {
    map.eps_grid
        .iter()
        .enumerate()
        .map(|(j, &eps)| {
            let row = map.row(j);
            let flips: Vec<(f64, f64)> = row
                .windows(2)
                .filter_map(|w| {
                    let g0 = kind.gap(w[0].result.as_ref().ok()?);
                    let g1 = kind.gap(w[1].result.as_ref().ok()?);
                    (!g0.is_nan() && !g1.is_nan() && g0.signum() != g1.signum()).then_some((w[0].b, w[1].b))
                })
                .collect();
            (eps, flips.get(occurrence).copied())
        })
        .collect()
}

/// Traces a boundary in `b` across every `eps` row of `map`, using the map's
/// cells as brackets; rows without a sign change become gaps.
pub fn trace_boundary_from_map(
    kind: BoundaryKind,
    template: &CascadeConfig,
    map: &RegimeMap,
    occurrence: usize,
    opts: &BisectOptions,
    jobs: Option<usize>,
) -> BoundaryCurve {
    let brackets = brackets_from_map(kind, map, occurrence);
    let samples: Vec<(f64, (f64, f64))> = brackets.iter().filter_map(|(eps, br)| br.map(|br| (*eps, br))).collect();
    let traced = trace_boundary(kind, template, ScanAxis::B, &samples, opts, jobs);
    let mut found = traced.points.into_iter();
    let points = brackets.iter().map(|(_, br)| if br.is_some() { found.next().flatten() } else { None }).collect();
    BoundaryCurve { points, ..traced }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = log_grid(1e-2, 1e2, 5);
        assert!((g[2] - 1.0).abs() < 1e-12);
        assert!((g[4] - 100.0).abs() < 1e-9);
        assert_eq!(linear_grid(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn grid_validation() {
        let config = CascadeConfig::default();
        let opts = SweepOptions::default();
        assert!(sweep_regimes(&config, &[1.0, 0.5], &[0.1], &opts).is_err());
        assert!(sweep_regimes(&config, &[1.0], &[1e-4], &opts).is_err());
        assert!(sweep_regimes(&config, &[-1.0], &[0.1], &opts).is_err());
    }

    #[test]
    fn decoupled_column_is_upstream_only() {
        let config = CascadeConfig::default();
        let map = sweep_regimes(&config, &[0.0], &[0.01, 1.0, 50.0], &SweepOptions::default()).unwrap();
        for cell in &map.cells {
            assert_eq!(cell.scenario(), Some(Scenario::UB));
        }
    }

    #[test]
    fn invalid_bracket() {
        let config = CascadeConfig::default();
        let err = bisect_boundary(
            BoundaryKind::TrackingTipping,
            &config,
            ScanAxis::B,
            0.05,
            (1.0, 2.0),
            &BisectOptions::default(),
        );
        assert!(matches!(err, Err(BoundaryError::BracketInvalid { .. })));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in BoundaryKind::ALL {
            assert_eq!(k.as_str().parse::<BoundaryKind>().unwrap(), k);
        }
    }
}
