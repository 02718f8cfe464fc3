//! Outcome labels for each element and the timing taxonomy of a cascade.
//!
//! With `U = [t_on^U, t_off^U]` and `D = [t_on^D, t_off^D]` the tipping
//! intervals of the upstream and downstream elements, a cascade is one of
//!
//! | label | meaning |
//! |-------|---------|
//! | `NoUpstreamTip` | the upstream element never completes tipping |
//! | `UB`   | upstream tips, downstream does not |
//! | `DaUB` | `D` starts after `U` ends |
//! | `DoUB` | `D` starts inside `U` and ends after it |
//! | `DwUB` | `D` lies within `U` |
//! | `UoDB` | `U` starts inside `D` and ends after it |
//! | `UwDB` | `U` lies within `D` |
//! | `UaDB` | `U` starts after `D` ends |
//!
//! Tipping counts only once the offset threshold is crossed; an onset
//! without offset is an overshoot.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bifurcation::frozen_equilibria;
use crate::error::IntegrationError;
use crate::integrator::{
    crossings, integrate_cascade, locate_events, Channel, Direction, EventKind, EventRecord, Trajectory,
};
use crate::model::{Branch, CascadeConfig, ParameterShift, LAMBDA_UPPER};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("lambda_plus = {0} sits on the fold level 2; upstream outcome is degenerate")]
    CriticalForcing(f64),
    #[error("lambda_minus = {0} must lie below the fold level 2")]
    NoPastState(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpstreamOutcome {
    Tracking,
    BTipping,
}

/// End-point tracking or B-tipping of the upstream element.
///
/// The ramp is monotone, so the element tips exactly when `lambda_plus`
/// passes the fold level, for every rate.
pub fn upstream_outcome(shift: &ParameterShift) -> Result<UpstreamOutcome, ClassifyError> {
    if shift.lambda_minus >= LAMBDA_UPPER {
        return Err(ClassifyError::NoPastState(shift.lambda_minus));
    }
    if (shift.lambda_plus - LAMBDA_UPPER).abs() < 1e-12 {
        return Err(ClassifyError::CriticalForcing(shift.lambda_plus));
    }
    Ok(if shift.lambda_plus < LAMBDA_UPPER { UpstreamOutcome::Tracking } else { UpstreamOutcome::BTipping })
}

/// Onset and offset times of both elements plus the overshoot record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TippingTimings {
    pub t_on_u: Option<f64>,
    pub t_off_u: Option<f64>,
    pub t_on_d: Option<f64>,
    pub t_off_d: Option<f64>,
    /// Downstream onset crossed without the offset ever being reached.
    pub overshoot: bool,
    /// Up/down crossing pairs of `M(x(t))` through the fold level.
    pub overshoot_windows: Vec<(f64, f64)>,
    /// Set once [`detect_intermediate_state`] has been run on a disjoint cascade.
    pub intermediate_state: Option<bool>,
}

impl TippingTimings {
    /// Timings from event records alone, with no overshoot information.
    pub fn from_events(events: &[EventRecord]) -> Self {
        let find = |kind| events.iter().find(|e| e.kind == kind).map(|e| e.time);
        let t_on_d = find(EventKind::DownstreamOnset);
        let t_off_d = find(EventKind::DownstreamOffset);
        TippingTimings {
            t_on_u: find(EventKind::UpstreamOnset),
            t_off_u: find(EventKind::UpstreamOffset),
            t_on_d,
            t_off_d,
            overshoot: t_on_d.is_some() && t_off_d.is_none(),
            overshoot_windows: Vec::new(),
            intermediate_state: None,
        }
    }

    /// Locates all events on `traj` and records every overshoot window.
    pub fn from_trajectory(traj: &Trajectory, config: &CascadeConfig) -> Self {
        let events = locate_events(traj, config);
        let mut timings = Self::from_events(&events);
        timings.overshoot_windows = overshoot_windows(traj, config.solver.event_time_tol);
        timings
    }

    pub fn upstream_interval(&self) -> Option<(f64, f64)> {
        Some((self.t_on_u?, self.t_off_u?))
    }

    pub fn downstream_interval(&self) -> Option<(f64, f64)> {
        Some((self.t_on_d?, self.t_off_d?))
    }

    /// Applies `t -> scale * t + shift` to every recorded time.
    pub fn transformed(&self, scale: f64, shift: f64) -> Self {
        let map = |t: Option<f64>| t.map(|t| scale * t + shift);
        TippingTimings {
            t_on_u: map(self.t_on_u),
            t_off_u: map(self.t_off_u),
            t_on_d: map(self.t_on_d),
            t_off_d: map(self.t_off_d),
            overshoot: self.overshoot,
            overshoot_windows: self
                .overshoot_windows
                .iter()
                .map(|&(a, b)| (scale * a + shift, scale * b + shift))
                .collect(),
            intermediate_state: self.intermediate_state,
        }
    }
}

fn overshoot_windows(traj: &Trajectory, time_tol: f64) -> Vec<(f64, f64)> {
    let mut windows = Vec::new();
    let mut up: Option<f64> = None;
    for c in crossings(traj, Channel::CouplingForcing, LAMBDA_UPPER, time_tol) {
        match (c.direction, up) {
            (Direction::Upward, _) => up = Some(c.time),
            (Direction::Downward, Some(t_up)) => {
                windows.push((t_up, c.time));
                up = None;
            }
            (Direction::Downward, None) => {}
        }
    }
    windows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DownstreamOutcome {
    Tracking,
    BTipping,
    /// `M(x(t))` passed the fold level and came back below it; no tipping.
    OvershootTracking,
    /// As above, but the offset threshold was reached during the overshoot.
    OvershootTipping,
}

impl DownstreamOutcome {
    pub fn tipped(self) -> bool {
        matches!(self, DownstreamOutcome::BTipping | DownstreamOutcome::OvershootTipping)
    }
}

/// Downstream outcome from the timings and the settled effective forcing.
pub fn downstream_outcome(timings: &TippingTimings, traj: &Trajectory) -> DownstreamOutcome {
    let [x_end, _] = traj.final_state();
    let mu_plus = traj.coupling().value(x_end);
    let overshoot = !timings.overshoot_windows.is_empty() && mu_plus < LAMBDA_UPPER;
    match (overshoot, timings.t_off_d.is_some()) {
        (true, true) => DownstreamOutcome::OvershootTipping,
        (true, false) => DownstreamOutcome::OvershootTracking,
        (false, true) => DownstreamOutcome::BTipping,
        (false, false) => DownstreamOutcome::Tracking,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    NoUpstreamTip,
    UB,
    DaUB,
    DoUB,
    DwUB,
    UoDB,
    UwDB,
    UaDB,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::NoUpstreamTip,
        Scenario::UB,
        Scenario::DaUB,
        Scenario::DoUB,
        Scenario::DwUB,
        Scenario::UoDB,
        Scenario::UwDB,
        Scenario::UaDB,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::NoUpstreamTip => "NoUpstreamTip",
            Scenario::UB => "UB",
            Scenario::DaUB => "DaUB",
            Scenario::DoUB => "DoUB",
            Scenario::DwUB => "DwUB",
            Scenario::UoDB => "UoDB",
            Scenario::UwDB => "UwDB",
            Scenario::UaDB => "UaDB",
        }
    }

    /// Both elements tip and their intervals do not overlap.
    pub fn is_disjoint(self) -> bool {
        matches!(self, Scenario::DaUB | Scenario::UaDB)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL.into_iter().find(|v| v.as_str() == s).ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub scenario: Scenario,
    /// Some comparison between interval endpoints fell within the time
    /// tolerance.
    pub boundary: bool,
}

pub const DEFAULT_TIME_TOL: f64 = 1e-6;

/// Places the two tipping intervals in the taxonomy.
///
/// Endpoints closer than `tol_time` compare as equal and set the boundary
/// flag; such ties resolve toward containment, then toward overlap.
pub fn classify_scenario(timings: &TippingTimings, tol_time: f64) -> Classification {
    let Some((u0, u1)) = timings.upstream_interval() else {
        return Classification { scenario: Scenario::NoUpstreamTip, boundary: false };
    };
    let Some((d0, d1)) = timings.downstream_interval() else {
        return Classification { scenario: Scenario::UB, boundary: false };
    };
    if timings.overshoot {
        return Classification { scenario: Scenario::UB, boundary: false };
    }

    let tie = |a: f64, b: f64| (a - b).abs() <= tol_time;
    let boundary = tie(d0, u0) || tie(d1, u1) || tie(d0, u1) || tie(d1, u0);
    // `le` is "a <= b up to the tolerance".
    let le = |a: f64, b: f64| a <= b + tol_time;

    let scenario = if le(u0, d0) && le(d1, u1) {
        Scenario::DwUB
    } else if le(d0, u0) && le(u1, d1) {
        Scenario::UwDB
    } else if d0 > u1 + tol_time {
        Scenario::DaUB
    } else if u0 > d1 + tol_time {
        Scenario::UaDB
    } else if d0 > u0 {
        Scenario::DoUB
    } else {
        Scenario::UoDB
    };
    Classification { scenario, boundary }
}

pub const DEFAULT_INTERMEDIATE_DELTA: f64 = 0.05;

/// Whether a disjoint cascade passes through a third stable state between
/// the two tipping intervals.
///
/// Returns `None` when the precondition fails (not both elements tipped, or
/// their intervals overlap). Otherwise `Some(true)` iff, between the end of
/// the first interval and the start of the second, the state comes within
/// `delta` (sup norm) of a stable frozen equilibrium whose branch labels
/// differ from those of both the initial and the final state.
pub fn detect_intermediate_state(
    traj: &Trajectory,
    timings: &TippingTimings,
    config: &CascadeConfig,
    delta: f64,
) -> Option<bool> {
    let (u0, u1) = timings.upstream_interval()?;
    let (d0, d1) = timings.downstream_interval()?;
    if timings.overshoot {
        return None;
    }
    let (gap_start, gap_end) = if d0 > u1 {
        (u1, d0)
    } else if u0 > d1 {
        (d1, u0)
    } else {
        return None;
    };

    let coupling = *traj.coupling();
    let eps = traj.epsilon();
    let initial = nearest_stable_labels(traj.initial_state(), config.shift.at_time(traj.t_start()), config);
    let final_ = nearest_stable_labels(traj.final_state(), config.shift.lambda_plus, config);

    let near_third_state = |t: f64, u: [f64; 2]| {
        frozen_equilibria(config.shift.at_time(t), &coupling, eps).into_iter().any(|e| {
            let labels = Some(e.branches());
            e.stable && labels != initial && labels != final_ && (u[0] - e.x).abs().max((u[1] - e.y).abs()) <= delta
        })
    };

    let times = traj.times();
    let first = times.partition_point(|&t| t < gap_start);
    let last = times.partition_point(|&t| t <= gap_end);
    let mut probes: Vec<f64> = vec![gap_start, 0.5 * (gap_start + gap_end), gap_end];
    for i in first..last {
        probes.push(times[i]);
        if i + 1 < times.len() {
            probes.push(0.5 * (times[i] + times[i + 1]).min(gap_end));
        }
    }
    Some(
        probes
            .into_iter()
            .filter(|t| (gap_start..=gap_end).contains(t))
            .any(|t| traj.state_at(t).is_some_and(|u| near_third_state(t, u))),
    )
}

fn nearest_stable_labels(u: [f64; 2], lambda: f64, config: &CascadeConfig) -> Option<(Branch, Branch)> {
    frozen_equilibria(lambda, &config.coupling, config.epsilon)
        .into_iter()
        .filter(|e| e.stable)
        .min_by(|a, b| {
            let da = (u[0] - a.x).abs().max((u[1] - a.y).abs());
            let db = (u[0] - b.x).abs().max((u[1] - b.y).abs());
            da.total_cmp(&db)
        })
        .map(|e| e.branches())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyOptions {
    pub tol_time: f64,
    pub intermediate_delta: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { tol_time: DEFAULT_TIME_TOL, intermediate_delta: DEFAULT_INTERMEDIATE_DELTA }
    }
}

/// Everything known about one simulated cascade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub scenario: Scenario,
    pub boundary_flag: bool,
    pub timings: TippingTimings,
    pub overshoot: bool,
    pub intermediate_state: Option<bool>,
    pub downstream_outcome: DownstreamOutcome,
    pub final_state: [f64; 2],
}

pub fn classify_trajectory(traj: &Trajectory, config: &CascadeConfig, opts: &ClassifyOptions) -> ClassificationReport {
    let mut timings = TippingTimings::from_trajectory(traj, config);
    let class = classify_scenario(&timings, opts.tol_time);
    let outcome = downstream_outcome(&timings, traj);
    timings.intermediate_state = if class.scenario.is_disjoint() {
        detect_intermediate_state(traj, &timings, config, opts.intermediate_delta)
    } else {
        None
    };
    ClassificationReport {
        scenario: class.scenario,
        boundary_flag: class.boundary,
        overshoot: timings.overshoot,
        intermediate_state: timings.intermediate_state,
        timings,
        downstream_outcome: outcome,
        final_state: traj.final_state(),
    }
}

/// Simulates and classifies in one go.
pub fn classify_config(
    config: &CascadeConfig,
    opts: &ClassifyOptions,
) -> Result<(Trajectory, ClassificationReport), IntegrationError> {
    let traj = integrate_cascade(config)?;
    let report = classify_trajectory(&traj, config, opts);
    Ok((traj, report))
}
