use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::model::{CascadeConfig, LAMBDA_UPPER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    UpstreamOnset,
    UpstreamOffset,
    DownstreamOnset,
    DownstreamOffset,
}

impl EventKind {
    pub const ALL: [EventKind; 4] =
        [EventKind::UpstreamOnset, EventKind::UpstreamOffset, EventKind::DownstreamOnset, EventKind::DownstreamOffset];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::UpstreamOnset => "upstream_onset",
            EventKind::UpstreamOffset => "upstream_offset",
            EventKind::DownstreamOnset => "downstream_onset",
            EventKind::DownstreamOffset => "downstream_offset",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Upward,
    Downward,
}

/// Scalar signal monitored along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    /// `Lambda(r t)`.
    Forcing,
    /// `x(t)`.
    Upstream,
    /// `M(x(t))`.
    CouplingForcing,
    /// `y(t)`.
    Downstream,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub kind: EventKind,
    pub time: f64,
    /// Times on either side of the crossing; the monitored signal changes
    /// sign across it.
    pub bracket: (f64, f64),
    pub direction: Direction,
    /// Threshold level that was crossed.
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub time: f64,
    pub bracket: (f64, f64),
    pub direction: Direction,
}

/// Sub-samples per accepted step when scanning for sign changes.
const SCAN_POINTS: usize = 4;

/// Every crossing of `channel` through `level`, in time order.
///
/// Sign changes are bracketed on a fine grid inside each accepted step and
/// then bisected on the dense interpolant until the bracket is narrower than
/// `time_tol * max(1, |t|)`. Crossings of the forcing ramp use its closed-form
/// inverse instead.
pub fn crossings(traj: &Trajectory, channel: Channel, level: f64, time_tol: f64) -> Vec<Crossing> {
    if channel == Channel::Forcing {
        return forcing_crossing(traj, level).into_iter().collect();
    }
    let coupling = *traj.coupling();
    let read = move |u: [f64; 2]| match channel {
        Channel::Upstream => u[0],
        Channel::Downstream => u[1],
        Channel::CouplingForcing => coupling.value(u[0]),
        Channel::Forcing => unreachable!(),
    };

    let times = traj.times();
    let mut out = Vec::new();
    for i in 0..times.len().saturating_sub(1) {
        let (t0, t1) = (times[i], times[i + 1]);
        let g = |t: f64| read(traj.state_in_segment(i, t)) - level;
        let mut a = t0;
        let mut ga = read(traj.states()[i]) - level;
        for k in 1..=SCAN_POINTS {
            let b = if k == SCAN_POINTS { t1 } else { t0 + (t1 - t0) * k as f64 / SCAN_POINTS as f64 };
            let gb = if k == SCAN_POINTS { read(traj.states()[i + 1]) - level } else { g(b) };
            let direction = if ga < 0.0 && gb >= 0.0 {
                Some(Direction::Upward)
            } else if ga >= 0.0 && gb < 0.0 {
                Some(Direction::Downward)
            } else {
                None
            };
            if let Some(direction) = direction {
                let (lo, hi) = refine(&g, a, b, direction, time_tol);
                out.push(Crossing { time: 0.5 * (lo + hi), bracket: (lo, hi), direction });
            }
            a = b;
            ga = gb;
        }
    }
    out
}

/// Bisection keeping `g(lo) < 0 <= g(hi)` for upward crossings (mirrored for
/// downward ones).
fn refine(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, direction: Direction, time_tol: f64) -> (f64, f64) {
    let below = |v: f64| match direction {
        Direction::Upward => v < 0.0,
        Direction::Downward => v >= 0.0,
    };
    for _ in 0..200 {
        let width_tol = time_tol * lo.abs().max(hi.abs()).max(1.0);
        if hi - lo <= width_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(g(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

fn forcing_crossing(traj: &Trajectory, level: f64) -> Option<Crossing> {
    let shift = traj.shift();
    let t = shift.time_of_level(level)?;
    if t < traj.t_start() || t > traj.t_end() {
        return None;
    }
    let direction = if shift.lambda_plus > shift.lambda_minus { Direction::Upward } else { Direction::Downward };
    Some(Crossing { time: t, bracket: (t, t), direction })
}

fn first_upward(traj: &Trajectory, channel: Channel, level: f64, time_tol: f64) -> Option<Crossing> {
    crossings(traj, channel, level, time_tol).into_iter().find(|c| c.direction == Direction::Upward)
}

/// Onset and offset events of both subsystems.
///
/// Onsets are the first upward crossings of the forcing (`Lambda` upstream,
/// `M(x)` downstream) through the fold level 2; offsets are the first upward
/// crossings of the state through `w`. Events that never happen are left out.
pub fn locate_events(traj: &Trajectory, config: &CascadeConfig) -> Vec<EventRecord> {
    let w = config.offset_threshold_w;
    let tol = config.solver.event_time_tol;
    let plan = [
        (EventKind::UpstreamOnset, Channel::Forcing, LAMBDA_UPPER),
        (EventKind::UpstreamOffset, Channel::Upstream, w),
        (EventKind::DownstreamOnset, Channel::CouplingForcing, LAMBDA_UPPER),
        (EventKind::DownstreamOffset, Channel::Downstream, w),
    ];
    plan.into_iter()
        .filter_map(|(kind, channel, level)| {
            first_upward(traj, channel, level, tol).map(|c| EventRecord {
                kind,
                time: c.time,
                bracket: c.bracket,
                direction: c.direction,
                value: level,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::integrate_cascade;
    use crate::model::Coupling;

    fn event(events: &[EventRecord], kind: EventKind) -> Option<EventRecord> {
        events.iter().copied().find(|e| e.kind == kind)
    }

    #[test]
    fn default_events() {
        let config = CascadeConfig::default();
        let traj = integrate_cascade(&config).unwrap();
        let events = locate_events(&traj, &config);
        assert_eq!(events.len(), 4);
        assert_eq!(event(&events, EventKind::UpstreamOnset).unwrap().time, 0.0);
        for e in &events {
            let (lo, hi) = e.bracket;
            assert!(hi - lo <= config.solver.event_time_tol * hi.abs().max(1.0));
        }
        let off = event(&events, EventKind::UpstreamOffset).unwrap();
        let x_lo = traj.state_at(off.bracket.0).unwrap()[0];
        let x_hi = traj.state_at(off.bracket.1).unwrap()[0];
        assert!(x_lo < 1.8 && x_hi >= 1.8);
    }

    #[test]
    fn no_onset_below_threshold() {
        let mut config = CascadeConfig::default();
        config.shift.lambda_plus = 1.0;
        let traj = integrate_cascade(&config).unwrap();
        let events = locate_events(&traj, &config);
        assert!(event(&events, EventKind::UpstreamOnset).is_none());
        assert!(event(&events, EventKind::DownstreamOnset).is_none());
    }

    #[test]
    fn weak_localised_never_reaches_downstream_fold() {
        let config = CascadeConfig { coupling: Coupling::default_localised(), ..Default::default() };
        let traj = integrate_cascade(&config).unwrap();
        let events = locate_events(&traj, &config);
        assert!(event(&events, EventKind::DownstreamOnset).is_none());
        assert!(event(&events, EventKind::UpstreamOffset).is_some());
    }
}
