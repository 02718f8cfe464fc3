use tipping_cascade::model::upper_branch;
use tipping_cascade::*;

fn event_times(config: &CascadeConfig) -> [Option<f64>; 4] {
    let traj = integrate_cascade(config).unwrap();
    let events = locate_events(&traj, config);
    EventKind::ALL.map(|kind| events.iter().find(|e| e.kind == kind).map(|e| e.time))
}

fn max_drift(a: [Option<f64>; 4], b: [Option<f64>; 4]) -> f64 {
    a.iter()
        .zip(&b)
        .map(|(x, y)| match (x, y) {
            (Some(x), Some(y)) => (x - y).abs(),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

#[test]
fn event_times_converge_under_tolerance_halving() {
    for b in [0.52, 1.0, 4.0] {
        let base = CascadeConfig::default().with_strength(b);
        let mut halved = base;
        halved.solver.rel_tol /= 2.0;
        halved.solver.abs_tol /= 2.0;
        let drift = max_drift(event_times(&base), event_times(&halved));
        assert!(drift <= 1e-7, "b = {b}: drift {drift:e}");
    }
}

#[test]
fn burn_in_doubling_is_invisible() {
    let base = CascadeConfig::default();
    let mut longer = base;
    longer.solver.burn_in_s *= 2.0;
    let drift = max_drift(event_times(&base), event_times(&longer));
    assert!(drift <= 1e-8, "drift {drift:e}");
}

#[test]
fn upstream_endpoint_is_rate_independent() {
    let target = upper_branch(4.0).unwrap();
    let mut ends = Vec::new();
    for rate in [0.01, 0.05, 0.5] {
        let mut config = CascadeConfig::default();
        config.shift.rate = rate;
        config.solver.tail.settle_tol = 1e-8;
        let x_end = integrate_cascade(&config).unwrap().final_state()[0];
        assert!((x_end - target).abs() <= 1e-6, "r = {rate}: {x_end}");
        ends.push(x_end);
    }
    assert!(ends.windows(2).all(|w| (w[0] - w[1]).abs() <= 1e-6));
}

#[test]
fn upstream_timings_do_not_depend_on_coupling() {
    let up = |b: f64| {
        let t = event_times(&CascadeConfig::default().with_strength(b));
        (t[0].unwrap(), t[1].unwrap())
    };
    let reference = up(0.1);
    for b in [1.0, 5.0] {
        let (on, off) = up(b);
        assert!((on - reference.0).abs() <= 1e-7);
        assert!((off - reference.1).abs() <= 1e-7);
    }
}

#[test]
fn subcritical_shift_has_no_onsets() {
    let mut config = CascadeConfig::default();
    config.shift.lambda_plus = 1.0;
    let times = event_times(&config);
    assert!(times.iter().all(Option::is_none));
    let (_, report) = classify_config(&config, &ClassifyOptions::default()).unwrap();
    assert_eq!(report.scenario, Scenario::NoUpstreamTip);
}

#[test]
fn trajectory_channels_are_consistent() {
    let config = CascadeConfig::default();
    let traj = integrate_cascade(&config).unwrap();
    for s in traj.nodes().step_by(50) {
        assert_eq!(s.s, config.shift.rate * s.t);
        assert_eq!(s.lambda, config.shift.value(s.s));
        assert_eq!(s.mu, config.coupling.value(s.x));
    }
    let grid: Vec<f64> = (0..100).map(|i| -20.0 + 0.5 * i as f64).collect();
    let resampled: Vec<_> = traj.resample(grid.clone()).collect();
    assert_eq!(resampled.len(), grid.len());
}

#[test]
fn default_localised_tracks_downstream() {
    let (_, report) = classify_config(&CascadeConfig::default_localised(), &ClassifyOptions::default()).unwrap();
    assert_eq!(report.scenario, Scenario::UB);
    assert_eq!(report.downstream_outcome, DownstreamOutcome::Tracking);
    assert!(!report.overshoot);
}

#[test]
fn localised_overshoot_without_tipping() {
    let config = CascadeConfig::default_localised().with_strength(2.2).with_epsilon(10.0);
    let (_, report) = classify_config(&config, &ClassifyOptions::default()).unwrap();
    assert_eq!(report.downstream_outcome, DownstreamOutcome::OvershootTracking);
    assert_eq!(report.scenario, Scenario::UB);
    assert!(report.overshoot);
    assert_eq!(report.timings.overshoot_windows.len(), 1);
}

#[test]
fn intermediate_state_depends_on_timescale() {
    let opts = ClassifyOptions::default();
    let fast = CascadeConfig::default().with_strength(0.52).with_epsilon(0.01);
    let (_, report) = classify_config(&fast, &opts).unwrap();
    assert_eq!(report.scenario, Scenario::DaUB);
    assert_eq!(report.intermediate_state, Some(true));

    let slow = fast.with_epsilon(10.0);
    let (_, report) = classify_config(&slow, &opts).unwrap();
    assert_eq!(report.scenario, Scenario::DaUB);
    assert_eq!(report.intermediate_state, Some(false));

    let (_, report) = classify_config(&CascadeConfig::default().with_strength(0.3), &opts).unwrap();
    assert_eq!(report.scenario, Scenario::UB);
    assert_eq!(report.intermediate_state, None);
}

#[test]
fn report_json_round_trips() {
    let (_, report) = classify_config(&CascadeConfig::default(), &ClassifyOptions::default()).unwrap();
    let json = serde_json::to_string(&report).unwrap();
    assert!(json.contains("\"scenario\":\"DwUB\""));
    let back: ClassificationReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
}
