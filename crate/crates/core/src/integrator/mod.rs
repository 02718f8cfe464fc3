//! Adaptive integration of the forced cascade
//!
//! ```text
//!   dx/dt   = f(x, Lambda(r t))
//!   eps dy/dt = f(y, M(x))
//! ```
//!
//! The pullback attractor that limits to the lower stable state in the past
//! is approximated by starting on the frozen equilibrium of the saturated
//! forcing at `s = -burn_in_s`.

pub(crate) mod dopri;
mod events;

use serde::{Deserialize, Serialize};

pub use events::{crossings, locate_events, Channel, Crossing, Direction, EventKind, EventRecord};

use crate::bifurcation::frozen_equilibria;
use crate::error::{ConfigError, IntegrationError};
use crate::model::{drift, lower_branch, CascadeConfig, Coupling, ParameterShift};
use dopri::{Control, DenseOutput, Outcome, StepOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step; `None` means `0.1 / r`.
    pub max_step: Option<f64>,
    /// Relative width of event brackets.
    pub event_time_tol: f64,
    /// Start of integration in rescaled time, `s0 = -burn_in_s`.
    pub burn_in_s: f64,
    pub tail: TailRule,
    pub max_steps: usize,
}

/// When to stop integrating once the forcing has saturated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailRule {
    /// Sup-norm distance to a stable frozen equilibrium at `lambda_plus`.
    pub settle_tol: f64,
    /// Hard cap `t_max = (burn_in_s + horizon_factor * max(1, eps)) / r`.
    pub horizon_factor: f64,
}

impl Default for TailRule {
    fn default() -> Self {
        TailRule { settle_tol: 1e-6, horizon_factor: 50.0 }
    }
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            rel_tol: 1e-9,
            abs_tol: 1e-10,
            max_step: None,
            event_time_tol: 1e-10,
            burn_in_s: 15.0,
            tail: TailRule::default(),
            max_steps: 20_000_000,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.rel_tol) {
            return Err(ConfigError::invalid("solver.rel_tol", "must be positive"));
        }
        if !positive(self.abs_tol) {
            return Err(ConfigError::invalid("solver.abs_tol", "must be positive"));
        }
        if let Some(h) = self.max_step {
            if !positive(h) {
                return Err(ConfigError::invalid("solver.max_step", "must be positive"));
            }
        }
        if !positive(self.event_time_tol) {
            return Err(ConfigError::invalid("solver.event_time_tol", "must be positive"));
        }
        if !positive(self.burn_in_s) {
            return Err(ConfigError::invalid("solver.burn_in_s", "must be positive"));
        }
        if !positive(self.tail.settle_tol) || !positive(self.tail.horizon_factor) {
            return Err(ConfigError::invalid("solver.tail", "tail tolerances must be positive"));
        }
        if self.max_steps == 0 {
            return Err(ConfigError::invalid("solver.max_steps", "must be positive"));
        }
        Ok(())
    }

    /// Non-fatal configuration issues.
    pub fn warnings(&self, shift: &ParameterShift) -> Vec<String> {
        let mut out = Vec::new();
        if self.burn_in_s < shift.saturation_s {
            out.push(format!(
                "burn_in_s = {} is shorter than the ramp saturation horizon {}; the start is not on the pullback attractor",
                self.burn_in_s, shift.saturation_s
            ));
        }
        out
    }

    pub fn max_step_for(&self, rate: f64) -> f64 {
        self.max_step.unwrap_or(0.1 / rate)
    }

    /// Integration end time when the state never settles.
    pub fn horizon(&self, rate: f64, epsilon: f64) -> f64 {
        (self.burn_in_s + self.tail.horizon_factor * epsilon.max(1.0)) / rate
    }
}

/// One sample of all trajectory channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub s: f64,
    pub lambda: f64,
    pub x: f64,
    pub y: f64,
    pub mu: f64,
}

/// Dense solution of the cascade together with the model it was computed for.
#[derive(Clone, PartialEq)]
pub struct Trajectory {
    shift: ParameterShift,
    coupling: Coupling,
    epsilon: f64,
    dense: DenseOutput<2>,
}

impl std::fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Trajectory")
            .field("coupling", &self.coupling)
            .field("epsilon", &self.epsilon)
            .field("nodes", &self.len())
            .field("span", &(self.t_start(), self.t_end()))
            .field("final_state", &self.final_state())
            .finish()
    }
}

impl Trajectory {
    pub fn shift(&self) -> &ParameterShift {
        &self.shift
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Accepted step times, strictly increasing.
    pub fn times(&self) -> &[f64] {
        &self.dense.times
    }

    /// States `(x, y)` at the accepted step times.
    pub fn states(&self) -> &[[f64; 2]] {
        &self.dense.states
    }

    pub fn len(&self) -> usize {
        self.dense.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dense.times.is_empty()
    }

    pub fn t_start(&self) -> f64 {
        self.dense.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.dense.times.last().expect("trajectory has at least one node")
    }

    pub fn initial_state(&self) -> [f64; 2] {
        self.dense.states[0]
    }

    pub fn final_state(&self) -> [f64; 2] {
        *self.dense.states.last().expect("trajectory has at least one node")
    }

    /// Interpolated state; `None` outside `[t_start, t_end]`.
    pub fn state_at(&self, t: f64) -> Option<[f64; 2]> {
        self.dense.eval(t)
    }

    pub(crate) fn state_in_segment(&self, i: usize, t: f64) -> [f64; 2] {
        self.dense.eval_in(i, t)
    }

    pub fn lambda_at(&self, t: f64) -> f64 {
        self.shift.at_time(t)
    }

    /// Effective downstream forcing `M(x(t))`.
    pub fn mu_at(&self, t: f64) -> Option<f64> {
        self.state_at(t).map(|[x, _]| self.coupling.value(x))
    }

    pub fn sample_at(&self, t: f64) -> Option<Sample> {
        let [x, y] = self.state_at(t)?;
        Some(self.sample(t, x, y))
    }

    fn sample(&self, t: f64, x: f64, y: f64) -> Sample {
        Sample { t, s: self.shift.rate * t, lambda: self.lambda_at(t), x, y, mu: self.coupling.value(x) }
    }

    /// All channels at the accepted nodes.
    pub fn nodes(&self) -> impl Iterator<Item = Sample> + '_ {
        self.dense.times.iter().zip(&self.dense.states).map(|(&t, &[x, y])| self.sample(t, x, y))
    }

    /// Dense samples at the given times, skipping any outside the trajectory.
    pub fn resample<'a>(&'a self, times: impl IntoIterator<Item = f64> + 'a) -> impl Iterator<Item = Sample> + 'a {
        times.into_iter().filter_map(move |t| self.sample_at(t))
    }
}

/// Starting state on the frozen lower branch at the saturated past forcing.
pub fn initial_state(config: &CascadeConfig) -> Result<(f64, [f64; 2]), ConfigError> {
    let rate = config.shift.rate;
    let t0 = -config.solver.burn_in_s / rate;
    let lambda0 = config.shift.at_time(t0);
    let x0 = lower_branch(lambda0).ok_or_else(|| {
        ConfigError::invalid("shift.lambda_minus", "no lower stable upstream state at the initial forcing")
    })?;
    let mu0 = config.coupling.value(x0);
    let y0 = lower_branch(mu0).ok_or_else(|| {
        ConfigError::invalid(
            "coupling",
            format!("initial downstream forcing M(x0) = {mu0} leaves no lower stable state"),
        )
    })?;
    Ok((t0, [x0, y0]))
}

/// Integrates the cascade until it settles on a stable equilibrium of the
/// future-limit frozen system.
pub fn integrate_cascade(config: &CascadeConfig) -> Result<Trajectory, IntegrationError> {
    config.validate()?;
    let (t0, y0) = initial_state(config)?;
    let shift = config.shift;
    let coupling = config.coupling;
    let eps = config.epsilon;
    let solver = &config.solver;
    let rate = shift.rate;

    let t_settle = solver.burn_in_s / rate;
    let t_max = solver.horizon(rate, eps);
    let targets: Vec<[f64; 2]> = frozen_equilibria(shift.lambda_plus, &coupling, eps)
        .into_iter()
        .filter(|e| e.stable)
        .map(|e| [e.x, e.y])
        .collect();
    let settle_tol = solver.tail.settle_tol;

    let rhs = |t: f64, u: &[f64; 2]| {
        let lambda = shift.at_time(t);
        [drift(u[0], lambda), drift(u[1], coupling.value(u[0])) / eps]
    };
    let opts = StepOptions {
        rel_tol: solver.rel_tol,
        abs_tol: solver.abs_tol,
        max_step: solver.max_step_for(rate),
        max_steps: solver.max_steps,
    };
    let settled = |t: f64, u: &[f64; 2]| {
        if t >= t_settle && targets.iter().any(|e| (u[0] - e[0]).abs().max((u[1] - e[1]).abs()) <= settle_tol) {
            Control::Stop
        } else {
            Control::Continue
        }
    };

    let (dense, outcome) = dopri::integrate(rhs, t0, y0, t_max, &opts, settled);
    let traj = Trajectory { shift, coupling, epsilon: eps, dense };
    match outcome {
        Outcome::Stopped => Ok(traj),
        Outcome::Reached => Err(IntegrationError::HorizonExceeded { t_max, partial: Box::new(traj) }),
        Outcome::Underflow { t, step } => {
            Err(IntegrationError::StepSizeUnderflow { t, step, state: traj.final_state() })
        }
        Outcome::Budget { t } => Err(IntegrationError::TooManySteps { t, max_steps: solver.max_steps }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::upper_branch;

    const SQRT3: f64 = 1.732_050_807_568_877_2;

    /// Fixed-step classical RK4 on the same system.
    fn rk4(config: &CascadeConfig, dt: f64, t_end: f64) -> [f64; 2] {
        let (mut t, mut u) = initial_state(config).unwrap();
        let f = |t: f64, u: [f64; 2]| {
            [drift(u[0], config.shift.at_time(t)), drift(u[1], config.coupling.value(u[0])) / config.epsilon]
        };
        let add = |u: [f64; 2], k: [f64; 2], h: f64| [u[0] + h * k[0], u[1] + h * k[1]];
        while t < t_end - 1e-12 {
            let h = dt.min(t_end - t);
            let k1 = f(t, u);
            let k2 = f(t + h / 2.0, add(u, k1, h / 2.0));
            let k3 = f(t + h / 2.0, add(u, k2, h / 2.0));
            let k4 = f(t + h, add(u, k3, h));
            u = [
                u[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                u[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ];
            t += h;
        }
        u
    }

    #[test]
    fn defaults_settle_on_doubly_tipped_state() {
        let config = CascadeConfig::default();
        let traj = integrate_cascade(&config).unwrap();
        assert!((traj.initial_state()[0] + SQRT3).abs() < 1e-9);
        let x_plus = upper_branch(4.0).unwrap();
        let y_plus = upper_branch(config.coupling.value(x_plus)).unwrap();
        assert!((config.coupling.value(x_plus) - 3.927_874_153_014_526).abs() < 1e-9);
        let [x, y] = traj.final_state();
        assert!((x - x_plus).abs() < 1e-6 && (y - y_plus).abs() < 1e-6);

        // Independent fixed-step RK4 over a window around the tipping.
        let t_end = 40.0;
        let reference = rk4(&config, 1e-3, t_end);
        let ours = traj.state_at(t_end).unwrap();
        assert!((ours[0] - reference[0]).abs() < 1e-6, "{ours:?} vs {reference:?}");
        assert!((ours[1] - reference[1]).abs() < 1e-6, "{ours:?} vs {reference:?}");
    }

    #[test]
    fn below_threshold_forcing_tracks() {
        let mut config = CascadeConfig::default();
        config.shift.lambda_plus = 1.0;
        let traj = integrate_cascade(&config).unwrap();
        let x_l = lower_branch(1.0).unwrap();
        assert!((traj.final_state()[0] - x_l).abs() < 1e-6);
    }

    #[test]
    fn decoupled_downstream_stays_put() {
        let config = CascadeConfig::default().with_strength(0.0);
        let traj = integrate_cascade(&config).unwrap();
        for [_, y] in traj.states() {
            assert!((y + SQRT3).abs() < 1e-6);
        }
    }

    #[test]
    fn nodes_match_interpolant() {
        let traj = integrate_cascade(&CascadeConfig::default()).unwrap();
        for (t, u) in traj.times().iter().zip(traj.states()) {
            assert_eq!(traj.state_at(*t).unwrap(), *u);
        }
        assert!(traj.times().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_too_small_epsilon() {
        let config = CascadeConfig::default().with_epsilon(5e-4);
        assert!(matches!(integrate_cascade(&config), Err(IntegrationError::Config(_))));
    }

    #[test]
    fn burn_in_warning() {
        let mut settings = SolverSettings::default();
        assert!(settings.warnings(&ParameterShift::default()).is_empty());
        settings.burn_in_s = 10.0;
        assert_eq!(settings.warnings(&ParameterShift::default()).len(), 1);
    }
}
