//! The concrete cascade model: a cubic bistable element, a tanh parameter
//! shift and the two coupling families.
//!
//! Both subsystems share the drift `f(u, mu) = 3u - u^3 + mu`. The upstream
//! element is forced by the ramp `Lambda(r t)`, the downstream element by
//! `M(x)`, the coupling evaluated at the upstream state.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::integrator::SolverSettings;

/// Forcing level of the fold where the lower stable branch disappears.
pub const LAMBDA_UPPER: f64 = 2.0;
/// Forcing level of the fold where the upper stable branch disappears.
pub const LAMBDA_LOWER: f64 = -2.0;

/// Smallest timescale ratio the explicit integrator accepts.
pub const MIN_EPSILON: f64 = 1e-3;

/// Drift of the cubic element, `3u - u^3 + mu`.
#[inline]
pub fn drift(u: f64, mu: f64) -> f64 {
    3.0 * u - u * u * u + mu
}

/// State derivative of [`drift`].
#[inline]
pub fn drift_slope(u: f64) -> f64 {
    3.0 - 3.0 * u * u
}

/// Which of the (up to) three equilibrium branches a root lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Lower,
    Middle,
    Upper,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Lower => "lower",
            Branch::Middle => "middle",
            Branch::Upper => "upper",
        }
    }

    /// Branch a state belongs to, independent of the forcing: the cubic's
    /// folds sit at `u = -1` and `u = +1`, so lower roots are `< -1`, middle
    /// roots lie in `(-1, 1)` and upper roots are `> 1`.
    pub fn of_state(u: f64) -> Branch {
        if u < -1.0 {
            Branch::Lower
        } else if u > 1.0 {
            Branch::Upper
        } else {
            Branch::Middle
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    /// Double root at a fold.
    Degenerate,
}

/// A real root of `drift(., mu)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub state: f64,
    pub stability: Stability,
    pub branch: Branch,
    /// 2 at the folds `|mu| = 2`, otherwise 1.
    pub multiplicity: u8,
}

/// The canonical cubic element `f(u, mu) = 3u - u^3 + mu`.
///
/// It is bistable for `-2 < mu < 2` with non-degenerate folds at
/// `(u, mu) = (1, -2)` and `(-1, 2)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CubicElement;

impl CubicElement {
    pub const LAMBDA_LOWER: f64 = LAMBDA_LOWER;
    pub const LAMBDA_UPPER: f64 = LAMBDA_UPPER;
    /// Fold state at `mu = LAMBDA_LOWER`.
    pub const FOLD_STATE_AT_LOWER: f64 = 1.0;
    /// Fold state at `mu = LAMBDA_UPPER`.
    pub const FOLD_STATE_AT_UPPER: f64 = -1.0;

    pub fn drift(&self, u: f64, mu: f64) -> f64 {
        drift(u, mu)
    }

    pub fn equilibria(&self, mu: f64) -> Vec<Root> {
        equilibria(mu)
    }
}

/// All real equilibria of the cubic at forcing `mu`, in ascending order.
///
/// Roots come from the trigonometric form when three are real and from the
/// hyperbolic form otherwise, followed by one Newton step that is kept only
/// if it lowers the residual. At `|mu| = 2` the double root is returned once
/// with multiplicity 2.
pub fn equilibria(mu: f64) -> Vec<Root> {
    if mu == LAMBDA_UPPER || mu == LAMBDA_LOWER {
        // 3u - u^3 + 2 = -(u + 1)^2 (u - 2), mirrored for mu = -2.
        let sign = mu.signum();
        let double = Root {
            state: -sign,
            stability: Stability::Degenerate,
            branch: if sign > 0.0 { Branch::Lower } else { Branch::Upper },
            multiplicity: 2,
        };
        let simple = Root {
            state: 2.0 * sign,
            stability: Stability::Stable,
            branch: if sign > 0.0 { Branch::Upper } else { Branch::Lower },
            multiplicity: 1,
        };
        return if sign > 0.0 { vec![double, simple] } else { vec![simple, double] };
    }

    if mu.abs() < 2.0 {
        let phi = (mu / 2.0).acos() / 3.0;
        let third = 2.0 * std::f64::consts::PI / 3.0;
        let mut states =
            [polish(2.0 * (phi + third).cos(), mu), polish(2.0 * (phi - third).cos(), mu), polish(2.0 * phi.cos(), mu)];
        states.sort_by(f64::total_cmp);
        let branches = [Branch::Lower, Branch::Middle, Branch::Upper];
        states
            .iter()
            .zip(branches)
            .map(|(&state, branch)| Root {
                state,
                stability: if branch == Branch::Middle { Stability::Unstable } else { Stability::Stable },
                branch,
                multiplicity: 1,
            })
            .collect()
    } else {
        let state = mu.signum() * 2.0 * ((mu.abs() / 2.0).acosh() / 3.0).cosh();
        vec![Root {
            state: polish(state, mu),
            stability: Stability::Stable,
            branch: if mu > 0.0 { Branch::Upper } else { Branch::Lower },
            multiplicity: 1,
        }]
    }
}

fn polish(u: f64, mu: f64) -> f64 {
    let slope = drift_slope(u);
    if slope == 0.0 {
        return u;
    }
    let candidate = u - drift(u, mu) / slope;
    if drift(candidate, mu).abs() < drift(u, mu).abs() {
        candidate
    } else {
        u
    }
}

/// Root on the lower stable branch, if it exists (`mu < 2`).
pub fn lower_branch(mu: f64) -> Option<f64> {
    equilibria(mu).into_iter().find(|r| r.branch == Branch::Lower).map(|r| r.state)
}

/// Root on the upper stable branch, if it exists (`mu > -2`).
pub fn upper_branch(mu: f64) -> Option<f64> {
    equilibria(mu).into_iter().find(|r| r.branch == Branch::Upper).map(|r| r.state)
}

/// Root on the unstable middle branch, if it exists (`|mu| < 2`).
pub fn middle_branch(mu: f64) -> Option<f64> {
    equilibria(mu).into_iter().find(|r| r.branch == Branch::Middle).map(|r| r.state)
}

/// The tanh ramp `Lambda(s) = lambda_minus + (lambda_plus - lambda_minus)(tanh(s) + 1)/2`
/// with `s = rate * t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterShift {
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub rate: f64,
    /// `|s|` beyond which the ramp counts as saturated.
    pub saturation_s: f64,
}

impl Default for ParameterShift {
    fn default() -> Self {
        ParameterShift { lambda_minus: 0.0, lambda_plus: 4.0, rate: 0.05, saturation_s: 15.0 }
    }
}

impl ParameterShift {
    pub fn new(lambda_minus: f64, lambda_plus: f64, rate: f64) -> Result<Self, ConfigError> {
        let shift = ParameterShift { lambda_minus, lambda_plus, rate, ..Default::default() };
        shift.validate()?;
        Ok(shift)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.lambda_minus.is_finite() && self.lambda_plus.is_finite()) {
            return Err(ConfigError::invalid("shift.lambda", "forcing levels must be finite"));
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(ConfigError::invalid("shift.rate", "rate must be positive"));
        }
        if !(self.saturation_s.is_finite() && self.saturation_s > 0.0) {
            return Err(ConfigError::invalid("shift.saturation_s", "saturation horizon must be positive"));
        }
        Ok(())
    }

    /// Ramp value at rescaled time `s`.
    pub fn value(&self, s: f64) -> f64 {
        self.lambda_minus + (self.lambda_plus - self.lambda_minus) * (s.tanh() + 1.0) / 2.0
    }

    /// Ramp value at time `t`, i.e. `Lambda(r t)`.
    pub fn at_time(&self, t: f64) -> f64 {
        self.value(self.rate * t)
    }

    /// The time at which the ramp passes through `level`, when it does.
    ///
    /// Computed from the closed-form inverse of the tanh profile.
    pub fn time_of_level(&self, level: f64) -> Option<f64> {
        let span = self.lambda_plus - self.lambda_minus;
        if span == 0.0 {
            return None;
        }
        let z = 2.0 * (level - self.lambda_minus) / span - 1.0;
        if z.abs() >= 1.0 {
            return None;
        }
        Some(z.atanh() / self.rate)
    }
}

/// Coupling from the upstream state to the downstream forcing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Coupling {
    /// `M1(x) = a + b (x - x_ref)`.
    Linear { a: f64, b: f64, x_ref: f64 },
    /// `M2(x) = a + b sech(c (x - d))`.
    Localised { a: f64, b: f64, c: f64, d: f64 },
}

impl Coupling {
    /// Linear coupling anchored at the past-limit state `X_l(lambda_minus)`.
    pub fn linear(a: f64, b: f64, shift: &ParameterShift) -> Result<Self, ConfigError> {
        let x_ref = lower_branch(shift.lambda_minus).ok_or_else(|| {
            ConfigError::invalid("shift.lambda_minus", "no lower stable state at lambda_minus (needs lambda_minus < 2)")
        })?;
        let coupling = Coupling::Linear { a, b, x_ref };
        coupling.validate()?;
        Ok(coupling)
    }

    pub fn localised(a: f64, b: f64, c: f64, d: f64) -> Result<Self, ConfigError> {
        let coupling = Coupling::Localised { a, b, c, d };
        coupling.validate()?;
        Ok(coupling)
    }

    /// Default linear coupling `a = 0, b = 1` for the default shift.
    pub fn default_linear() -> Self {
        Coupling::Linear { a: 0.0, b: 1.0, x_ref: lower_branch(0.0).expect("lower state at lambda = 0") }
    }

    /// Default localised coupling `a = 0, b = 1, c = 2, d = 0.5`.
    pub fn default_localised() -> Self {
        Coupling::Localised { a: 0.0, b: 1.0, c: 2.0, d: 0.5 }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let (a, b) = (self.offset(), self.strength());
        if !(a.is_finite() && b.is_finite()) {
            return Err(ConfigError::invalid("coupling", "coefficients must be finite"));
        }
        if b < 0.0 {
            return Err(ConfigError::invalid("coupling.b", "coupling strength must be non-negative"));
        }
        match *self {
            Coupling::Linear { x_ref, .. } if !x_ref.is_finite() => {
                Err(ConfigError::invalid("coupling.x_ref", "reference state must be finite"))
            }
            Coupling::Localised { c, d, .. } if !(c.is_finite() && c > 0.0 && d.is_finite()) => {
                Err(ConfigError::invalid("coupling.c", "width c must be positive and d finite"))
            }
            _ => Ok(()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Coupling::Linear { .. } => "linear",
            Coupling::Localised { .. } => "localised",
        }
    }

    pub fn offset(&self) -> f64 {
        match *self {
            Coupling::Linear { a, .. } | Coupling::Localised { a, .. } => a,
        }
    }

    pub fn strength(&self) -> f64 {
        match *self {
            Coupling::Linear { b, .. } | Coupling::Localised { b, .. } => b,
        }
    }

    /// Same coupling with strength replaced.
    pub fn with_strength(&self, strength: f64) -> Self {
        let mut out = *self;
        match &mut out {
            Coupling::Linear { b, .. } | Coupling::Localised { b, .. } => *b = strength,
        }
        out
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Coupling::Linear { a, b, x_ref } => a + b * (x - x_ref),
            Coupling::Localised { a, b, c, d } => a + b / (c * (x - d)).cosh(),
        }
    }

    pub fn slope(&self, x: f64) -> f64 {
        match *self {
            Coupling::Linear { b, .. } => b,
            Coupling::Localised { b, c, d, .. } => {
                let z = c * (x - d);
                -b * c * z.tanh() / z.cosh()
            }
        }
    }

    /// Exact solutions of `M(x) = level`, ascending.
    ///
    /// Empty when the level is never attained. The localised coupling has two
    /// preimages `d +- arccosh(b / (level - a)) / c` that coincide at its peak.
    pub fn preimages(&self, level: f64) -> Vec<f64> {
        match *self {
            Coupling::Linear { a, b, x_ref } => {
                if b == 0.0 {
                    Vec::new()
                } else {
                    vec![x_ref + (level - a) / b]
                }
            }
            Coupling::Localised { a, b, c, d } => {
                if b == 0.0 {
                    return Vec::new();
                }
                let ratio = (level - a) / b;
                if !(ratio > 0.0 && ratio <= 1.0) {
                    return Vec::new();
                }
                if ratio == 1.0 {
                    return vec![d];
                }
                let half = (1.0 / ratio).acosh() / c;
                vec![d - half, d + half]
            }
        }
    }

    /// Range `(min, max)` of `M` over the closed interval `[lo, hi]`.
    pub fn range_over(&self, lo: f64, hi: f64) -> (f64, f64) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let (m_lo, m_hi) = (self.value(lo), self.value(hi));
        let mut min = m_lo.min(m_hi);
        let mut max = m_lo.max(m_hi);
        if let Coupling::Localised { d, .. } = *self {
            if lo <= d && d <= hi {
                let peak = self.value(d);
                min = min.min(peak);
                max = max.max(peak);
            }
        }
        (min, max)
    }
}

/// Full problem statement for one cascade simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig {
    pub element: CubicElement,
    pub shift: ParameterShift,
    pub coupling: Coupling,
    /// Downstream-to-upstream timescale ratio.
    pub epsilon: f64,
    /// State level that marks completion of tipping, for both subsystems.
    pub offset_threshold_w: f64,
    pub solver: SolverSettings,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            element: CubicElement,
            shift: ParameterShift::default(),
            coupling: Coupling::default_linear(),
            epsilon: 0.05,
            offset_threshold_w: 1.8,
            solver: SolverSettings::default(),
        }
    }
}

impl CascadeConfig {
    /// Default problem with localised coupling.
    pub fn default_localised() -> Self {
        CascadeConfig { coupling: Coupling::default_localised(), ..Default::default() }
    }

    pub fn with_strength(mut self, b: f64) -> Self {
        self.coupling = self.coupling.with_strength(b);
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// Checks every invariant the simulation relies on.
    ///
    /// The threshold `w` must sit above the unstable branch at `lambda_plus`
    /// (or above the fold state `-1` when that branch is gone) and below the
    /// upper stable state at `lambda_plus`.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.shift.validate()?;
        self.coupling.validate()?;
        self.solver.validate()?;
        if !(self.epsilon.is_finite() && self.epsilon >= MIN_EPSILON) {
            return Err(ConfigError::invalid(
                "epsilon",
                format!("timescale ratio must be at least {MIN_EPSILON} (got {})", self.epsilon),
            ));
        }
        if lower_branch(self.shift.lambda_minus).is_none() {
            return Err(ConfigError::invalid("shift.lambda_minus", "lambda_minus must be below 2"));
        }
        let w = self.offset_threshold_w;
        let upper = upper_branch(self.shift.lambda_plus)
            .ok_or_else(|| ConfigError::invalid("shift.lambda_plus", "no upper stable state at lambda_plus"))?;
        let floor = middle_branch(self.shift.lambda_plus).unwrap_or(CubicElement::FOLD_STATE_AT_UPPER);
        if !(w.is_finite() && w > floor && w < upper) {
            return Err(ConfigError::invalid(
                "w",
                format!(
                    "offset threshold must lie in ({floor:.6}, {upper:.6}) for lambda_plus = {}",
                    self.shift.lambda_plus
                ),
            ));
        }
        Ok(())
    }
}
