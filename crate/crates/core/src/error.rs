use thiserror::Error;

use crate::integrator::Trajectory;

/// Invalid problem statement; `key` names the offending field.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { key: key.into(), message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum IntegrationError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("step size underflow at t = {t} (h = {step:e}, state = {state:?})")]
    StepSizeUnderflow { t: f64, step: f64, state: [f64; 2] },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
    #[error("horizon exceeded: state did not settle by t_max = {t_max}")]
    HorizonExceeded { t_max: f64, partial: Box<Trajectory> },
}

impl IntegrationError {
    /// Partial trajectory, when the failure left one behind.
    pub fn partial(&self) -> Option<&Trajectory> {
        match self {
            IntegrationError::HorizonExceeded { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error("bracket invalid: gap has the same sign at both ends ({lo_gap} at {lo}, {hi_gap} at {hi})")]
    BracketInvalid { lo: f64, hi: f64, lo_gap: f64, hi_gap: f64 },
    #[error("bisection stalled at {at} with residual {residual:e}")]
    Stalled { at: f64, residual: f64 },
    #[error("simulation failed at b = {b}, epsilon = {epsilon}: {source}")]
    Simulation {
        b: f64,
        epsilon: f64,
        #[source]
        source: IntegrationError,
    },
}
