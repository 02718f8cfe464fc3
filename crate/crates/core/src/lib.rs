//! Coupled bistable tipping elements under slow ramp forcing.
//!
//! An upstream cubic element `x` is driven by a tanh parameter shift and in
//! turn forces a downstream element `y` through a coupling `M(x)`, with no
//! feedback. The crate simulates this cascade, analyses the frozen system's
//! folds and cusps, sorts simulated cascades into timing scenarios and maps
//! those scenarios over coupling strength and timescale ratio.
//!
//! ```
//! use tipping_cascade::{classify_config, CascadeConfig, ClassifyOptions, Scenario};
//!
//! let config = CascadeConfig::default();
//! let (_, report) = classify_config(&config, &ClassifyOptions::default()).unwrap();
//! assert_eq!(report.scenario, Scenario::DwUB);
//! ```

pub mod bifurcation;
pub mod classify;
pub mod error;
pub mod integrator;
pub mod model;
pub mod output;
pub mod regimes;

pub use bifurcation::{
    cusp_points, fold_curves, frozen_equilibria, frozen_tipping_trajectory, predict_dwub, CuspPoint,
    DownstreamPrediction, DwubPrediction, FoldCurve, FoldCurveOptions, FoldCurvePoint, FrozenEquilibrium,
    FrozenTippingTrajectory, Subsystem,
};
pub use classify::{
    classify_config, classify_scenario, classify_trajectory, detect_intermediate_state, downstream_outcome,
    upstream_outcome, ClassificationReport, ClassifyOptions, DownstreamOutcome, Scenario, TippingTimings,
    UpstreamOutcome,
};
pub use error::{BoundaryError, ConfigError, IntegrationError};
pub use integrator::{integrate_cascade, locate_events, EventKind, EventRecord, SolverSettings, Trajectory};
pub use model::{drift, equilibria, Branch, CascadeConfig, Coupling, CubicElement, ParameterShift};
pub use regimes::{bisect_boundary, sweep_regimes, trace_boundary, BoundaryCurve, BoundaryKind, RegimeMap};

// Guide chapters are compiled as doc-tests so their snippets stay in sync.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/bifurcations.md")]
    mod bifurcations {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/regimes.md")]
    mod regimes {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
