//! Frozen-system analysis: equilibria of the coupled frozen system, fold
//! curves and cusps in the `(lambda, b)` plane, the frozen tipping trajectory
//! and the within-tipping predictor built on it.
//!
//! Because the coupling is one-way, every fold is explicit. The upstream
//! element folds on the vertical lines `lambda = +-2`. The downstream element
//! folds where `M(x*) = +-2` for an upstream equilibrium `x*`, and since
//! `drift(x*, lambda) = 0` that fold sits at `lambda = x*^3 - 3 x*`.

use serde::{Deserialize, Serialize};

use crate::integrator::dopri::{self, Control, StepOptions};
use crate::model::{
    drift_slope, equilibria, lower_branch, upper_branch, Branch, Coupling, ParameterShift, Stability, LAMBDA_LOWER,
    LAMBDA_UPPER,
};

/// Equilibrium of the frozen cascade at fixed `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrozenEquilibrium {
    pub lambda: f64,
    pub x: f64,
    pub y: f64,
    pub x_branch: Branch,
    pub y_branch: Branch,
    /// Diagonal of the lower-triangular Jacobian: `3 - 3x^2` and `(3 - 3y^2) / eps`.
    pub eigenvalues: [f64; 2],
    pub stable: bool,
    /// Either component is a double root.
    pub degenerate: bool,
}

impl FrozenEquilibrium {
    pub fn branches(&self) -> (Branch, Branch) {
        (self.x_branch, self.y_branch)
    }
}

/// All equilibria of the frozen cascade, ordered by `x` then `y`.
///
/// Between one and nine, composed from the upstream roots at `lambda` and the
/// downstream roots at `M(x*)`.
pub fn frozen_equilibria(lambda: f64, coupling: &Coupling, epsilon: f64) -> Vec<FrozenEquilibrium> {
    let mut out = Vec::with_capacity(9);
    for up in equilibria(lambda) {
        let mu = coupling.value(up.state);
        for down in equilibria(mu) {
            let eigenvalues = [drift_slope(up.state), drift_slope(down.state) / epsilon];
            let degenerate = up.stability == Stability::Degenerate || down.stability == Stability::Degenerate;
            out.push(FrozenEquilibrium {
                lambda,
                x: up.state,
                y: down.state,
                x_branch: up.branch,
                y_branch: down.branch,
                eigenvalues,
                stable: !degenerate && eigenvalues.iter().all(|&e| e < 0.0),
                degenerate,
            });
        }
    }
    out
}

/// Row of the single-element branch diagram; absent branches are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub lambda: f64,
    pub lower: Option<f64>,
    pub middle: Option<f64>,
    pub upper: Option<f64>,
}

pub fn branch_diagram(lambdas: impl IntoIterator<Item = f64>) -> Vec<BranchRow> {
    lambdas
        .into_iter()
        .map(|lambda| {
            let mut row = BranchRow { lambda, lower: None, middle: None, upper: None };
            for root in equilibria(lambda) {
                match root.branch {
                    Branch::Lower => row.lower = Some(root.state),
                    Branch::Middle => row.middle = Some(root.state),
                    Branch::Upper => row.upper = Some(root.state),
                }
            }
            // The fold's double root is the meeting point of a stable branch
            // and the middle one.
            if lambda == LAMBDA_UPPER {
                row.middle = row.lower;
            } else if lambda == LAMBDA_LOWER {
                row.middle = row.upper;
            }
            row
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subsystem {
    Upstream,
    Downstream,
}

impl Subsystem {
    pub fn as_str(self) -> &'static str {
        match self {
            Subsystem::Upstream => "upstream",
            Subsystem::Downstream => "downstream",
        }
    }
}

/// A point on a fold curve in the `(lambda, b)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldCurvePoint {
    pub lambda: f64,
    pub b: f64,
    pub subsystem: Subsystem,
    /// Branch of the upstream equilibrium carrying the fold.
    pub x_branch: Branch,
    pub x_state: f64,
    /// Number of coincident folds: on the upstream lines, one per downstream
    /// equilibrium sharing the fold; 1 on downstream curves.
    pub multiplicity: u8,
}

/// One connected polyline of fold points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldCurve {
    pub subsystem: Subsystem,
    /// Forcing level of the fold: `+2` or `-2`.
    pub level: f64,
    /// For downstream folds, which preimage of the level under `M`
    /// (ascending); 0 for upstream lines.
    pub preimage: usize,
    pub points: Vec<FoldCurvePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldCurveOptions {
    pub b_range: (f64, f64),
    /// Samples before refinement.
    pub initial_samples: usize,
    /// Log spacing for the initial samples.
    pub log_spacing: bool,
    /// Points with `lambda` outside this window are dropped.
    pub lambda_window: (f64, f64),
    /// Refine until adjacent points differ by less than this in `lambda`.
    pub max_lambda_gap: f64,
}

impl Default for FoldCurveOptions {
    fn default() -> Self {
        FoldCurveOptions {
            b_range: (0.05, 10.0),
            initial_samples: 200,
            log_spacing: true,
            lambda_window: (-6.0, 6.0),
            max_lambda_gap: 0.01,
        }
    }
}

/// `phi` with `M(x) = a + b phi(x)`; both families are affine in `b`.
fn unit_profile(coupling: &Coupling, x: f64) -> f64 {
    coupling.with_strength(1.0).value(x) - coupling.offset()
}

/// Downstream folds at the coupling's own strength: `(x*, lambda)` pairs for
/// each preimage of `level`.
pub fn downstream_folds(coupling: &Coupling, level: f64) -> Vec<(f64, f64)> {
    coupling.preimages(level).into_iter().map(|x| (x, x * x * x - 3.0 * x)).collect()
}

/// Coupling strengths at which a downstream fold of `level` sits exactly at
/// `lambda`, ascending.
///
/// The fold state must be an upstream equilibrium at `lambda`, so this solves
/// `M(x*) = level` over the (at most three) roots of `drift(., lambda)`.
pub fn fold_strengths_at(coupling: &Coupling, level: f64, lambda: f64) -> Vec<f64> {
    let a = coupling.offset();
    let mut out: Vec<f64> = equilibria(lambda)
        .into_iter()
        .filter_map(|root| {
            let phi = unit_profile(coupling, root.state);
            if phi == 0.0 {
                return None;
            }
            let b = (level - a) / phi;
            (b.is_finite() && b > 0.0).then_some(b)
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn sample_grid(opts: &FoldCurveOptions) -> Vec<f64> {
    let (lo, hi) = opts.b_range;
    let n = opts.initial_samples.max(2);
    if lo == hi {
        return vec![lo];
    }
    (0..n)
        .map(|i| {
            let f = i as f64 / (n - 1) as f64;
            if opts.log_spacing && lo > 0.0 {
                lo * (hi / lo).powf(f)
            } else {
                lo + (hi - lo) * f
            }
        })
        .collect()
}

fn downstream_point(coupling: &Coupling, b: f64, level: f64, preimage: usize) -> Option<FoldCurvePoint> {
    let pre = coupling.with_strength(b).preimages(level);
    let x = match pre.len() {
        0 => return None,
        1 => pre[0],
        _ => *pre.get(preimage)?,
    };
    Some(FoldCurvePoint {
        lambda: x * x * x - 3.0 * x,
        b,
        subsystem: Subsystem::Downstream,
        x_branch: Branch::of_state(x),
        x_state: x,
        multiplicity: 1,
    })
}

/// Builds one downstream polyline, refining in `b` until neighbouring points
/// are within `max_lambda_gap` in `lambda` and closing in on the edges where
/// the level becomes attainable.
fn downstream_curve(coupling: &Coupling, level: f64, preimage: usize, opts: &FoldCurveOptions) -> Vec<FoldCurve> {
    let grid = sample_grid(opts);
    let (wlo, whi) = opts.lambda_window;
    let in_window = |p: &FoldCurvePoint| p.lambda >= wlo && p.lambda <= whi;
    let at = |b: f64| downstream_point(coupling, b, level, preimage).filter(in_window);

    let mut dense: Vec<(f64, Option<FoldCurvePoint>)> = Vec::new();
    for pair in grid.windows(2).map(|w| (w[0], w[1])).chain(std::iter::once((grid[grid.len() - 1], f64::NAN))) {
        let (b0, b1) = pair;
        let p0 = at(b0);
        dense.push((b0, p0));
        if b1.is_nan() {
            break;
        }
        refine_between(&at, b0, p0, b1, at(b1), opts.max_lambda_gap, 0, &mut dense);
    }

    let mut curves = Vec::new();
    let mut current: Vec<FoldCurvePoint> = Vec::new();
    for (_, p) in dense {
        match p {
            Some(p) => current.push(p),
            None => {
                if !current.is_empty() {
                    curves.push(std::mem::take(&mut current));
                }
            }
        }
    }
    if !current.is_empty() {
        curves.push(current);
    }
    curves.into_iter().map(|points| FoldCurve { subsystem: Subsystem::Downstream, level, preimage, points }).collect()
}

const MAX_REFINE_DEPTH: u32 = 48;

#[allow(clippy::too_many_arguments)]
fn refine_between(
    at: &impl Fn(f64) -> Option<FoldCurvePoint>,
    b0: f64,
    p0: Option<FoldCurvePoint>,
    b1: f64,
    p1: Option<FoldCurvePoint>,
    gap: f64,
    depth: u32,
    out: &mut Vec<(f64, Option<FoldCurvePoint>)>,
) {
    if depth >= MAX_REFINE_DEPTH {
        return;
    }
    let split = match (p0, p1) {
        (Some(a), Some(b)) => (a.lambda - b.lambda).abs() >= gap,
        (None, None) => false,
        // Existence edge: keep bisecting so the polyline reaches it.
        _ => (b1 - b0) > 1e-12 * b1.abs().max(1.0),
    };
    if !split {
        return;
    }
    let bm = 0.5 * (b0 + b1);
    let pm = at(bm);
    refine_between(at, b0, p0, bm, pm, gap, depth + 1, out);
    out.push((bm, pm));
    refine_between(at, bm, pm, b1, p1, gap, depth + 1, out);
}

/// Number of downstream equilibria at forcing `mu`, double roots counted once.
fn downstream_count(mu: f64) -> u8 {
    equilibria(mu).len() as u8
}

/// Upstream fold lines at `lambda = +-2` with their multiplicities.
///
/// At `lambda = 2` the upstream fold state is `-1`, so every downstream
/// equilibrium at `mu = M(-1)` shares the fold; likewise `+1` at `lambda = -2`.
/// A new polyline starts wherever the multiplicity changes, and the change
/// points themselves are located exactly.
fn upstream_lines(coupling: &Coupling, opts: &FoldCurveOptions) -> Vec<FoldCurve> {
    let base = sample_grid(opts);
    let mut curves = Vec::new();
    for (lambda, x_fold) in [(LAMBDA_LOWER, 1.0), (LAMBDA_UPPER, -1.0)] {
        let mut grid = base.clone();
        let phi = unit_profile(coupling, x_fold);
        let a = coupling.offset();
        let mut extra: Vec<f64> = [LAMBDA_LOWER, LAMBDA_UPPER]
            .iter()
            .filter(|_| phi != 0.0)
            .map(|&level| (level - a) / phi)
            .filter(|b| *b >= opts.b_range.0 && *b <= opts.b_range.1)
            .collect();
        grid.append(&mut extra);
        grid.sort_by(f64::total_cmp);
        grid.dedup();

        let mut current: Vec<FoldCurvePoint> = Vec::new();
        for &b in &grid {
            let mu = coupling.with_strength(b).value(x_fold);
            let multiplicity = downstream_count(mu);
            let point = FoldCurvePoint {
                lambda,
                b,
                subsystem: Subsystem::Upstream,
                x_branch: Branch::of_state(x_fold),
                x_state: x_fold,
                multiplicity,
            };
            if let Some(last) = current.last() {
                if last.multiplicity != multiplicity {
                    curves.push(FoldCurve {
                        subsystem: Subsystem::Upstream,
                        level: lambda,
                        preimage: 0,
                        points: std::mem::take(&mut current),
                    });
                }
            }
            current.push(point);
        }
        if !current.is_empty() {
            curves.push(FoldCurve { subsystem: Subsystem::Upstream, level: lambda, preimage: 0, points: current });
        }
    }
    curves
}

/// All fold curves of the frozen cascade over a range of coupling strengths.
///
/// The coupling's own strength is ignored; its other coefficients fix the
/// family. The result is empty for downstream folds whose level `M` never
/// attains.
pub fn fold_curves(coupling: &Coupling, opts: &FoldCurveOptions) -> Vec<FoldCurve> {
    let mut curves = upstream_lines(coupling, opts);
    let preimages = match coupling {
        Coupling::Linear { .. } => 1,
        Coupling::Localised { .. } => 2,
    };
    for level in [LAMBDA_UPPER, LAMBDA_LOWER] {
        for preimage in 0..preimages {
            curves.extend(downstream_curve(coupling, level, preimage, opts));
        }
    }
    curves
}

/// Point where the two downstream fold branches of a localised coupling meet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuspPoint {
    pub lambda: f64,
    pub b: f64,
    pub x: f64,
    /// Fold level `+-2` whose preimages coalesce.
    pub level: f64,
}

/// Cusps of the downstream fold curves.
///
/// Only the localised family has them: the preimages `d +- arccosh(b/(level - a))/c`
/// coalesce at `b = level - a`, `x* = d`. The monotone linear family has none.
pub fn cusp_points(coupling: &Coupling) -> Vec<CuspPoint> {
    match *coupling {
        Coupling::Linear { .. } => Vec::new(),
        Coupling::Localised { a, d, .. } => [LAMBDA_UPPER, LAMBDA_LOWER]
            .into_iter()
            .filter(|level| level - a > 0.0)
            .map(|level| CuspPoint { lambda: d * d * d - 3.0 * d, b: level - a, x: d, level })
            .collect(),
    }
}

/// The connecting orbit of the frozen upstream element at `lambda = 2`, from
/// the fold state `-1` to the surviving attractor `2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenTippingTrajectory {
    /// Time since leaving `x_fold + delta`.
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub x_fold: f64,
    pub x_end: f64,
    pub delta: f64,
}

impl FrozenTippingTrajectory {
    pub fn duration(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    /// Range `(min, max)` of `M` along the sampled path.
    pub fn coupling_range(&self, coupling: &Coupling) -> (f64, f64) {
        let first = self.states[0];
        let last = *self.states.last().unwrap_or(&first);
        coupling.range_over(first, last)
    }
}

pub const TIPPING_TRAJECTORY_DELTA: f64 = 1e-6;
pub const TIPPING_TRAJECTORY_END_TOL: f64 = 1e-6;

/// Integrates `dx/dt = f(x, 2) = -(x + 1)^2 (x - 2)` from `-1 + delta` until
/// it is within `1e-6` of `2`.
pub fn frozen_tipping_trajectory() -> FrozenTippingTrajectory {
    let x_fold = -1.0;
    let x_end = 2.0;
    let delta = TIPPING_TRAJECTORY_DELTA;
    let opts = StepOptions { rel_tol: 1e-12, abs_tol: 1e-14, max_step: 1e7, max_steps: 1_000_000 };
    // Integrated in v = x + 1, where the drift factors as v^2 (3 - v).
    let (dense, _) = dopri::integrate(
        |_, u: &[f64; 1]| [u[0] * u[0] * (3.0 - u[0])],
        0.0,
        [delta],
        1e12,
        &opts,
        |_, u| if x_end - (u[0] + x_fold) <= TIPPING_TRAJECTORY_END_TOL { Control::Stop } else { Control::Continue },
    );
    FrozenTippingTrajectory {
        times: dense.times,
        states: dense.states.into_iter().map(|[v]| v + x_fold).collect(),
        x_fold,
        x_end,
        delta,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DownstreamPrediction {
    /// `M` stays below the fold level along the tipping path and afterwards.
    DownstreamTracking,
    /// `M` passes the fold level while the upstream element is tipping.
    DownstreamTipsWithin,
    /// `M` stays below the level during upstream tipping but passes it later
    /// on the new upstream branch. This case goes beyond the two-case
    /// statement for the within-tipping criterion.
    DownstreamTipsAfter,
}

impl DownstreamPrediction {
    pub fn as_str(self) -> &'static str {
        match self {
            DownstreamPrediction::DownstreamTracking => "downstream_tracking",
            DownstreamPrediction::DownstreamTipsWithin => "downstream_tips_within",
            DownstreamPrediction::DownstreamTipsAfter => "downstream_tips_after",
        }
    }
}

/// Frozen-limit (`r, eps -> 0`) prediction for the downstream element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwubPrediction {
    pub outcome: DownstreamPrediction,
    /// Largest `M` along the frozen tipping trajectory.
    pub trajectory_max: f64,
    /// Largest `M` along the upper branch for `lambda` in `[2, lambda_plus]`.
    pub branch_max: f64,
    /// Largest `M` along the lower branch before the upstream fold. Above 2
    /// the downstream element tips before the upstream one and the
    /// within-tipping criterion does not apply.
    pub pre_tipping_max: f64,
}

impl DwubPrediction {
    pub fn tips_before_upstream(&self) -> bool {
        self.pre_tipping_max > LAMBDA_UPPER
    }
}

/// Predicts whether downstream tipping happens within upstream B-tipping.
///
/// The frozen tipping trajectory is monotone from `-1` to `2`, so the image
/// of `M` along it is `M` over that interval; the same holds for the upper
/// branch `X_u(lambda)` on `[2, lambda_plus]`.
pub fn predict_dwub(coupling: &Coupling, shift: &ParameterShift) -> DwubPrediction {
    let (_, trajectory_max) = coupling.range_over(-1.0, 2.0);
    let x_plus = upper_branch(shift.lambda_plus.max(LAMBDA_UPPER)).unwrap_or(2.0);
    let (_, branch_max) = coupling.range_over(2.0, x_plus);
    let x_minus = lower_branch(shift.lambda_minus).unwrap_or(-1.0);
    let (_, pre_tipping_max) = coupling.range_over(x_minus, -1.0);
    let outcome = if trajectory_max > LAMBDA_UPPER {
        DownstreamPrediction::DownstreamTipsWithin
    } else if branch_max > LAMBDA_UPPER {
        DownstreamPrediction::DownstreamTipsAfter
    } else {
        DownstreamPrediction::DownstreamTracking
    };
    DwubPrediction { outcome, trajectory_max, branch_max, pre_tipping_max }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::drift;

    const SQRT3: f64 = 1.732_050_807_568_877_2;

    #[test]
    fn nine_equilibria_at_weak_coupling() {
        let c = Coupling::default_linear().with_strength(0.1);
        let eq = frozen_equilibria(0.0, &c, 0.05);
        assert_eq!(eq.len(), 9);
        assert_eq!(eq.iter().filter(|e| e.stable).count(), 4);
    }

    #[test]
    fn seven_equilibria_at_default_coupling() {
        let eq = frozen_equilibria(0.0, &Coupling::default_linear(), 0.05);
        assert_eq!(eq.len(), 7);
        let top: Vec<_> = eq.iter().filter(|e| e.x_branch == Branch::Upper).collect();
        assert_eq!(top.len(), 1);
        assert_eq!(top[0].y_branch, Branch::Upper);
    }

    #[test]
    fn single_equilibrium_after_shift() {
        let eq = frozen_equilibria(4.0, &Coupling::default_linear(), 0.05);
        assert_eq!(eq.len(), 1);
        assert!(eq[0].stable);
    }

    #[test]
    fn frozen_residuals() {
        let c = Coupling::default_localised().with_strength(3.0);
        for k in 0..81 {
            let lambda = -4.0 + 0.1 * k as f64;
            for e in frozen_equilibria(lambda, &c, 0.3) {
                assert!(drift(e.x, lambda).abs() <= 1e-12);
                assert!(drift(e.y, c.value(e.x)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn linear_fold_strengths() {
        let c = Coupling::default_linear();
        let at4 = fold_strengths_at(&c, 2.0, 4.0);
        assert_eq!(at4.len(), 1);
        assert!((at4[0] - 0.509_181_282_823_193_3).abs() < 1e-12);
        let at2 = fold_strengths_at(&c, 2.0, 2.0);
        assert!((at2[0] - 2.0 / (2.0 + SQRT3)).abs() < 1e-14);
        assert!((at2[1] - (1.0 + SQRT3)).abs() < 1e-12);
        let atm2 = fold_strengths_at(&c, 2.0, -2.0);
        assert_eq!(atm2.len(), 1);
        assert!((atm2[0] - 2.0 / (1.0 + SQRT3)).abs() < 1e-14);
    }

    #[test]
    fn localised_folds_at_b4() {
        let c = Coupling::localised(0.0, 4.0, 2.0, 0.5).unwrap();
        let folds = downstream_folds(&c, 2.0);
        assert_eq!(folds.len(), 2);
        assert!((folds[0].0 + 0.158_478_948_462_408_3).abs() < 1e-12);
        assert!((folds[1].0 - 1.158_478_948_462_408_3).abs() < 1e-12);
        assert!((folds[0].1 - 0.471_456_555_137_479).abs() < 1e-12);
        assert!((folds[1].1 + 1.920_672_978_433_002).abs() < 1e-12);
    }

    #[test]
    fn weak_coupling_has_only_thick_upstream_lines() {
        let c = Coupling::default_linear();
        let opts = FoldCurveOptions { b_range: (0.01, 0.1), lambda_window: (-4.0, 4.0), ..Default::default() };
        let curves = fold_curves(&c, &opts);
        assert!(curves.iter().all(|c| c.subsystem == Subsystem::Upstream));
        assert_eq!(curves.len(), 2);
        for curve in curves {
            assert!(curve.points.iter().all(|p| p.multiplicity == 3));
        }
    }

    #[test]
    fn dense_sampling() {
        let opts = FoldCurveOptions { b_range: (0.3, 6.0), ..Default::default() };
        for coupling in [Coupling::default_linear(), Coupling::default_localised()] {
            for curve in fold_curves(&coupling, &opts) {
                if curve.subsystem == Subsystem::Upstream {
                    continue;
                }
                for w in curve.points.windows(2) {
                    assert!((w[0].lambda - w[1].lambda).abs() < 0.01 || (w[1].b - w[0].b) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn cusps() {
        let cusps = cusp_points(&Coupling::default_localised());
        assert_eq!(cusps.len(), 1);
        assert_eq!(cusps[0].b, 2.0);
        assert_eq!(cusps[0].lambda, -1.375);
        assert!(cusp_points(&Coupling::default_linear()).is_empty());
    }

    #[test]
    fn tipping_trajectory_against_closed_form() {
        let path = frozen_tipping_trajectory();
        assert!((path.states[0] + 1.0).abs() <= 1e-6 + 1e-15);
        assert!((path.states.last().unwrap() - 2.0).abs() <= 1e-6);
        assert!(path.states.windows(2).all(|w| w[0] < w[1]));
        // t(x) = ln((x+1)/(2-x))/9 - 1/(3(x+1)) + const.
        let t_of = |x: f64| ((x + 1.0) / (2.0 - x)).ln() / 9.0 - 1.0 / (3.0 * (x + 1.0));
        let t0 = t_of(path.states[0]);
        for (t, x) in path.times.iter().zip(&path.states).step_by(7) {
            let exact = t_of(*x) - t0;
            // Rounding of x near -1 shifts t by about 1e-16 / (x + 1)^2.
            let rounding = 1e-15 / (x + 1.0).powi(2);
            assert!((t - exact).abs() <= 1e-6 * exact.abs().max(1.0) + rounding, "t={t} exact={exact}");
        }
    }

    #[test]
    fn predictor_examples() {
        let shift = ParameterShift::default();
        let p = predict_dwub(&Coupling::default_linear(), &shift);
        assert_eq!(p.outcome, DownstreamPrediction::DownstreamTipsWithin);
        assert!((p.trajectory_max - (2.0 + SQRT3)).abs() < 1e-12);
        let p = predict_dwub(&Coupling::default_linear().with_strength(0.4), &shift);
        assert_eq!(p.outcome, DownstreamPrediction::DownstreamTracking);
        assert!((p.branch_max - 1.571_149_661_2).abs() < 1e-9);
        let p = predict_dwub(&Coupling::default_localised().with_strength(1.9), &shift);
        assert_eq!(p.outcome, DownstreamPrediction::DownstreamTracking);
        let p = predict_dwub(&Coupling::default_linear().with_strength(0.52), &shift);
        assert_eq!(p.outcome, DownstreamPrediction::DownstreamTipsAfter);
    }
}
