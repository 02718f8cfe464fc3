//! Dormand-Prince 5(4) with Hairer's fourth-order continuous extension.
//!
//! The stepper is generic over a fixed-size state so the same engine drives
//! the two-state cascade and the one-state frozen tipping trajectory.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy)]
pub(crate) struct StepOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

/// Interpolation data for one accepted step `[t, t + h]`.
///
/// With `theta = (t' - t) / h` the interpolant is
/// `y0 + theta (r0 + (1 - theta)(r1 + theta (r2 + (1 - theta) r3)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Segment<const N: usize> {
    pub coeffs: [[f64; N]; 4],
}

impl<const N: usize> Segment<N> {
    #[inline]
    pub fn eval(&self, y0: &[f64; N], theta: f64) -> [f64; N] {
        let th1 = 1.0 - theta;
        let [r0, r1, r2, r3] = &self.coeffs;
        std::array::from_fn(|i| y0[i] + theta * (r0[i] + th1 * (r1[i] + theta * (r2[i] + th1 * r3[i]))))
    }
}

/// Dense solution: accepted nodes plus one segment per step.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct DenseOutput<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub segments: Vec<Segment<N>>,
}

impl<const N: usize> DenseOutput<N> {
    pub fn eval(&self, t: f64) -> Option<[f64; N]> {
        let (&first, &last) = (self.times.first()?, self.times.last()?);
        if !(first..=last).contains(&t) {
            return None;
        }
        let idx = self.times.partition_point(|&ti| ti <= t);
        if idx == 0 {
            return Some(self.states[0]);
        }
        let i = idx - 1;
        if self.times[i] == t || i == self.segments.len() {
            return Some(self.states[i]);
        }
        Some(self.eval_in(i, t))
    }

    /// Interpolated state inside segment `i`.
    #[inline]
    pub fn eval_in(&self, i: usize, t: f64) -> [f64; N] {
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        if t == t1 {
            return self.states[i + 1];
        }
        let theta = (t - t0) / (t1 - t0);
        self.segments[i].eval(&self.states[i], theta)
    }
}

pub(crate) enum Control {
    Continue,
    Stop,
}

pub(crate) enum Outcome {
    /// Stopped by the callback.
    Stopped,
    /// Reached `t_end`.
    Reached,
    Underflow {
        t: f64,
        step: f64,
    },
    Budget {
        t: f64,
    },
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], opts: &StepOptions) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let sc = opts.abs_tol + opts.rel_tol * y0[i].abs().max(y1[i].abs());
            (err[i] / sc).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

fn weighted_norm<const N: usize>(v: &[f64; N], y: &[f64; N], opts: &StepOptions) -> f64 {
    let sum: f64 = (0..N).map(|i| (v[i] / (opts.abs_tol + opts.rel_tol * y[i].abs())).powi(2)).sum();
    (sum / N as f64).sqrt()
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

/// Initial step guess after Hairer & Wanner's `hinit`.
fn initial_step<const N: usize, F>(
    rhs: &mut F,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    dir: f64,
    opts: &StepOptions,
) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let d0 = weighted_norm(y0, y0, opts);
    let d1 = weighted_norm(f0, y0, opts);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(opts.max_step);
    let y1 = axpy(y0, dir * h0, &[(1.0, f0)]);
    let f1 = rhs(t0 + dir * h0, &y1);
    let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
    let d2 = weighted_norm(&diff, y0, opts) / h0;
    let dmax = d1.max(d2);
    let h1 = if dmax <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dmax).powf(0.2) };
    (100.0 * h0).min(h1).min(opts.max_step)
}

/// Integrates forward from `t0` to `t_end`, recording every accepted step.
///
/// `after_step` sees each accepted node and may stop the integration early.
pub(crate) fn integrate<const N: usize, F, S>(
    mut rhs: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &StepOptions,
    mut after_step: S,
) -> (DenseOutput<N>, Outcome)
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    S: FnMut(f64, &[f64; N]) -> Control,
{
    let mut out = DenseOutput { times: vec![t0], states: vec![y0], segments: Vec::new() };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let mut h = initial_step(&mut rhs, t, &y, &k1, 1.0, opts);
    let mut last_rejected = false;
    let mut steps = 0usize;

    while t < t_end {
        if steps >= opts.max_steps {
            return (out, Outcome::Budget { t });
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return (out, Outcome::Underflow { t, step: h });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        let k2 = rhs(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = rhs(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = rhs(t + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let t_new = if last { t_end } else { t + h };
        let k7 = rhs(t_new, &y_new);
        steps += 1;

        let err_vec = axpy(&[0.0; N], h, &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);
        let err = error_norm(&err_vec, &y, &y_new, opts);
        if !err.is_finite() {
            h *= FAC_MIN;
            last_rejected = true;
            continue;
        }

        if err <= 1.0 {
            let ydiff: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
            let bspl: [f64; N] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
            let r3: [f64; N] = std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]);
            let r4: [f64; N] = std::array::from_fn(|i| {
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
            });
            out.segments.push(Segment { coeffs: [ydiff, bspl, r3, r4] });
            out.times.push(t_new);
            out.states.push(y_new);

            t = t_new;
            y = y_new;
            k1 = k7;

            let mut fac = (SAFETY * err.max(1e-10).powf(-0.2)).clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(opts.max_step);
            last_rejected = false;

            if let Control::Stop = after_step(t, &y) {
                return (out, Outcome::Stopped);
            }
        } else {
            h *= (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
            last_rejected = true;
        }
    }
    (out, Outcome::Reached)
}
