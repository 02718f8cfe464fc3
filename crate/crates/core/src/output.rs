//! Plot-ready CSV emission.
//!
//! Numbers are written with 17 significant digits in the style of C's
//! `%.17g`, independent of locale, so identical inputs give byte-identical
//! files. Column orders are fixed:
//!
//! | table | header |
//! |-------|--------|
//! | trajectory | `t,s,lambda,x,y,mu` |
//! | fold curves | `b,lambda,subsystem,branch,multiplicity` |
//! | branch diagram | `lambda,x_lower,x_middle,x_upper` |
//! | frozen equilibria | `lambda,x,y,x_branch,y_branch,stable,eig_x,eig_y` |
//! | regime map | `b,epsilon,scenario,t_on_u,t_off_u,t_on_d,t_off_d,overshoot,intermediate` |
//! | boundary curve | `kind,b,epsilon,residual` |
//! | frozen tipping path | `t,x,mu` |

use std::io::{self, Write};

use crate::bifurcation::{BranchRow, CuspPoint, FoldCurve, FrozenEquilibrium, FrozenTippingTrajectory};
use crate::integrator::Sample;
use crate::model::Coupling;
use crate::regimes::{BoundaryCurve, RegimeMap};

/// `%.17g`-style formatting: 17 significant digits, trailing zeros removed.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        let mantissa = trim_zeros(mantissa.to_string());
        format!("{}e{}{:02}", mantissa, if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

pub const TRAJECTORY_HEADER: &str = "t,s,lambda,x,y,mu";
pub const FOLD_HEADER: &str = "b,lambda,subsystem,branch,multiplicity";
pub const BRANCH_HEADER: &str = "lambda,x_lower,x_middle,x_upper";
pub const EQUILIBRIA_HEADER: &str = "lambda,x,y,x_branch,y_branch,stable,eig_x,eig_y";
pub const REGIME_HEADER: &str = "b,epsilon,scenario,t_on_u,t_off_u,t_on_d,t_off_d,overshoot,intermediate";
pub const BOUNDARY_HEADER: &str = "kind,b,epsilon,residual";
pub const TIPPING_PATH_HEADER: &str = "t,x,mu";

pub fn write_trajectory<W: Write>(mut w: W, samples: impl IntoIterator<Item = Sample>) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for s in samples {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_num(s.t),
            fmt_num(s.s),
            fmt_num(s.lambda),
            fmt_num(s.x),
            fmt_num(s.y),
            fmt_num(s.mu)
        )?;
    }
    Ok(())
}

/// Fold curves followed by cusp rows; a cusp row has subsystem `cusp`, the
/// branch of the coalescing fold state and multiplicity 2.
pub fn write_fold_curves<W: Write>(mut w: W, curves: &[FoldCurve], cusps: &[CuspPoint]) -> io::Result<()> {
    writeln!(w, "{FOLD_HEADER}")?;
    for curve in curves {
        for p in &curve.points {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_num(p.b),
                fmt_num(p.lambda),
                p.subsystem.as_str(),
                p.x_branch.as_str(),
                p.multiplicity
            )?;
        }
    }
    for c in cusps {
        writeln!(w, "{},{},cusp,{},2", fmt_num(c.b), fmt_num(c.lambda), crate::model::Branch::of_state(c.x).as_str())?;
    }
    Ok(())
}

/// The frozen tipping path with `mu = M(x)` for `coupling`.
pub fn write_tipping_path<W: Write>(mut w: W, path: &FrozenTippingTrajectory, coupling: &Coupling) -> io::Result<()> {
    writeln!(w, "{TIPPING_PATH_HEADER}")?;
    for (t, x) in path.times.iter().zip(&path.states) {
        writeln!(w, "{},{},{}", fmt_num(*t), fmt_num(*x), fmt_num(coupling.value(*x)))?;
    }
    Ok(())
}

pub fn write_branch_diagram<W: Write>(mut w: W, rows: &[BranchRow]) -> io::Result<()> {
    writeln!(w, "{BRANCH_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", fmt_num(r.lambda), opt(r.lower), opt(r.middle), opt(r.upper))?;
    }
    Ok(())
}

pub fn write_equilibria<W: Write>(mut w: W, eqs: &[FrozenEquilibrium]) -> io::Result<()> {
    writeln!(w, "{EQUILIBRIA_HEADER}")?;
    for e in eqs {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt_num(e.lambda),
            fmt_num(e.x),
            fmt_num(e.y),
            e.x_branch.as_str(),
            e.y_branch.as_str(),
            e.stable,
            fmt_num(e.eigenvalues[0]),
            fmt_num(e.eigenvalues[1])
        )?;
    }
    Ok(())
}

/// Failed cells carry the scenario label `failed` and empty timings.
pub fn write_regime_map<W: Write>(mut w: W, map: &RegimeMap) -> io::Result<()> {
    writeln!(w, "{REGIME_HEADER}")?;
    for cell in &map.cells {
        match &cell.result {
            Ok(r) => writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                fmt_num(cell.b),
                fmt_num(cell.epsilon),
                r.scenario.as_str(),
                opt(r.timings.t_on_u),
                opt(r.timings.t_off_u),
                opt(r.timings.t_on_d),
                opt(r.timings.t_off_d),
                r.overshoot,
                r.intermediate_state.map(|b| b.to_string()).unwrap_or_default()
            )?,
            Err(_) => writeln!(w, "{},{},failed,,,,,,", fmt_num(cell.b), fmt_num(cell.epsilon))?,
        }
    }
    Ok(())
}

/// Gaps in a curve are written as rows with empty coordinates.
pub fn write_boundaries<W: Write>(mut w: W, curves: &[BoundaryCurve]) -> io::Result<()> {
    writeln!(w, "{BOUNDARY_HEADER}")?;
    for curve in curves {
        for p in &curve.points {
            match p {
                Some(p) => writeln!(
                    w,
                    "{},{},{},{}",
                    curve.kind.as_str(),
                    fmt_num(p.b),
                    fmt_num(p.epsilon),
                    fmt_num(p.residual)
                )?,
                None => writeln!(w, "{},,,", curve.kind.as_str())?,
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_formatting() {
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(0.1), "0.10000000000000001");
        assert_eq!(fmt_num(-2.5), "-2.5");
        assert_eq!(fmt_num(1e-7), "9.9999999999999995e-08");
        assert_eq!(fmt_num(1.5e20), "1.5e+20");
        assert_eq!(fmt_num(123456.0), "123456");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-1.732_050_807_568_877_2), "-1.7320508075688772");
    }

    #[test]
    fn g17_round_trips() {
        for v in [std::f64::consts::PI, 1e-300, -7.25e12, 0.509_181_282_823_193_3, 2.0f64.sqrt() * 1e16] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
    }
}
