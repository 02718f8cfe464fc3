use proptest::prelude::*;
use tipping_cascade::model::{drift_slope, Stability};
use tipping_cascade::*;

/// Roots of `g` on `[lo, hi]` found by sign changes on a fine grid.
fn scan_roots(g: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    let step = (hi - lo) / n as f64;
    let mut a = lo;
    let mut ga = g(a);
    for i in 1..=n {
        let b = lo + step * i as f64;
        let gb = g(b);
        if ga == 0.0 || ga.signum() != gb.signum() {
            let (mut l, mut h) = (a, b);
            for _ in 0..80 {
                let m = 0.5 * (l + h);
                if g(m).signum() == g(l).signum() {
                    l = m;
                } else {
                    h = m;
                }
            }
            roots.push(0.5 * (l + h));
        }
        a = b;
        ga = gb;
    }
    roots
}

fn scan_cubic(mu: f64) -> Vec<f64> {
    scan_roots(|u| drift(u, mu), -6.0, 6.0, 24_000)
}

/// Equilibrium count of the frozen cascade from nested grid scans.
fn scanned_equilibrium_count(lambda: f64, coupling: &Coupling) -> usize {
    scan_cubic(lambda).into_iter().map(|x| scan_cubic(coupling.value(x)).len()).sum()
}

/// Deterministic low-discrepancy samples in the unit square.
fn unit_samples(n: usize) -> impl Iterator<Item = (f64, f64)> {
    let phi = 0.618_033_988_749_894_8;
    let psi = 0.754_877_666_246_692_7;
    (1..=n).map(move |i| ((i as f64 * phi).fract(), (i as f64 * psi).fract()))
}

#[test]
fn equilibrium_counts_match_grid_scan() {
    let mut checked = 0;
    for (u, v) in unit_samples(150) {
        let lambda = -5.0 + 10.0 * u;
        let b = 0.05 + 5.95 * v;
        for coupling in [Coupling::default_linear().with_strength(b), Coupling::default_localised().with_strength(b)] {
            let exact = frozen_equilibria(lambda, &coupling, 0.05).len();
            assert_eq!(exact, scanned_equilibrium_count(lambda, &coupling), "lambda = {lambda}, b = {b}, {coupling:?}");
        }
        checked += 1;
    }
    assert_eq!(checked, 150);
}

proptest! {
    #[test]
    fn cubic_roots_are_odd(mu in -6.0f64..6.0) {
        let up = equilibria(mu);
        let down = equilibria(-mu);
        prop_assert_eq!(up.len(), down.len());
        for (p, q) in up.iter().zip(down.iter().rev()) {
            prop_assert!((p.state + q.state).abs() <= 1e-12);
        }
    }

    #[test]
    fn cubic_root_count_matches_scan(mu in -6.0f64..6.0) {
        prop_assume!((mu.abs() - 2.0).abs() > 1e-6);
        let roots = equilibria(mu);
        let scanned = scan_cubic(mu);
        prop_assert_eq!(roots.len(), scanned.len());
        for (r, s) in roots.iter().zip(&scanned) {
            prop_assert!((r.state - s).abs() <= 1e-9);
            prop_assert!(drift(r.state, mu).abs() <= 1e-12);
        }
        for r in &roots {
            let stable = drift_slope(r.state) < 0.0;
            prop_assert_eq!(r.stability == Stability::Stable, stable);
        }
    }

    #[test]
    fn preimages_round_trip(b in 0.05f64..20.0, level in -3.0f64..3.0, localised in any::<bool>()) {
        let coupling = if localised {
            Coupling::default_localised().with_strength(b)
        } else {
            Coupling::default_linear().with_strength(b)
        };
        for x in coupling.preimages(level) {
            prop_assert!((coupling.value(x) - level).abs() <= 1e-10 * level.abs().max(1.0));
        }
    }

    #[test]
    fn eigenvalues_match_full_jacobian(lambda in -5.0f64..5.0, b in 0.0f64..6.0, eps in 0.01f64..100.0, localised in any::<bool>()) {
        let coupling = if localised {
            Coupling::default_localised().with_strength(b)
        } else {
            Coupling::default_linear().with_strength(b)
        };
        for e in frozen_equilibria(lambda, &coupling, eps) {
            // Full Jacobian [[f_x, 0], [M'(x) f_mu / eps, f_y / eps]] by central differences.
            let h = 1e-6;
            let rhs = |x: f64, y: f64| [drift(x, lambda), drift(y, coupling.value(x)) / eps];
            let (px, mx) = (rhs(e.x + h, e.y), rhs(e.x - h, e.y));
            let (py, my) = (rhs(e.x, e.y + h), rhs(e.x, e.y - h));
            let j = [[(px[0] - mx[0]) / (2.0 * h), (py[0] - my[0]) / (2.0 * h)],
                     [(px[1] - mx[1]) / (2.0 * h), (py[1] - my[1]) / (2.0 * h)]];
            let tr = j[0][0] + j[1][1];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
            let mut full = [(tr - disc) / 2.0, (tr + disc) / 2.0];
            let mut tri = e.eigenvalues;
            full.sort_by(f64::total_cmp);
            tri.sort_by(f64::total_cmp);
            for (a, c) in full.iter().zip(&tri) {
                prop_assert!((a - c).abs() <= 1e-4 * c.abs().max(1.0), "{full:?} vs {tri:?}");
            }
        }
    }

    #[test]
    fn scenario_taxonomy_is_exhaustive(a in -10.0f64..10.0, la in 0.0f64..5.0, c in -10.0f64..10.0, lc in 0.0f64..5.0, has_u in any::<bool>(), has_d in any::<bool>()) {
        let timings = TippingTimings {
            t_on_u: has_u.then_some(a),
            t_off_u: has_u.then_some(a + la),
            t_on_d: has_d.then_some(c),
            t_off_d: has_d.then_some(c + lc),
            ..Default::default()
        };
        let class = classify_scenario(&timings, 1e-6);
        let expected = match (has_u, has_d) {
            (false, _) => Scenario::NoUpstreamTip,
            (true, false) => Scenario::UB,
            _ => class.scenario,
        };
        prop_assert_eq!(class.scenario, expected);
        prop_assert!(Scenario::ALL.contains(&class.scenario));
        if has_u && has_d && !class.boundary {
            let (u0, u1, d0, d1) = (a, a + la, c, c + lc);
            let expected = if d0 > u1 { Scenario::DaUB }
                else if u0 > d1 { Scenario::UaDB }
                else if d0 >= u0 && d1 <= u1 { Scenario::DwUB }
                else if u0 >= d0 && u1 <= d1 { Scenario::UwDB }
                else if d0 > u0 { Scenario::DoUB }
                else { Scenario::UoDB };
            prop_assert_eq!(class.scenario, expected);
        }
    }

    #[test]
    fn scenario_is_invariant_under_time_changes(a in -10.0f64..10.0, la in 0.0f64..5.0, c in -10.0f64..10.0, lc in 0.0f64..5.0, scale in 0.1f64..10.0, shift in -100.0f64..100.0) {
        let timings = TippingTimings {
            t_on_u: Some(a),
            t_off_u: Some(a + la),
            t_on_d: Some(c),
            t_off_d: Some(c + lc),
            ..Default::default()
        };
        let base = classify_scenario(&timings, 1e-6);
        prop_assume!(!base.boundary);
        let moved = classify_scenario(&timings.transformed(scale, shift), 1e-6 * scale);
        prop_assert_eq!(base.scenario, moved.scenario);
    }
}
