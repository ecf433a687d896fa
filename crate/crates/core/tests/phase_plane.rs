use phenolv_core::phase_plane::*;
use phenolv_core::rk::Tolerances;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lv(d: f64, m: f64, b: f64, c: f64) -> LvParams {
    LvParams::new(d, m, b, c).unwrap()
}

/// Bistable parameters: b > d/m and c > m/d.
fn bistable() -> impl Strategy<Value = LvParams> {
    (0.5f64..4.0, 0.5f64..4.0, 1.05f64..3.0, 1.05f64..3.0)
        .prop_map(|(d, m, fb, fc)| lv(d, m, fb * d / m, fc * m / d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn saddle_eigen_identities(p in bistable()) {
        let r = equilibria(&p);
        prop_assert_eq!(r.case, LvCase::Bistable);
        let [ys, xs] = r.p1.unwrap();
        let (l1, l2, k) = saddle_spectrum(&p).unwrap();
        prop_assert!(l1 < 0.0 && l2 > 0.0 && k > 0.0);
        let det = (1.0 - p.b * p.c) * xs * ys;
        prop_assert!((l1 * l2 - det).abs() <= 1e-10 * det.abs());
        prop_assert!((l1 + l2 + xs + ys).abs() <= 1e-10 * (xs + ys));
        let k_alt = -p.c * xs / (xs + l1);
        prop_assert!((k - k_alt).abs() <= 1e-10 * k.abs());
        // (A - l1 I) v = 0 with v = (-b Y*/(Y* + l1), 1)
        let a = p.jacobian(ys, xs);
        let v = [-p.b * ys / (ys + l1), 1.0];
        let res0 = (a[0][0] - l1) * v[0] + a[0][1] * v[1];
        let res1 = a[1][0] * v[0] + (a[1][1] - l1) * v[1];
        prop_assert!(res0.hypot(res1) < 1e-10);
    }

    #[test]
    fn trajectories_stay_nonnegative(y0 in 0.0f64..5.0, x0 in 0.0f64..5.0, p in bistable()) {
        let traj = integrate_lv(&p, y0, x0, 30.0, Tolerances::default()).unwrap();
        for y in &traj.y {
            prop_assert!(y[0] >= -1e-12 && y[1] >= -1e-12);
        }
    }

    #[test]
    fn curvature_sign_follows_rates(p in bistable()) {
        let (_, a2) = local_quadratic(&p).unwrap();
        let gap = p.m_bar - p.d_bar;
        if gap.abs() > 1e-3 {
            prop_assert_eq!(a2.signum(), gap.signum());
        }
    }
}

#[test]
fn equilibria_examples() {
    let r = equilibria(&lv(3.0, 3.0, 2.0, 2.0));
    assert_eq!(r.p1, Some([1.0, 1.0]));
    assert_eq!(r.origin, [0.0, 0.0]);
    assert_eq!(classify(&lv(2.0, 1.0, 0.5, 0.25)), LvCase::Coexistence);
    assert_eq!(classify(&lv(2.0, 1.0, 2.0, 0.5)), LvCase::Degenerate);
    // exclusion cases have a P1 outside the open quadrant
    assert!(equilibria(&lv(3.0, 1.0, 0.5, 0.5)).p1.is_none());
}

#[test]
fn separatrix_endpoints_and_monotonicity() {
    let p = lv(3.0, 2.5, 1.5, 1.2);
    let curve = global_separatrix(&p, &SeparatrixOptions::default()).unwrap();
    let pts = curve.points();
    assert_eq!(pts[0], [0.0, 0.0]);
    assert!(pts[1][0] < 1e-6 && pts[1][1] < 1e-5, "{:?}", pts[1]);
    assert!(pts.windows(2).all(|w| w[1][0] > w[0][0] && w[1][1] > w[0][1]));
    let [ys, xs] = curve.saddle();
    assert!((curve.eval(ys).unwrap() - xs).abs() < 1e-12);
    // upper branch leaves the box
    let last = pts[pts.len() - 1];
    assert!(last[0].max(last[1]) >= 10.0 * 3.0 * (1.0 - 1e-3));
    assert!(curve.functional_residual(&p, 0.05 * ys, last[0]) < 1e-5);
}

#[test]
fn separatrix_box_grows_with_t_max() {
    let p = lv(3.0, 3.0, 2.0, 2.0);
    let short = SeparatrixOptions {
        t_max: 0.5,
        ..SeparatrixOptions::default()
    };
    let a = global_separatrix(&p, &short).unwrap();
    let b = global_separatrix(&p, &SeparatrixOptions::default()).unwrap();
    assert!(b.y_range().1 > a.y_range().1);
}

#[test]
fn local_quadratic_tracks_global_curve() {
    for p in [lv(3.0, 2.5, 1.5, 1.2), lv(2.5, 3.0, 1.2, 1.5)] {
        let curve = global_separatrix(&p, &SeparatrixOptions::default()).unwrap();
        let order = curve.quadratic_deviation_order(0.1).unwrap();
        assert!(order >= 2.7, "order {order}");
        let [ys, _] = curve.saddle();
        let fd = curve.curvature_at(ys, 0.05).unwrap();
        assert!((fd - 2.0 * curve.local_a2()).abs() < 1e-3 * fd.abs().max(1e-3), "{fd} vs {}", curve.local_a2());
    }
}

#[test]
fn basins_match_long_time_limits() {
    let p = lv(3.0, 2.5, 1.5, 1.2);
    let curve = global_separatrix(&p, &SeparatrixOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let (y0, x0) = (rng.random_range(0.01..6.0), rng.random_range(0.01..5.0));
        let traj = integrate_lv(&p, y0, x0, 500.0, Tolerances::default()).unwrap();
        let (_, end) = traj.last().unwrap();
        let got = if (end[0] - 3.0).abs() < 1e-6 && end[1].abs() < 1e-6 {
            Basin::ToP2
        } else if end[0].abs() < 1e-6 && (end[1] - 2.5).abs() < 1e-6 {
            Basin::ToP3
        } else {
            panic!("no exclusion limit from ({y0}, {x0}): {end:?}");
        };
        assert_eq!(basin_query(&curve, y0, x0).unwrap(), got, "start ({y0}, {x0})");
    }
}

#[test]
fn degenerate_case_lands_on_line() {
    let p = lv(2.0, 1.0, 2.0, 0.5);
    for (y0, x0) in [(0.3, 0.2), (3.0, 1.5), (0.1, 2.0)] {
        let traj = integrate_lv(&p, y0, x0, 500.0, Tolerances::default()).unwrap();
        let (_, end) = traj.last().unwrap();
        assert!((end[0] + 2.0 * end[1] - 2.0).abs() < 1e-6);
    }
}

#[test]
fn tiny_seed_offsets_still_monotone() {
    let p = lv(3.0, 2.5, 1.5, 1.2);
    for eps in [1e-8, 1e-4] {
        let opts = SeparatrixOptions {
            eps: Some(eps),
            ..SeparatrixOptions::default()
        };
        let curve = global_separatrix(&p, &opts).unwrap();
        assert!(curve.min_increment() > 0.0);
    }
}
