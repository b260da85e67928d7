use proptest::prelude::*;
use regmod::moduli::{uniform_hemiregularity_estimate, uniform_lipschitz_lsc_estimate};
use regmod::{
    displacement, fiber_distance, inverse_distance, Ball64, Ext64, FnInclusion, FnMap, InverseView, Point64,
    SetValuedMap, Settings64, SolutionMap, Verdict,
};

fn ball(dim: usize, r: f64) -> Ball64 {
    Ball64::new(Point64::zeros(dim), r).unwrap()
}

/// `Θ(p) = {a · p}` from the plane to the line.
fn row_map(a: (f64, f64)) -> FnMap<f64> {
    FnMap::new(ball(2, 2.0), ball(1, 2.0), (Point64::zeros(2), Point64::zeros(1)), move |p, x| {
        Ext64::Finite((x.get(0) - a.0 * p.get(0) - a.1 * p.get(1)).abs())
    })
    .unwrap()
}

#[test]
fn region_checks_guard_the_public_distances() {
    let m = row_map((1.0, 0.0));
    let s = Settings64::default();
    let far = Point64::scalar(5.0);
    assert!(fiber_distance(&m, &Point64::zeros(2), &far).is_err());
    assert!(inverse_distance(&m, &far, &Point64::zeros(2), &s.search).is_err());
    assert!(fiber_distance(&m, &Point64::zeros(3), &Point64::zeros(1)).is_err());
}

#[test]
fn reference_must_lie_in_the_graph() {
    let r = FnMap::new(ball(1, 1.0), ball(1, 1.0), (Point64::zeros(1), Point64::scalar(0.5)), |p, x| {
        Ext64::Finite((x.get(0) - p.get(0)).abs())
    });
    assert!(r.is_err());
}

#[test]
fn solution_map_distances_come_from_the_displacement() {
    // 0 ∈ {p - x²}: R(p) = {±√p} for p ≥ 0 and empty otherwise.
    let inc = FnInclusion::new(
        ball(1, 2.0),
        ball(1, 2.0),
        ball(1, 4.0),
        (Point64::zeros(1), Point64::zeros(1)),
        Point64::zeros(1),
        |p, x, y| Ext64::Finite((y.get(0) - (p.get(0) - x.get(0) * x.get(0))).abs()),
    )
    .unwrap();
    let s = Settings64::default();
    let sol = SolutionMap::new(&inc, &s.search);
    let d = sol.fiber_dist(&Point64::scalar(0.25), &Point64::scalar(1.0)).finite().unwrap();
    assert!((d - 0.5).abs() < 1e-3, "{d}");
    assert_eq!(sol.fiber_dist(&Point64::scalar(-0.5), &Point64::scalar(0.0)), Ext64::PosInf);
    let disp = displacement(&inc, &Point64::scalar(0.5), &Point64::scalar(1.0)).unwrap();
    assert_eq!(disp, Ext64::Finite(0.5));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn duality_on_linear_maps(a0 in 0.4f64..2.0, a1 in -2.0f64..2.0, flip in any::<bool>()) {
        let a = (if flip { -a0 } else { a0 }, a1);
        let m = row_map(a);
        let s = Settings64::default();
        let usreg = uniform_hemiregularity_estimate(&m, &s).unwrap();
        let ulsc = uniform_lipschitz_lsc_estimate(&InverseView::new(&m, &s.search), &s).unwrap();
        prop_assert_eq!(usreg.verdict, Verdict::Finite);
        prop_assert_eq!(ulsc.verdict, Verdict::Finite);
        let exact = 1.0 / (a.0 * a.0 + a.1 * a.1).sqrt();
        let (u, l) = (usreg.limiting_value.to_float(), ulsc.limiting_value.to_float());
        let tol = 2.0 * (usreg.grid_tolerance.to_float() + ulsc.grid_tolerance.to_float());
        prop_assert!((u - l).abs() <= tol, "{} vs {} (tol {})", u, l, tol);
        prop_assert!((u - exact).abs() <= 0.02 * exact, "{} vs {}", u, exact);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn inverting_twice_restores_the_fiber(a in 0.3f64..2.0, p in -0.9f64..0.9, x in -1.5f64..1.5) {
        let m = row_map((a, 0.0));
        let s = Settings64::default();
        let inv = InverseView::new(&m, &s.search);
        let back = InverseView::new(&inv, &s.search);
        let (pp, xx) = (Point64::new(vec![p, 0.0]).unwrap(), Point64::scalar(x));
        let direct = m.fiber_dist(&pp, &xx).finite().unwrap();
        let twice = back.fiber_dist(&pp, &xx).finite().unwrap();
        prop_assert!((direct - twice).abs() <= 1e-12, "{} vs {}", direct, twice);
        // dist(p, Θ⁻¹(x)) for a row a = (a, 0) is |x/a - p₁|.
        if (x / a).abs() <= 2.0 {
            let d = inv.fiber_dist(&xx, &pp).finite().unwrap();
            let exact = (x / a - p).abs();
            prop_assert!(d >= exact - 1e-9 && d <= exact * 1.002 + 1e-7, "{} vs {}", d, exact);
        }
    }
}
