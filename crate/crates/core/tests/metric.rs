use proptest::prelude::*;
use regmod::metric::{distance_to_set, enlargement_contains, nearest_zero, project_onto_set, zero_within};
use regmod::{Ball64, ClosedSetOracle, Ext64, GridSpec, Point64, SearchConfig};

fn pt(v: &[f64]) -> Point64 {
    Point64::new(v.to_vec()).unwrap()
}

fn region() -> Ball64 {
    Ball64::new(Point64::zeros(2), 2.0).unwrap()
}

fn disk(c: (f64, f64), rho: f64) -> ClosedSetOracle<f64> {
    let c = pt(&[c.0, c.1]);
    ClosedSetOracle::sampled(move |q| q.dist(&c) <= rho, region())
}

#[test]
fn empty_set_is_infinitely_far() {
    let grid = GridSpec::lattice(region(), 21).unwrap();
    let empty = ClosedSetOracle::sampled(|_| false, region());
    let q = pt(&[0.3, -0.4]);
    assert_eq!(distance_to_set(&q, &empty, &grid).unwrap(), Ext64::PosInf);
    assert!(!enlargement_contains(&q, &empty, 1e6, &grid).unwrap());
    assert!(project_onto_set(&q, &empty, &grid).is_err());
    let none = nearest_zero(&q, &region(), |_| Ext64::Finite(1.0), &SearchConfig::default(), 1e-9);
    assert!(none.is_none());
}

#[test]
fn analytic_oracle_ignores_the_grid() {
    let c = pt(&[0.5, 0.0]);
    let set = ClosedSetOracle::analytic(move |q| (q.dist(&c) - 0.25).max(0.0), region());
    let coarse = GridSpec::lattice(region(), 3).unwrap();
    let d = distance_to_set(&pt(&[-0.5, 0.0]), &set, &coarse).unwrap();
    assert_eq!(d, Ext64::Finite(0.75));
    assert!(enlargement_contains(&pt(&[1.0, 0.0]), &set, 0.25, &coarse).unwrap());
    assert!(!enlargement_contains(&pt(&[1.0, 0.0]), &set, 0.2, &coarse).unwrap());
}

#[test]
fn negative_enlargement_is_rejected() {
    let grid = GridSpec::lattice(region(), 5).unwrap();
    assert!(enlargement_contains(&pt(&[0.0, 0.0]), &disk((0.0, 0.0), 0.5), -0.1, &grid).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sampled_disk_distance_brackets_the_exact_one(
        cx in -0.8f64..0.8, cy in -0.8f64..0.8, rho in 0.3f64..0.8,
        qx in -1.9f64..1.9, qy in -1.9f64..1.9,
    ) {
        let grid = GridSpec::lattice(region(), 41).unwrap();
        let q = pt(&[qx, qy]);
        let exact = (q.dist(&pt(&[cx, cy])) - rho).max(0.0);
        let got = distance_to_set(&q, &disk((cx, cy), rho), &grid).unwrap().finite().unwrap();
        // Members are points of the set, so the sampled distance never
        // undercuts; every point of the disk has a member within one
        // diagonal step.
        prop_assert!(got >= exact - 1e-12);
        prop_assert!(got <= exact + grid.step() * 2f64.sqrt() + 1e-12);
        let proj = project_onto_set(&q, &disk((cx, cy), rho), &grid).unwrap();
        prop_assert!((q.dist(&proj) - got).abs() < 1e-12);
    }

    #[test]
    fn enlargements_grow_with_the_radius(
        qx in -1.9f64..1.9, qy in -1.9f64..1.9, r1 in 0.0f64..1.0, dr in 0.0f64..1.0,
    ) {
        let grid = GridSpec::lattice(region(), 33).unwrap();
        let set = disk((0.2, -0.1), 0.4);
        let q = pt(&[qx, qy]);
        if enlargement_contains(&q, &set, r1, &grid).unwrap() {
            prop_assert!(enlargement_contains(&q, &set, r1 + dr, &grid).unwrap());
        }
    }

    #[test]
    fn search_never_undercuts_the_circle_distance(
        cx in -0.5f64..0.5, cy in -0.5f64..0.5, rho in 0.2f64..1.0,
        qx in -1.5f64..1.5, qy in -1.5f64..1.5,
    ) {
        let c = pt(&[cx, cy]);
        let q = pt(&[qx, qy]);
        let eta = 1e-9;
        let cfg = SearchConfig::default();
        let exact = (q.dist(&c) - rho).abs();
        let hit = nearest_zero(&q, &region(), |z| Ext64::Finite((z.dist(&c) - rho).abs()), &cfg, eta)
            .expect("the circle lies in the region");
        prop_assert!(hit.distance >= exact - eta, "{} < {}", hit.distance, exact);
        prop_assert!(hit.distance <= exact * (1.0 + 2.0 * cfg.rel_tol) + 1e-7, "{} vs {}", hit.distance, exact);
        prop_assert!(zero_within(&q, &region(), |z| Ext64::Finite((z.dist(&c) - rho).abs()), &cfg, eta, exact * 1.01 + 1e-6));
        if exact > 1e-3 {
            prop_assert!(!zero_within(&q, &region(), |z| Ext64::Finite((z.dist(&c) - rho).abs()), &cfg, eta, exact * 0.9));
        }
    }
}
