use proptest::prelude::*;
use regmod::catalog::formulas::scalar_inclusion;
use regmod::slopes::{partial_strong_slope, strict_outer_slope, theorem41_certificate, CertificateStatus};
use regmod::{Point64, Settings64, Verdict};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn locally_constant_displacement_has_zero_slope(level in 0.0f64..1.5, p in -1.5f64..-0.6, x in -1.5f64..1.5) {
        // disp(p, x) = level for p < -0.5, so every point there is a local
        // minimizer in p.
        let inc = scalar_inclusion(0.0, move |p: f64, _x: f64| level * (-2.0 * p).clamp(0.0, 1.0)).unwrap();
        let s = Settings64::default();
        let e = partial_strong_slope(&inc, &Point64::scalar(p), &Point64::scalar(x), &s.ladder, &s).unwrap();
        prop_assert!(e.is_local_min);
        prop_assert_eq!(e.value, 0.0);
    }

    #[test]
    fn slope_of_an_affine_displacement(c in 0.2f64..3.0, p in -0.9f64..0.9, x in -0.9f64..0.9) {
        // disp(q, x) = |c q - x|; away from its kink the slope is |c|.
        prop_assume!((c * p - x).abs() > 0.1);
        let inc = scalar_inclusion(0.0, move |p: f64, x: f64| c * p - x).unwrap();
        let s = Settings64::default();
        let e = partial_strong_slope(&inc, &Point64::scalar(p), &Point64::scalar(x), &s.ladder, &s).unwrap();
        prop_assert!(!e.is_local_min);
        prop_assert!((e.value - c).abs() <= 1e-9 * c.max(1.0), "{} vs {}", e.value, c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn outer_slope_of_affine_inclusions(c in 0.3f64..3.0, flip in any::<bool>()) {
        let c = if flip { -c } else { c };
        let inc = scalar_inclusion(0.0, move |p: f64, x: f64| c * p - x).unwrap();
        let s = Settings64::default();
        let o = strict_outer_slope(&inc, &s.ladder, &s.ladder, &s).unwrap();
        prop_assert!((o.value - c.abs()).abs() <= 0.05 * c.abs(), "{} vs {}", o.value, c);
        prop_assert!(o.band_empty_at.is_none());
    }
}

#[test]
fn certificate_for_a_steep_encoding() {
    // 0 ∈ {k(p - x)⁺} has solution set [p, ∞) whatever k is. The section
    // modulus and the outer slope both scale with k, so the bound stays 1.
    let k = 3.0;
    let inc = scalar_inclusion(0.0, move |p: f64, x: f64| k * (p - x).max(0.0)).unwrap();
    let s = Settings64::default();
    let rep = theorem41_certificate(&inc, &s).unwrap();
    assert_eq!(rep.status, CertificateStatus::Issued);
    assert_eq!(rep.direct_usreg_r.verdict, Verdict::Finite);
    let bound = rep.bound.to_float();
    assert!((bound - 1.0).abs() < 0.1, "{bound}");
    assert_eq!(rep.bound_respected, Some(true));
}

#[test]
fn slope_needs_a_finite_displacement() {
    let inc = scalar_inclusion(0.0, |p: f64, x: f64| p - x).unwrap();
    let s = Settings64::default();
    assert!(partial_strong_slope(&inc, &Point64::zeros(2), &Point64::zeros(1), &s.ladder, &s).is_err());
}
