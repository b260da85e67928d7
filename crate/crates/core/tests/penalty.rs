use proptest::prelude::*;
use regmod::catalog::formulas::{empty_param, scalar_inclusion, shift_halfline, sqrt_objective, sqrt_problem};
use regmod::penalty::{
    exact_threshold, exactness_verify, minimal_exact_level, parameterization_validity, penalty_value,
    problem_calmness_estimate, ParamProblem, PenaltyForm,
};
use regmod::{Error, Ext64, Point64, Settings64, Verdict};

/// `min c x` over `[p, ∞)`, encoded as `0 ∈ {k (p - x)⁺}`.
fn scaled_halfline(c: f64, k: f64) -> ParamProblem<f64> {
    let constraint = scalar_inclusion(0.0, move |p: f64, x: f64| k * (p - x).max(0.0)).unwrap();
    ParamProblem::new(move |x: &Point64| Ext64::Finite(c * x.get(0)), constraint, 0.5).unwrap()
}

#[test]
fn construction_rejects_bad_problems() {
    let constraint = scalar_inclusion(0.0, |p: f64, x: f64| p - x).unwrap();
    assert!(ParamProblem::new(|x: &Point64| Ext64::Finite(x.get(0)), constraint.clone(), 0.0).is_err());
    assert!(matches!(
        ParamProblem::new(|_: &Point64| Ext64::NegInf, constraint, 0.5),
        Err(Error::DegenerateObjective)
    ));
}

#[test]
fn minimal_levels_follow_the_encoding() {
    // At p = 0 the data penalty is c x + l k (-x)⁺, which stays above 0 for
    // x < 0 iff l ≥ c / k; the geometric one needs l ≥ c.
    let s = Settings64::default();
    for (c, k) in [(1.0, 1.0), (2.0, 1.0), (1.0, 4.0), (3.0, 0.5)] {
        let prob = scaled_halfline(c, k);
        let geo = minimal_exact_level(&prob, PenaltyForm::Geometric, 0.5, 100.0, &s).unwrap().unwrap();
        let data = minimal_exact_level(&prob, PenaltyForm::Data, 0.5, 100.0, &s).unwrap().unwrap();
        assert!((geo - c).abs() <= 1e-3 * c, "c = {c}, k = {k}: {geo}");
        assert!((data - c / k).abs() <= 1e-3 * c / k, "c = {c}, k = {k}: {data}");
    }
    let never = minimal_exact_level(&scaled_halfline(5.0, 1.0), PenaltyForm::Geometric, 0.5, 2.0, &s).unwrap();
    assert_eq!(never, None);
}

#[test]
fn thresholds_of_scaled_problems() {
    let s = Settings64::default();
    let prob = scaled_halfline(2.0, 1.0);
    let pcalm = problem_calmness_estimate(&prob, &s).unwrap();
    assert_eq!(pcalm.verdict, Verdict::Finite);
    assert!((pcalm.limiting_value.to_float() - 2.0).abs() < 0.02);
    let t = exact_threshold(&prob, &s).unwrap();
    let t31 = t.threshold_t31.to_float();
    assert!((t31 - 2.0).abs() < 0.2, "{t31}");
    assert!(t.verified_t31[0].verdict.exact);
    let below = &t.verified_t31[1].verdict;
    assert!(!below.exact);
    assert!(below.witness_value.unwrap() < below.reference_value);
}

#[test]
fn empty_perturbations_are_reported() {
    let s = Settings64::default();
    let prob = empty_param::<f64>().unwrap();
    assert!(matches!(problem_calmness_estimate(&prob, &s), Err(Error::NoPerturbedFeasiblePoints)));
    let rep = parameterization_validity(&prob, &s.ladder, &s).unwrap();
    assert!(rep.condition_i && !rep.condition_ii);
    let ok = parameterization_validity(&shift_halfline::<f64>().unwrap(), &s.ladder, &s).unwrap();
    assert!(ok.condition_ii);
}

#[test]
fn penalty_level_must_be_positive() {
    let s = Settings64::default();
    let prob = shift_halfline::<f64>().unwrap();
    let o = Point64::zeros(1);
    assert!(penalty_value(&prob, 0.0, PenaltyForm::Data, &o, &o, &s).is_err());
    assert!(exactness_verify(&prob, -1.0, PenaltyForm::Data, 0.5, &s).is_err());
    assert!(exactness_verify(&prob, 1.0, PenaltyForm::Data, 0.0, &s).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn penalty_term_vanishes_on_feasible_points(
        beta in 0.5f64..3.0, p in -1.5f64..1.5, t in 0.0f64..1.0, l in 0.1f64..1000.0, data in any::<bool>(),
    ) {
        // x ≤ |p|^β is feasible for the square-root problem.
        let prob = sqrt_problem::<f64>(beta).unwrap();
        let s = Settings64::default();
        let bound = p.abs().powf(beta);
        let x = (bound - t * 2.0).max(-2.0).min(bound);
        let form = if data { PenaltyForm::Data } else { PenaltyForm::Geometric };
        let v = penalty_value(&prob, l, form, &Point64::scalar(p), &Point64::scalar(x), &s).unwrap();
        let term = v.to_float() - sqrt_objective(x);
        prop_assert!(term >= -1e-12);
        prop_assert!(term <= l * s.tol.eta, "term {} at l = {}", term, l);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn exactness_persists_at_larger_levels(l in 0.1f64..3.0, dl in 0.0f64..3.0, data in any::<bool>()) {
        let prob = shift_halfline::<f64>().unwrap();
        let s = Settings64::default();
        let form = if data { PenaltyForm::Data } else { PenaltyForm::Geometric };
        let lo = exactness_verify(&prob, l, form, 0.5, &s).unwrap();
        let hi = exactness_verify(&prob, l + dl, form, 0.5, &s).unwrap();
        prop_assert!(!lo.exact || hi.exact);
        // The exact threshold of min x over [0, ∞) is 1.
        prop_assert_eq!(lo.exact, l >= 1.0);
    }
}

