use std::collections::BTreeMap;

use regmod::catalog::{
    bind, catalog_list, find_entry, run_entry, verification_plan, Bound, CatalogEntry, EntryKind, Expectation,
    Provenance, RunReport, SCHEMA_VERSION,
};
use regmod::{Error, Settings64};
use serde_json::json;

#[test]
fn every_entry_binds_with_its_reference_inside_its_regions() {
    for e in catalog_list() {
        let bound = bind(&e.formula_id, &e.parameters).unwrap();
        assert_eq!(bound.kind(), e.kind, "{}", e.name);
        let (p, x) = &e.reference;
        let fits = |name: &str, v: &[f64]| {
            let r = e.regions.iter().find(|r| r.name == name).unwrap();
            let d2: f64 = v.iter().zip(&r.center).map(|(a, b)| (a - b).powi(2)).sum();
            d2.sqrt() <= r.radius
        };
        let (pn, xn) = match e.kind {
            EntryKind::Mapping => ("domain", "range"),
            _ => ("parameters", "states"),
        };
        assert!(fits(pn, p) && fits(xn, x), "{}", e.name);
    }
    assert!(matches!(bind("nope", &BTreeMap::new()), Err(Error::UnknownFormula(_))));
}

#[test]
fn entries_round_trip_through_json() {
    let list = catalog_list();
    let text = serde_json::to_string(&list).unwrap();
    let back: Vec<CatalogEntry> = serde_json::from_str(&text).unwrap();
    assert_eq!(back, list);
}

#[test]
fn every_expectation_is_in_the_plan() {
    let plan = verification_plan();
    for e in catalog_list() {
        for x in &e.expected {
            assert!(
                plan.iter().any(|(n, op, p)| *n == e.name && *op == x.operation && *p == x.parameters),
                "{} {}",
                e.name,
                x.operation
            );
        }
    }
    let mut sorted = plan.clone();
    sorted.dedup();
    assert_eq!(sorted.len(), plan.len());
}

#[test]
fn paper_values_carry_citations() {
    let cited: Vec<_> = catalog_list()
        .into_iter()
        .flat_map(|e| e.expected)
        .filter(|x| x.provenance == Provenance::Paper)
        .collect();
    assert!(!cited.is_empty());
    assert!(cited.iter().all(|x| x.citation.as_deref().is_some_and(|c| !c.is_empty())));
}

#[test]
fn expectation_grading() {
    let near = Expectation::Near { value: 1.0, tol: 0.05 };
    assert!(near.check(Some(&json!(1.04))));
    assert!(!near.check(Some(&json!(1.06))));
    assert!(!near.check(Some(&json!("inf"))));
    assert!(!near.check(None));
    assert!(Expectation::AtLeast { value: 3.0 }.check(Some(&json!("inf"))));
    assert!(!Expectation::AtMost { value: 3.0 }.check(Some(&json!("inf"))));
    assert!(Expectation::Equals { value: json!("divergent") }.check(Some(&json!("divergent"))));
}

#[test]
fn reports_replay_and_round_trip() {
    let s = Settings64::default();
    let none = BTreeMap::new();
    let a = run_entry("shift_halfline", "minimal_exact_level", &none, &s).unwrap();
    let b = run_entry("shift_halfline", "minimal_exact_level", &none, &s).unwrap();
    assert!(a.passed, "{}", a.summary());
    assert_eq!(a.schema_version, SCHEMA_VERSION);
    let ja = serde_json::to_string(&a).unwrap();
    assert_eq!(ja, serde_json::to_string(&b).unwrap());
    assert!(!ja.contains("wall_time"));
    let back: RunReport = serde_json::from_str(&ja).unwrap();
    assert_eq!(back.result, a.result);
    assert_eq!(back.config, a.config);
    assert!(a.summary().starts_with("PASS shift_halfline minimal_exact_level"));
}

#[test]
fn overrides_reach_the_formula_and_the_operation() {
    let s = Settings64::default();
    let one = BTreeMap::from([("beta".to_string(), 1.0)]);
    let r = run_entry("ex31_sqrt_problem", "problem_calmness", &one, &s).unwrap();
    assert_eq!(r.parameters["beta"], 1.0);
    assert_eq!(r.result["verdict"], json!("divergent"));
    assert!(r.passed);
    let at = BTreeMap::from([("x0".to_string(), -1.0), ("x1".to_string(), 0.5)]);
    let r = run_entry("ex22_hyperbola", "inverse_distance", &at, &s).unwrap();
    let v = r.result["value"].as_f64().unwrap();
    assert!((v - 0.5).abs() < 1e-3, "{v}");
    // No expectation applies at this point, so nothing is graded.
    assert!(r.checks.is_empty() && r.passed);
}

#[test]
fn failures_are_reported_not_raised() {
    let s = Settings64::default();
    let bad = BTreeMap::from([("beta".to_string(), -1.0)]);
    let r = run_entry("ex31_sqrt_problem", "problem_calmness", &bad, &s).unwrap();
    assert!(!r.passed);
    assert!(r.error.as_deref().unwrap().contains("beta"));
    assert!(matches!(find_entry("missing"), Err(Error::UnknownEntry(_))));
    assert!(matches!(
        run_entry("identity", "exactness", &BTreeMap::new(), &s),
        Err(Error::UnknownOperation { .. })
    ));
}

#[test]
fn bound_objects_match_their_kind() {
    let b = bind("hyperbola", &BTreeMap::from([("range_radius".to_string(), 3.0)])).unwrap();
    assert!(matches!(b, Bound::Mapping(_)));
    assert!(matches!(bind("affine_inclusion", &BTreeMap::new()).unwrap(), Bound::Inclusion(_)));
    assert!(matches!(bind("sqrt_problem", &BTreeMap::new()).unwrap(), Bound::Problem(_)));
}
