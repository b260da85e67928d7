//! Built-in fixtures with their expected results, and a runner that applies
//! any estimator to them and grades the outcome.

pub mod formulas;
mod poly;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::Settings;
use crate::error::{Error, Result};
use crate::metric::{Ball, Point};
use crate::moduli::{
    convex_process_norm, hemiregularity_estimate, mapping_calmness_estimate,
    metric_regularity_witness_search, openness_check, uniform_hemiregularity_estimate,
    uniform_lipschitz_lsc_estimate, ModulusEstimate, RegularityMode, Verdict,
};
use crate::penalty::{
    calmness_inference_check, exact_threshold, exactness_verify, minimal_exact_level,
    parameterization_validity, problem_calmness_estimate, ParamProblem, PenaltyForm,
};
use crate::setvalued::{
    inverse_distance, lsc_probe, FnInclusion, FnMap, Inclusion, InverseView, SectionMap,
    SetValuedMap, SolutionMap,
};
use crate::slopes::{partial_strong_slope, strict_outer_slope, theorem41_certificate};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Mapping,
    Inclusion,
    Problem,
}

impl EntryKind {
    pub fn operations(self) -> &'static [&'static str] {
        match self {
            EntryKind::Mapping => &[
                "hemiregularity",
                "uniform_hemiregularity",
                "inverse_ulsc",
                "duality",
                "inverse_distance",
                "metric_regularity_witness",
                "uniform_metric_regularity_witness",
                "openness",
                "mapping_calmness",
                "convex_process_norm",
            ],
            EntryKind::Inclusion => &[
                "theorem41_certificate",
                "strict_outer_slope",
                "partial_strong_slope",
                "lsc_probe",
                "section_ulsc",
                "solution_uniform_hemiregularity",
                "solution_openness",
            ],
            EntryKind::Problem => &[
                "problem_calmness",
                "exact_threshold",
                "exactness",
                "minimal_exact_level",
                "parameterization_validity",
                "calmness_inference",
                "local_optimality",
            ],
        }
    }
}

/// Where an expected value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Provenance {
    /// Stated in the literature; carries a citation.
    Paper,
    /// Holds by construction.
    Trivial,
    /// Worked out in closed form for the fixture.
    Derived,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Expectation {
    Near { value: f64, tol: f64 },
    AtMost { value: f64 },
    AtLeast { value: f64 },
    Equals { value: Value },
}

impl Expectation {
    pub fn check(&self, observed: Option<&Value>) -> bool {
        let num = observed.and_then(Value::as_f64);
        match self {
            Expectation::Near { value, tol } => num.is_some_and(|v| (v - value).abs() <= *tol),
            Expectation::AtMost { value } => num.is_some_and(|v| v <= *value),
            Expectation::AtLeast { value } => match observed {
                Some(Value::String(s)) if s == "inf" => true,
                _ => num.is_some_and(|v| v >= *value),
            },
            Expectation::Equals { value } => observed == Some(value),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedResult {
    pub operation: String,
    /// Parameter values under which the expectation applies.
    pub parameters: BTreeMap<String, f64>,
    /// JSON pointer into the operation result, or `error` for the error text.
    pub quantity: String,
    pub expect: Expectation,
    pub provenance: Provenance,
    pub citation: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub name: String,
    pub center: Vec<f64>,
    pub radius: f64,
}

impl RegionSpec {
    fn of(name: &str, b: &Ball<f64>) -> Self {
        Self {
            name: name.into(),
            center: b.center.to_f64_vec(),
            radius: b.radius,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub kind: EntryKind,
    pub formula_id: String,
    pub description: String,
    /// Default formula parameters.
    pub parameters: BTreeMap<String, f64>,
    pub regions: Vec<RegionSpec>,
    pub reference: (Vec<f64>, Vec<f64>),
    pub expected: Vec<ExpectedResult>,
}

/// A catalog object bound to its formula.
pub enum Bound {
    Mapping(FnMap<f64>),
    Inclusion(FnInclusion<f64>),
    Problem(ParamProblem<f64>),
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

/// Builds the object named by `formula_id` with the given parameters.
pub fn bind(formula_id: &str, params: &BTreeMap<String, f64>) -> Result<Bound> {
    use formulas::*;
    Ok(match formula_id {
        "branch_parabola" => Bound::Mapping(branch_parabola()?),
        "hyperbola" => Bound::Mapping(hyperbola(param(params, "range_radius", 2.0))?),
        "linear_onto" => Bound::Mapping(linear_onto()?),
        "identity" => Bound::Mapping(identity()?),
        "cone" => Bound::Mapping(cone()?),
        "cubic_map" => Bound::Mapping(cubic_map()?),
        "affine_inclusion" => Bound::Inclusion(affine_inclusion(param(params, "c", 1.0))?),
        "cubic_inclusion" => Bound::Inclusion(cubic_inclusion()?),
        "step_lsc_ok" => Bound::Inclusion(step_lsc_ok()?),
        "step_lsc_bad" => Bound::Inclusion(step_lsc_bad()?),
        "shift_halfline" => Bound::Problem(shift_halfline()?),
        "sqrt_problem" => Bound::Problem(sqrt_problem(param(params, "beta", 2.0))?),
        "empty_param" => Bound::Problem(empty_param()?),
        other => return Err(Error::UnknownFormula(other.into())),
    })
}

impl Bound {
    pub fn kind(&self) -> EntryKind {
        match self {
            Bound::Mapping(_) => EntryKind::Mapping,
            Bound::Inclusion(_) => EntryKind::Inclusion,
            Bound::Problem(_) => EntryKind::Problem,
        }
    }

    fn regions(&self) -> Vec<RegionSpec> {
        match self {
            Bound::Mapping(m) => vec![
                RegionSpec::of("domain", m.domain_region()),
                RegionSpec::of("range", m.range_region()),
            ],
            Bound::Inclusion(i) => inclusion_regions(i),
            Bound::Problem(p) => inclusion_regions(p.constraint()),
        }
    }

    fn reference(&self) -> (Vec<f64>, Vec<f64>) {
        let (p, x) = match self {
            Bound::Mapping(m) => m.reference(),
            Bound::Inclusion(i) => i.reference(),
            Bound::Problem(p) => p.reference(),
        };
        (p.to_f64_vec(), x.to_f64_vec())
    }
}

fn inclusion_regions(i: &FnInclusion<f64>) -> Vec<RegionSpec> {
    vec![
        RegionSpec::of("parameters", i.parameter_region()),
        RegionSpec::of("states", i.state_region()),
        RegionSpec::of("values", i.value_region()),
    ]
}

struct Spec {
    name: &'static str,
    formula_id: &'static str,
    description: &'static str,
    parameters: &'static [(&'static str, f64)],
    expected: Vec<ExpectedResult>,
}

fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn exp(
    operation: &str,
    parameters: &[(&str, f64)],
    quantity: &str,
    expect: Expectation,
    provenance: Provenance,
    citation: Option<&str>,
) -> ExpectedResult {
    ExpectedResult {
        operation: operation.into(),
        parameters: params(parameters),
        quantity: quantity.into(),
        expect,
        provenance,
        citation: citation.map(String::from),
    }
}

fn near(value: f64, tol: f64) -> Expectation {
    Expectation::Near { value, tol }
}

fn equals(value: impl Into<Value>) -> Expectation {
    Expectation::Equals { value: value.into() }
}

use Provenance::{Derived, Paper, Trivial};

fn duality_expectation() -> ExpectedResult {
    exp("duality", &[], "/within", equals(true), Derived, None)
}

fn specs() -> Vec<Spec> {
    let inv_sqrt5 = 1.0 / 5f64.sqrt();
    let mut v = vec![
        Spec {
            name: "ex21_branch_parabola",
            formula_id: "branch_parabola",
            description: "p1 + p2^2 for p1 >= 0 and p1 - p2^2 otherwise: hemiregular, not metrically regular",
            parameters: &[],
            expected: {
                let mut e = vec![
                    exp(
                        "hemiregularity",
                        &[],
                        "/limiting_value",
                        Expectation::AtMost { value: 1.05 },
                        Paper,
                        Some("Example 2.1: hemiregular at ((0,0),0) with modulus at most 1"),
                    ),
                    exp("hemiregularity", &[], "/limiting_value", near(1.0, 0.05), Derived, None),
                    duality_expectation(),
                ];
                for kappa in [1.0, 10.0, 100.0] {
                    e.push(exp(
                        "metric_regularity_witness",
                        &[("kappa", kappa)],
                        "/found",
                        equals(true),
                        Paper,
                        Some("Example 2.1: not metrically regular at ((0,0),0)"),
                    ));
                    e.push(exp(
                        "metric_regularity_witness",
                        &[("kappa", kappa)],
                        "/witness/radius",
                        Expectation::AtMost { value: 0.1 },
                        Derived,
                        None,
                    ));
                }
                e
            },
        },
        Spec {
            name: "ex22_hyperbola",
            formula_id: "hyperbola",
            description: "{x : x1 x2 = p} on the range ball of radius 2",
            parameters: &[("range_radius", 2.0)],
            expected: vec![
                exp(
                    "uniform_hemiregularity",
                    &[],
                    "/limiting_value",
                    Expectation::AtMost { value: 0.05 },
                    Derived,
                    None,
                ),
                exp(
                    "uniform_hemiregularity",
                    &[],
                    "/limiting_value",
                    Expectation::AtMost { value: 1.0 },
                    Paper,
                    Some("Example 2.2: uniformly hemiregular at (0,0) with modulus at most 1"),
                ),
                exp(
                    "inverse_distance",
                    &[("x0", 0.5), ("x1", 0.2)],
                    "/value",
                    near(0.1, 1e-3),
                    Paper,
                    Some("Example 2.2: dist(0, inverse image of x) = |x1 x2|"),
                ),
                exp("openness", &[("a", 0.5), ("delta", 0.5)], "/holds", equals(true), Derived, None),
                exp(
                    "openness",
                    &[("a", 0.5), ("delta", 0.5)],
                    "/back_bound_respected",
                    equals(true),
                    Derived,
                    None,
                ),
                duality_expectation(),
            ],
        },
        Spec {
            name: "ex22_hyperbola_wide",
            formula_id: "hyperbola",
            description: "the same hyperbola family on the range ball of radius 40",
            parameters: &[("range_radius", 40.0)],
            expected: [1.0, 10.0]
                .iter()
                .map(|&kappa| {
                    exp(
                        "uniform_metric_regularity_witness",
                        &[("kappa", kappa)],
                        "/found",
                        equals(true),
                        Paper,
                        Some("Example 2.2: the uniform metric regularity inequality fails"),
                    )
                })
                .collect(),
        },
        Spec {
            name: "ex31_sqrt_problem",
            formula_id: "sqrt_problem",
            description: "minimize sqrt(-x) / -sqrt(x) over (-inf, |p|^beta]",
            parameters: &[("beta", 2.0)],
            expected: vec![
                exp(
                    "problem_calmness",
                    &[("beta", 2.0)],
                    "/limiting_value",
                    near(1.0, 0.05),
                    Paper,
                    Some("Example 3.1: decrease quotient |p|^(beta/2 - 1), calm iff beta >= 2"),
                ),
                exp(
                    "problem_calmness",
                    &[("beta", 2.0)],
                    "/verdict",
                    equals("finite"),
                    Paper,
                    Some("Example 3.1: calm iff beta >= 2"),
                ),
                exp(
                    "problem_calmness",
                    &[("beta", 1.0)],
                    "/verdict",
                    equals("divergent"),
                    Paper,
                    Some("Example 3.1: calm iff beta >= 2"),
                ),
                exp(
                    "problem_calmness",
                    &[("beta", 1.5)],
                    "/verdict",
                    equals("divergent"),
                    Paper,
                    Some("Example 3.1: calm iff beta >= 2"),
                ),
                exp(
                    "parameterization_validity",
                    &[("beta", 2.0)],
                    "/condition_ii",
                    equals(true),
                    Trivial,
                    None,
                ),
                exp(
                    "exactness",
                    &[("beta", 2.0), ("l", 100.0)],
                    "/exact",
                    equals(false),
                    Derived,
                    None,
                ),
                exp("local_optimality", &[("beta", 2.0)], "/ok", equals(true), Trivial, None),
            ],
        },
        Spec {
            name: "linear_onto",
            formula_id: "linear_onto",
            description: "the surjective operator p1 + 2 p2 from the plane onto the line",
            parameters: &[],
            expected: vec![
                exp("uniform_hemiregularity", &[], "/limiting_value", near(inv_sqrt5, 0.02), Derived, None),
                exp("convex_process_norm", &[], "/value", near(inv_sqrt5, 0.02), Derived, None),
                exp("openness", &[("a", 2.0), ("delta", 0.5)], "/holds", equals(true), Derived, None),
                exp("openness", &[("a", 2.5), ("delta", 0.5)], "/holds", equals(false), Derived, None),
                exp(
                    "metric_regularity_witness",
                    &[("kappa", 1.0)],
                    "/found",
                    equals(false),
                    Derived,
                    None,
                ),
                duality_expectation(),
            ],
        },
        Spec {
            name: "identity",
            formula_id: "identity",
            description: "the identity of the line",
            parameters: &[],
            expected: vec![
                exp("uniform_hemiregularity", &[], "/limiting_value", near(1.0, 0.02), Trivial, None),
                exp("mapping_calmness", &[], "/limiting_value", near(1.0, 0.02), Trivial, None),
                duality_expectation(),
            ],
        },
        Spec {
            name: "cone",
            formula_id: "cone",
            description: "{p, -p}",
            parameters: &[],
            expected: vec![
                exp("hemiregularity", &[], "/limiting_value", near(1.0, 0.02), Derived, None),
                exp("convex_process_norm", &[], "/value", near(1.0, 0.02), Derived, None),
                duality_expectation(),
            ],
        },
        Spec {
            name: "cubic_map",
            formula_id: "cubic_map",
            description: "{p^3}",
            parameters: &[],
            expected: vec![
                exp("uniform_hemiregularity", &[], "/verdict", equals("divergent"), Derived, None),
                exp("mapping_calmness", &[], "/limiting_value", Expectation::AtMost { value: 1e-3 }, Derived, None),
                duality_expectation(),
            ],
        },
        Spec {
            name: "shift_halfline",
            formula_id: "shift_halfline",
            description: "minimize x over [p, inf)",
            parameters: &[],
            expected: vec![
                exp("exact_threshold", &[], "/threshold_t31", near(1.0, 0.1), Derived, None),
                exp("exact_threshold", &[], "/verified_t31/0/verdict/exact", equals(true), Derived, None),
                exp("exact_threshold", &[], "/verified_t31/1/verdict/exact", equals(false), Derived, None),
                exp("exact_threshold", &[], "/threshold_c41", near(1.0, 0.1), Derived, None),
                exp("problem_calmness", &[], "/limiting_value", near(1.0, 0.05), Derived, None),
                exp("exactness", &[("l", 1.2)], "/exact", equals(true), Derived, None),
                exp("exactness", &[("l", 0.5)], "/exact", equals(false), Derived, None),
                exp("minimal_exact_level", &[], "/value", near(1.0, 0.05), Derived, None),
                exp("minimal_exact_level", &[("data", 1.0)], "/value", near(1.0, 0.05), Derived, None),
                exp("calmness_inference", &[("l", 1.2)], "/consistent", equals(true), Trivial, None),
                exp("parameterization_validity", &[], "/condition_ii", equals(true), Trivial, None),
            ],
        },
        Spec {
            name: "empty_param",
            formula_id: "empty_param",
            description: "a parameterization whose perturbed feasible sets are empty",
            parameters: &[],
            expected: vec![
                exp("parameterization_validity", &[], "/condition_ii", equals(false), Trivial, None),
                exp(
                    "problem_calmness",
                    &[],
                    "error",
                    equals(Error::NoPerturbedFeasiblePoints.to_string()),
                    Trivial,
                    None,
                ),
            ],
        },
        Spec {
            name: "cubic_inclusion",
            formula_id: "cubic_inclusion",
            description: "0 in {p^3 - x}",
            parameters: &[],
            expected: vec![
                exp("theorem41_certificate", &[], "/status", equals("hypothesis_iv_fails"), Derived, None),
                exp("theorem41_certificate", &[], "/direct_usreg_r/verdict", equals("divergent"), Derived, None),
                exp("solution_openness", &[("a", 1.0), ("delta", 0.5)], "/holds", equals(false), Derived, None),
            ],
        },
        Spec {
            name: "step_lsc_ok",
            formula_id: "step_lsc_ok",
            description: "0 in {0} for p <= 0 and {1} otherwise",
            parameters: &[],
            expected: vec![exp("lsc_probe", &[("p0", 0.0)], "/violated", equals(false), Derived, None)],
        },
        Spec {
            name: "step_lsc_bad",
            formula_id: "step_lsc_bad",
            description: "0 in {1} for p <= 0 and {0} otherwise",
            parameters: &[],
            expected: vec![
                exp("lsc_probe", &[("p0", 0.0)], "/violated", equals(true), Derived, None),
                exp("theorem41_certificate", &[], "/status", equals("hypothesis_ii_fails"), Derived, None),
            ],
        },
    ];
    let mut affine = Vec::new();
    for c in [0.5, 1.0, 2.0] {
        let cp = [("c", c)];
        affine.push(exp("theorem41_certificate", &cp, "/status", equals("issued"), Derived, None));
        affine.push(exp("theorem41_certificate", &cp, "/bound", near(1.0 / c, 0.1 / c), Derived, None));
        affine.push(exp(
            "theorem41_certificate",
            &cp,
            "/direct_usreg_r/limiting_value",
            near(1.0 / c, 0.1 / c),
            Derived,
            None,
        ));
        affine.push(exp("strict_outer_slope", &cp, "/value", near(c, 0.05 * c), Derived, None));
    }
    v.push(Spec {
            name: "affine_inclusion",
            formula_id: "affine_inclusion",
            description: "0 in {c p - x}",
            parameters: &[("c", 1.0)],
            expected: affine,
        });
    v
}

/// Every built-in entry.
pub fn catalog_list() -> Vec<CatalogEntry> {
    specs()
        .into_iter()
        .map(|s| {
            let parameters = params(s.parameters);
            let bound = bind(s.formula_id, &parameters).expect("built-in fixtures bind");
            CatalogEntry {
                name: s.name.into(),
                kind: bound.kind(),
                formula_id: s.formula_id.into(),
                description: s.description.into(),
                regions: bound.regions(),
                reference: bound.reference(),
                parameters,
                expected: s.expected,
            }
        })
        .collect()
}

pub fn find_entry(name: &str) -> Result<CatalogEntry> {
    catalog_list()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownEntry(name.into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub quantity: String,
    pub expect: Expectation,
    pub provenance: Provenance,
    pub citation: Option<String>,
    pub observed: Option<Value>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub entry: String,
    pub operation: String,
    pub parameters: BTreeMap<String, f64>,
    pub config: Settings<f64>,
    pub result: Value,
    pub error: Option<String>,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
    /// Excluded from JSON so that reports replay byte for byte.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl RunReport {
    /// One line per check after a header line.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "{} {} {}{}\n",
            if self.passed { "PASS" } else { "FAIL" },
            self.entry,
            self.operation,
            fmt_params(&self.parameters),
        );
        if let Some(e) = &self.error {
            out.push_str(&format!("  error: {e}\n"));
        }
        for c in &self.checks {
            let observed = c.observed.as_ref().map_or("missing".into(), Value::to_string);
            out.push_str(&format!(
                "  [{}] {} {} observed {} ({:?})\n",
                if c.passed { "ok" } else { "FAIL" },
                c.quantity,
                describe(&c.expect),
                observed,
                c.provenance,
            ));
        }
        out
    }
}

fn fmt_params(p: &BTreeMap<String, f64>) -> String {
    if p.is_empty() {
        return String::new();
    }
    let kv: Vec<String> = p.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!(" [{}]", kv.join(", "))
}

fn describe(e: &Expectation) -> String {
    match e {
        Expectation::Near { value, tol } => format!("= {value} ± {tol}"),
        Expectation::AtMost { value } => format!("<= {value}"),
        Expectation::AtLeast { value } => format!(">= {value}"),
        Expectation::Equals { value } => format!("== {value}"),
    }
}

fn to_value<S: Serialize>(v: &S) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn point_param(params: &BTreeMap<String, f64>, prefix: &str, default: &Point<f64>) -> Result<Point<f64>> {
    let coords: Vec<f64> = (0..default.dim())
        .map(|i| param(params, &format!("{prefix}{i}"), default.get(i)))
        .collect();
    Point::new(coords)
}

fn estimate_agreement(a: &ModulusEstimate<f64>, b: &ModulusEstimate<f64>) -> (bool, Option<f64>, Option<f64>) {
    match (a.verdict, b.verdict) {
        (Verdict::Finite, Verdict::Finite) => {
            let diff = (a.limiting_value.to_float() - b.limiting_value.to_float()).abs();
            let tol = 2.0 * (a.grid_tolerance.to_float() + b.grid_tolerance.to_float());
            (diff <= tol, Some(diff), Some(tol))
        }
        (x, y) => (x == y && x == Verdict::Divergent, None, None),
    }
}

fn run_mapping(m: &FnMap<f64>, op: &str, params: &BTreeMap<String, f64>, s: &Settings<f64>) -> Result<Value> {
    let (p_ref, x_ref) = m.reference();
    Ok(match op {
        "hemiregularity" => to_value(&hemiregularity_estimate(m, s)?),
        "uniform_hemiregularity" => to_value(&uniform_hemiregularity_estimate(m, s)?),
        "inverse_ulsc" => to_value(&uniform_lipschitz_lsc_estimate(&InverseView::new(m, &s.search), s)?),
        "duality" => {
            let usreg = uniform_hemiregularity_estimate(m, s)?;
            let ulsc = uniform_lipschitz_lsc_estimate(&InverseView::new(m, &s.search), s)?;
            let (within, difference, tolerance) = estimate_agreement(&usreg, &ulsc);
            json!({
                "usreg": usreg.limiting_value,
                "usreg_verdict": usreg.verdict,
                "ulsc_inverse": ulsc.limiting_value,
                "ulsc_inverse_verdict": ulsc.verdict,
                "difference": difference,
                "tolerance": tolerance,
                "within": within,
            })
        }
        "inverse_distance" => {
            let x = point_param(params, "x", x_ref)?;
            let p = point_param(params, "p", p_ref)?;
            json!({ "p": p, "x": x, "value": inverse_distance(m, &x, &p, &s.search)? })
        }
        "metric_regularity_witness" | "uniform_metric_regularity_witness" => {
            let mode = if op.starts_with("uniform") {
                RegularityMode::Uniform
            } else {
                RegularityMode::Local
            };
            let kappa = param(params, "kappa", 10.0);
            let w = metric_regularity_witness_search(m, kappa, mode, s)?;
            json!({ "kappa": kappa, "mode": mode, "found": w.is_some(), "witness": w })
        }
        "openness" => openness_value(m, params, s)?,
        "mapping_calmness" => to_value(&mapping_calmness_estimate(m, s)?),
        "convex_process_norm" => to_value(&convex_process_norm(m, s)?),
        _ => return Err(unknown_op(op, EntryKind::Mapping)),
    })
}

/// Openness at rate `a` together with the converse bound `usreg ≤ 1/a`.
fn openness_value<M: SetValuedMap<f64>>(m: &M, params: &BTreeMap<String, f64>, s: &Settings<f64>) -> Result<Value> {
    let a = param(params, "a", 1.0);
    let delta = param(params, "delta", 0.5);
    let rep = openness_check(m, a, delta, s)?;
    let usreg = uniform_hemiregularity_estimate(m, s)?;
    let back = rep.holds.then(|| usreg.limiting_value.at_most((1.0 + s.tol.cert) / a));
    let mut v = to_value(&rep);
    v["usreg"] = to_value(&usreg.limiting_value);
    v["back_bound_respected"] = to_value(&back);
    Ok(v)
}

fn run_inclusion(
    inc: &FnInclusion<f64>,
    op: &str,
    params: &BTreeMap<String, f64>,
    s: &Settings<f64>,
) -> Result<Value> {
    let (p_ref, x_ref) = inc.reference();
    Ok(match op {
        "theorem41_certificate" => to_value(&theorem41_certificate(inc, s)?),
        "strict_outer_slope" => to_value(&strict_outer_slope(inc, &s.ladder, &s.ladder, s)?),
        "partial_strong_slope" => {
            let p = point_param(params, "p", p_ref)?;
            let x = point_param(params, "x", x_ref)?;
            to_value(&partial_strong_slope(inc, &p, &x, &s.ladder, s)?)
        }
        "lsc_probe" => {
            let p = point_param(params, "p", p_ref)?;
            let x = point_param(params, "x", x_ref)?;
            let rep = lsc_probe(inc, &x, &p, &s.ladder, &s.resolution, s.tol.lsc)?;
            let mut v = to_value(&rep);
            v["violated"] = Value::Bool(rep.violation.is_some());
            v
        }
        "section_ulsc" => to_value(&uniform_lipschitz_lsc_estimate(&SectionMap::new(inc), s)?),
        "solution_uniform_hemiregularity" => {
            to_value(&uniform_hemiregularity_estimate(&SolutionMap::new(inc, &s.search), s)?)
        }
        "solution_openness" => openness_value(&SolutionMap::new(inc, &s.search), params, s)?,
        _ => return Err(unknown_op(op, EntryKind::Inclusion)),
    })
}

fn run_problem(
    prob: &ParamProblem<f64>,
    op: &str,
    params: &BTreeMap<String, f64>,
    s: &Settings<f64>,
) -> Result<Value> {
    let form = if param(params, "data", 0.0) != 0.0 {
        PenaltyForm::Data
    } else {
        PenaltyForm::Geometric
    };
    let radius = param(params, "radius", prob.local_opt_radius());
    Ok(match op {
        "problem_calmness" => to_value(&problem_calmness_estimate(prob, s)?),
        "exact_threshold" => to_value(&exact_threshold(prob, s)?),
        "exactness" => to_value(&exactness_verify(prob, param(params, "l", 1.0), form, radius, s)?),
        "minimal_exact_level" => {
            let l_max = param(params, "l_max", 100.0);
            json!({ "form": form, "l_max": l_max, "value": minimal_exact_level(prob, form, radius, l_max, s)? })
        }
        "parameterization_validity" => to_value(&parameterization_validity(prob, &s.ladder, s)?),
        "calmness_inference" => to_value(&calmness_inference_check(prob, param(params, "l", 1.2), s)?),
        "local_optimality" => {
            prob.check_local_optimality(s)?;
            json!({ "ok": true })
        }
        _ => return Err(unknown_op(op, EntryKind::Problem)),
    })
}

fn unknown_op(op: &str, kind: EntryKind) -> Error {
    Error::UnknownOperation {
        operation: op.into(),
        kind: format!("{kind:?}").to_lowercase(),
    }
}

fn observe(result: &Value, error: &Option<String>, quantity: &str) -> Option<Value> {
    if quantity == "error" {
        return error.clone().map(Value::String);
    }
    result.pointer(quantity).cloned()
}

fn applies(e: &ExpectedResult, operation: &str, params: &BTreeMap<String, f64>) -> bool {
    e.operation == operation && e.parameters.iter().all(|(k, v)| params.get(k) == Some(v))
}

/// Runs one operation on one entry with `overrides` merged over the entry's
/// default parameters and grades every applicable expected result. Unknown
/// entries and operations are errors; estimator errors are recorded in the
/// report.
pub fn run_entry(
    name: &str,
    operation: &str,
    overrides: &BTreeMap<String, f64>,
    s: &Settings<f64>,
) -> Result<RunReport> {
    let entry = find_entry(name)?;
    if !entry.kind.operations().contains(&operation) {
        return Err(unknown_op(operation, entry.kind));
    }
    let mut parameters = entry.parameters.clone();
    parameters.extend(overrides.iter().map(|(k, v)| (k.clone(), *v)));
    let start = Instant::now();
    let outcome = bind(&entry.formula_id, &parameters).and_then(|b| match &b {
        Bound::Mapping(m) => run_mapping(m, operation, &parameters, s),
        Bound::Inclusion(i) => run_inclusion(i, operation, &parameters, s),
        Bound::Problem(p) => run_problem(p, operation, &parameters, s),
    });
    let wall_time = start.elapsed();
    let (result, error) = match outcome {
        Ok(v) => (v, None),
        Err(e @ Error::UnknownOperation { .. }) => return Err(e),
        Err(e) => (Value::Null, Some(e.to_string())),
    };
    let checks: Vec<CheckOutcome> = entry
        .expected
        .iter()
        .filter(|e| applies(e, operation, &parameters))
        .map(|e| {
            let observed = observe(&result, &error, &e.quantity);
            CheckOutcome {
                passed: e.expect.check(observed.as_ref()),
                quantity: e.quantity.clone(),
                expect: e.expect.clone(),
                provenance: e.provenance,
                citation: e.citation.clone(),
                observed,
            }
        })
        .collect();
    let expects_error = checks.iter().any(|c| c.quantity == "error");
    let passed = checks.iter().all(|c| c.passed) && (error.is_none() || expects_error);
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        entry: entry.name,
        operation: operation.into(),
        parameters,
        config: *s,
        result,
        error,
        checks,
        passed,
        wall_time,
    })
}

/// The distinct `(entry, operation, parameters)` runs needed to grade every
/// expected result of the catalog, in catalog order.
pub fn verification_plan() -> Vec<(String, String, BTreeMap<String, f64>)> {
    let mut plan: Vec<(String, String, BTreeMap<String, f64>)> = Vec::new();
    for entry in catalog_list() {
        for e in &entry.expected {
            let key = (entry.name.clone(), e.operation.clone(), e.parameters.clone());
            if !plan.contains(&key) {
                plan.push(key);
            }
        }
    }
    plan
}

/// Runs the whole verification plan. Reports come back in plan order
/// whether or not the runs were parallel.
pub fn verify_all(s: &Settings<f64>, parallel: bool) -> Result<Vec<RunReport>> {
    let plan = verification_plan();
    let run = |(name, op, params): &(String, String, BTreeMap<String, f64>)| run_entry(name, op, params, s);
    if parallel {
        plan.par_iter().map(run).collect()
    } else {
        plan.iter().map(run).collect()
    }
}

/// Deterministic JSON of a set of reports.
pub fn reports_to_json(reports: &[RunReport]) -> String {
    serde_json::to_string_pretty(&json!({
        "schema_version": SCHEMA_VERSION,
        "passed": reports.iter().all(|r| r.passed),
        "reports": reports,
    }))
    .expect("reports serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_contents() {
        let list = catalog_list();
        for name in [
            "ex21_branch_parabola",
            "ex22_hyperbola",
            "ex31_sqrt_problem",
            "linear_onto",
            "shift_halfline",
            "affine_inclusion",
            "cubic_inclusion",
        ] {
            assert!(list.iter().any(|e| e.name == name), "{name}");
        }
        let ex31 = list.iter().find(|e| e.name == "ex31_sqrt_problem").unwrap();
        assert!(ex31.parameters.contains_key("beta"));
        for e in &list {
            assert!(!e.expected.is_empty(), "{}", e.name);
            for x in &e.expected {
                assert_eq!(x.provenance == Provenance::Paper, x.citation.is_some(), "{}", e.name);
                assert!(e.kind.operations().contains(&x.operation.as_str()), "{}", x.operation);
            }
        }
    }

    #[test]
    fn usage_errors() {
        let s = Settings::default();
        let none = BTreeMap::new();
        assert_eq!(
            run_entry("nope", "duality", &none, &s).unwrap_err(),
            Error::UnknownEntry("nope".into())
        );
        assert!(matches!(
            run_entry("identity", "exactness", &none, &s),
            Err(Error::UnknownOperation { .. })
        ));
    }

    #[test]
    fn expectations() {
        assert!(near(1.0, 0.1).check(Some(&json!(1.05))));
        assert!(!near(1.0, 0.1).check(Some(&json!("inf"))));
        assert!(Expectation::AtLeast { value: 3.0 }.check(Some(&json!("inf"))));
        assert!(!Expectation::AtMost { value: 3.0 }.check(None));
        assert!(equals(true).check(Some(&json!(true))));
    }
}
