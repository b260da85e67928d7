//! Parameterized constrained problems, problem calmness and exact penalty
//! thresholds.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RadiusLadder, Settings};
use crate::error::{Error, Result};
use crate::metric::{nearest_zero, Ball, Point};
use crate::moduli::{
    ladder_estimate, mapping_calmness_estimate, uniform_hemiregularity_estimate,
    uniform_lipschitz_lsc_estimate, ModulusEstimate, RungBest,
};
use crate::moduli::{fiber_points, Verdict};
use crate::scalar::{ExtReal, Scalar};
use crate::setvalued::{FnInclusion, Inclusion, SectionMap, SetValuedMap, SolutionMap};
use crate::slopes::{theorem41_certificate, CertificateStatus, OuterSlopeEstimate};

/// Nested balls used by the exactness check.
const EXACTNESS_LEVELS: usize = 24;
/// The geometric term measures distance to `{x : disp ≤ TERM_ETA η}` rather
/// than to the η-enlargement used elsewhere.
const TERM_ETA: f64 = 1e-3;

type Objective<T> = Arc<dyn Fn(&Point<T>) -> ExtReal<T> + Send + Sync>;

/// `min φ(x)` subject to `ω ∈ F(p̄, x)`, embedded in the family of problems
/// with constraints `ω ∈ F(p, x)`.
#[derive(Clone)]
pub struct ParamProblem<T: Scalar> {
    objective: Objective<T>,
    constraint: FnInclusion<T>,
    local_opt_radius: T,
}

impl<T: Scalar> ParamProblem<T> {
    pub fn new(
        objective: impl Fn(&Point<T>) -> ExtReal<T> + Send + Sync + 'static,
        constraint: FnInclusion<T>,
        local_opt_radius: T,
    ) -> Result<Self> {
        if !(local_opt_radius > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "local optimality radius must be positive, got {local_opt_radius}"
            )));
        }
        let prob = Self {
            objective: Arc::new(objective),
            constraint,
            local_opt_radius,
        };
        if prob.objective_at(prob.reference().1) == ExtReal::NegInf {
            return Err(Error::DegenerateObjective);
        }
        Ok(prob)
    }

    pub fn objective_at(&self, x: &Point<T>) -> ExtReal<T> {
        (self.objective)(x)
    }

    pub fn constraint(&self) -> &FnInclusion<T> {
        &self.constraint
    }

    pub fn reference(&self) -> (&Point<T>, &Point<T>) {
        self.constraint.reference()
    }

    pub fn local_opt_radius(&self) -> T {
        self.local_opt_radius
    }

    /// `R(p) = {x : ω ∈ F(p, x)}`.
    pub fn solution_map(&self, s: &Settings<T>) -> SolutionMap<&FnInclusion<T>, T> {
        SolutionMap::new(&self.constraint, &s.search)
    }

    /// Checks that `x̄` is not beaten by any sampled feasible point within the
    /// local optimality radius. Only samples with vanishing displacement count
    /// as feasible here.
    pub fn check_local_optimality(&self, s: &Settings<T>) -> Result<()> {
        let (p_ref, x_ref) = self.reference();
        let f_ref = self.objective_at(x_ref);
        let r = self.solution_map(s);
        let xs = fiber_points(&r, p_ref, &Ball::new(x_ref.clone(), self.local_opt_radius)?, s)?;
        // Members up to the tolerance η are skipped: with a non-Lipschitz
        // objective they can undercut the reference by far more than η.
        let zero = ExtReal::Finite(T::zero());
        for x in xs.into_iter().filter(|x| self.constraint.disp(p_ref, x) == zero) {
            match self.objective_at(&x) {
                ExtReal::NegInf => return Err(Error::DegenerateObjective),
                v if v + ExtReal::Finite(s.tol.exact) < f_ref => {
                    return Err(Error::ReferenceNotOptimal(x.get(0).as_f64()))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyForm {
    /// `φ(x) + l dist(x, R(p))`.
    Geometric,
    /// `φ(x) + l disp(p, x)`.
    Data,
}

/// `φ_l(p, x)` in the chosen form.
pub fn penalty_value<T: Scalar>(
    prob: &ParamProblem<T>,
    l: T,
    form: PenaltyForm,
    p: &Point<T>,
    x: &Point<T>,
    s: &Settings<T>,
) -> Result<ExtReal<T>> {
    if !(l > T::zero()) {
        return Err(Error::InvalidParameter(format!("penalty level must be positive, got {l}")));
    }
    penalty_at(prob, l, form, p, x, s)
}

fn penalty_term<T: Scalar>(
    prob: &ParamProblem<T>,
    form: PenaltyForm,
    p: &Point<T>,
    x: &Point<T>,
    s: &Settings<T>,
) -> ExtReal<T> {
    match form {
        PenaltyForm::Geometric => {
            let c = &prob.constraint;
            let eta = c.eta() * T::of(TERM_ETA);
            nearest_zero(x, c.state_region(), |z| c.disp(p, z), &s.search, eta)
                .map_or(ExtReal::PosInf, |h| ExtReal::Finite(h.distance))
        }
        PenaltyForm::Data => prob.constraint.disp(p, x),
    }
}

fn penalty_at<T: Scalar>(
    prob: &ParamProblem<T>,
    l: T,
    form: PenaltyForm,
    p: &Point<T>,
    x: &Point<T>,
    s: &Settings<T>,
) -> Result<ExtReal<T>> {
    let f = prob.objective_at(x);
    if f == ExtReal::NegInf {
        return Err(Error::DegenerateObjective);
    }
    Ok(f + penalty_term(prob, form, p, x, s) * l)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
pub struct PenaltyVerdict<T: Scalar> {
    pub level: T,
    pub form: PenaltyForm,
    pub exact: bool,
    /// A sampled `x` with `φ_l(p̄, x) < φ_l(p̄, x̄) - tol`.
    pub witness: Option<Point<T>>,
    pub witness_value: Option<ExtReal<T>>,
    pub reference_value: ExtReal<T>,
    pub check_radius: T,
    pub samples: usize,
}

/// Sample points of the nested balls `B(x̄, ρ 2^{-k})`.
fn nested_samples<T: Scalar>(center: &Point<T>, radius: T, s: &Settings<T>) -> Result<Vec<Point<T>>> {
    let mut out = Vec::new();
    let mut r = radius;
    for _ in 0..EXACTNESS_LEVELS {
        out.extend(s.resolution.over(Ball::new(center.clone(), r)?).points()?);
        r = r / T::of(2.0);
    }
    Ok(out)
}

struct PenaltySamples<T: Scalar> {
    xs: Vec<Point<T>>,
    f: Vec<ExtReal<T>>,
    term: Vec<ExtReal<T>>,
    reference_term: ExtReal<T>,
}

impl<T: Scalar> PenaltySamples<T> {
    fn new(prob: &ParamProblem<T>, form: PenaltyForm, radius: T, s: &Settings<T>) -> Result<Self> {
        let (p_ref, x_ref) = prob.reference();
        let xs = nested_samples(x_ref, radius, s)?;
        let f: Vec<ExtReal<T>> = xs.par_iter().map(|x| prob.objective_at(x)).collect();
        if f.contains(&ExtReal::NegInf) {
            return Err(Error::DegenerateObjective);
        }
        let term = xs.par_iter().map(|x| penalty_term(prob, form, p_ref, x, s)).collect();
        Ok(Self {
            reference_term: penalty_term(prob, form, p_ref, x_ref, s),
            xs,
            f,
            term,
        })
    }

    fn verdict(&self, prob: &ParamProblem<T>, l: T, form: PenaltyForm, radius: T, s: &Settings<T>) -> PenaltyVerdict<T> {
        let reference_value = prob.objective_at(prob.reference().1) + self.reference_term * l;
        let mut best: Option<(usize, ExtReal<T>)> = None;
        for (i, (&f, &t)) in self.f.iter().zip(&self.term).enumerate() {
            let v = f + t * l;
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
        // Points within the η-band of R(p̄) count as feasible, so the
        // penalty may dip by about l η.
        let slack = s.tol.exact + l * prob.constraint.eta();
        let threshold = match reference_value {
            ExtReal::Finite(v) => ExtReal::Finite(v - slack),
            other => other,
        };
        let (witness, witness_value, exact) = match best {
            Some((i, v)) if v < threshold => (Some(self.xs[i].clone()), Some(v), false),
            _ => (None, None, true),
        };
        PenaltyVerdict {
            level: l,
            form,
            exact,
            witness,
            witness_value,
            reference_value,
            check_radius: radius,
            samples: self.xs.len(),
        }
    }
}

/// Decides on samples whether `x̄` minimizes `φ_l(p̄, ·)` locally: the
/// penalty is exact unless some sampled point of `B(x̄, check_radius)` or of
/// the nested balls of radii `check_radius 2^{-k}` lies below the reference
/// value by more than the exactness tolerance.
pub fn exactness_verify<T: Scalar>(
    prob: &ParamProblem<T>,
    l: T,
    form: PenaltyForm,
    check_radius: T,
    s: &Settings<T>,
) -> Result<PenaltyVerdict<T>> {
    if !(l > T::zero()) {
        return Err(Error::InvalidParameter(format!("penalty level must be positive, got {l}")));
    }
    if !(check_radius > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "check radius must be positive, got {check_radius}"
        )));
    }
    let samples = PenaltySamples::new(prob, form, check_radius, s)?;
    Ok(samples.verdict(prob, l, form, check_radius, s))
}

/// Smallest sampled exact penalty level, found by bisection on `[0, l_max]`
/// using that exactness at `l` implies exactness at every larger level.
/// `None` when the penalty is not exact even at `l_max`.
pub fn minimal_exact_level<T: Scalar>(
    prob: &ParamProblem<T>,
    form: PenaltyForm,
    check_radius: T,
    l_max: T,
    s: &Settings<T>,
) -> Result<Option<T>> {
    let samples = PenaltySamples::new(prob, form, check_radius, s)?;
    let exact = |l: T| samples.verdict(prob, l, form, check_radius, s).exact;
    if !exact(l_max) {
        return Ok(None);
    }
    let (mut lo, mut hi) = (T::zero(), l_max);
    for _ in 0..60 {
        let mid = (lo + hi) / T::of(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if exact(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
pub struct ParameterizationReport<T: Scalar> {
    /// `R(p̄)` is the feasible set by construction.
    pub condition_i: bool,
    pub condition_ii: bool,
    pub r: T,
    /// `(τ, p_τ)` per rung; `p_τ ≠ p̄` lies in `B(p̄, τ)` and has a feasible
    /// point within `r` of `x̄`.
    pub witnesses: Vec<(T, Option<Point<T>>)>,
}

/// Checks that perturbed parameters arbitrarily close to `p̄` keep feasible
/// points near `x̄`, with `r` the local optimality radius.
pub fn parameterization_validity<T: Scalar>(
    prob: &ParamProblem<T>,
    tau_ladder: &RadiusLadder<T>,
    s: &Settings<T>,
) -> Result<ParameterizationReport<T>> {
    tau_ladder.validate()?;
    let (p_ref, x_ref) = prob.reference();
    let r = prob.local_opt_radius;
    let map = prob.solution_map(s);
    let eta = map.eta();
    let mut witnesses = Vec::with_capacity(tau_ladder.rungs);
    for tau in tau_ladder.radii() {
        let mut ps: Vec<Point<T>> = s
            .resolution
            .over(Ball::new(p_ref.clone(), tau)?)
            .points()?
            .into_iter()
            .filter(|p| p.dist(p_ref) > eta)
            .collect();
        ps.sort_by(|a, b| a.dist(p_ref).partial_cmp(&b.dist(p_ref)).unwrap());
        let found: Vec<bool> = ps
            .par_iter()
            .map(|p| map.fiber_dist(p, x_ref).at_most(r))
            .collect();
        let w = found.iter().position(|&f| f).map(|i| ps[i].clone());
        witnesses.push((tau, w));
    }
    let condition_ii = witnesses.iter().all(|(_, w)| w.is_some());
    Ok(ParameterizationReport {
        condition_i: true,
        condition_ii,
        r,
        witnesses,
    })
}

/// Ladder estimate of the problem calmness modulus: the supremum of
/// `(φ(x̄) - φ(x))⁺ / d(p, p̄)` over sampled `p ≠ p̄` near `p̄` and feasible
/// `x ∈ R(p)` near `x̄`.
pub fn problem_calmness_estimate<T: Scalar>(
    prob: &ParamProblem<T>,
    s: &Settings<T>,
) -> Result<ModulusEstimate<T>> {
    let map = prob.solution_map(s);
    let (p_ref, x_ref) = prob.reference();
    let f_ref = prob.objective_at(x_ref);
    let density = s.resolution.density_for(p_ref.dim());
    let degenerate = std::sync::atomic::AtomicBool::new(false);
    let est = ladder_estimate("problem_calmness", &s.ladder, s, density, |r| -> Result<RungBest<T>> {
        crate::moduli::perturbed_fiber_sup(&map, s, r, |p, x| {
            let decrease = match (f_ref, prob.objective_at(x)) {
                (_, ExtReal::PosInf) => T::zero(),
                (_, ExtReal::NegInf) => {
                    degenerate.store(true, std::sync::atomic::Ordering::Relaxed);
                    T::zero()
                }
                (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).max(T::zero()),
                _ => T::zero(),
            };
            ExtReal::Finite(decrease / p.dist(p_ref))
        })
    })?;
    if degenerate.into_inner() {
        return Err(Error::DegenerateObjective);
    }
    if est.rungs.iter().all(|r| r.samples == 0) {
        return Err(Error::NoPerturbedFeasiblePoints);
    }
    Ok(est)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
pub struct LevelCheck<T: Scalar> {
    pub multiplier: T,
    pub verdict: PenaltyVerdict<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
pub struct ThresholdReport<T: Scalar> {
    pub usreg_r: ModulusEstimate<T>,
    pub pcalm: ModulusEstimate<T>,
    /// `usreg(R) · pcalm`, `+∞` unless both estimates are finite.
    pub threshold_t31: ExtReal<T>,
    pub ulsc_f: ModulusEstimate<T>,
    pub outer_slope: Option<OuterSlopeEstimate<T>>,
    pub certificate_status: CertificateStatus,
    /// `uLlsc(F) · pcalm / (strict outer slope)`.
    pub threshold_c41: ExtReal<T>,
    /// Geometric-form checks around `threshold_t31`.
    pub verified_t31: Vec<LevelCheck<T>>,
    /// Data-form checks around `threshold_c41`.
    pub verified_c41: Vec<LevelCheck<T>>,
}

fn product<T: Scalar>(a: &ModulusEstimate<T>, b: &ModulusEstimate<T>) -> ExtReal<T> {
    match (a.verdict, b.verdict, a.limiting_value, b.limiting_value) {
        (Verdict::Finite, Verdict::Finite, ExtReal::Finite(x), ExtReal::Finite(y)) => {
            ExtReal::Finite(x * y)
        }
        _ => ExtReal::PosInf,
    }
}

fn level_checks<T: Scalar>(
    prob: &ParamProblem<T>,
    threshold: ExtReal<T>,
    form: PenaltyForm,
    s: &Settings<T>,
) -> Result<Vec<LevelCheck<T>>> {
    let samples = PenaltySamples::new(prob, form, prob.local_opt_radius, s)?;
    let levels: Vec<(T, T)> = match threshold {
        ExtReal::Finite(t) if t > T::zero() => {
            vec![(T::of(1.2), t * T::of(1.2)), (T::of(0.5), t * T::of(0.5))]
        }
        ExtReal::Finite(_) => vec![(T::zero(), T::of(1e-3))],
        _ => [1.0, 10.0, 100.0]
            .iter()
            .map(|&l| (T::zero(), T::of(l)))
            .collect(),
    };
    Ok(levels
        .into_iter()
        .map(|(multiplier, l)| LevelCheck {
            multiplier,
            verdict: samples.verdict(prob, l, form, prob.local_opt_radius, s),
        })
        .collect())
}

/// Computes the penalty thresholds `usreg(R) · pcalm` and
/// `uLlsc(F) · pcalm / (strict outer slope)` and probes exactness at 1.2 and
/// 0.5 times each finite threshold, or at `l ∈ {1, 10, 100}` when a threshold
/// is infinite. A multiplier of 0 marks an absolute probe level.
pub fn exact_threshold<T: Scalar>(prob: &ParamProblem<T>, s: &Settings<T>) -> Result<ThresholdReport<T>> {
    let map = prob.solution_map(s);
    let usreg_r = uniform_hemiregularity_estimate(&map, s)?;
    let pcalm = problem_calmness_estimate(prob, s)?;
    let threshold_t31 = product(&usreg_r, &pcalm);
    let cert = theorem41_certificate(&prob.constraint, s)?;
    let threshold_c41 = match (cert.status, &cert.outer_slope) {
        (CertificateStatus::Issued, Some(o)) => match product(&cert.ulsc_f, &pcalm) {
            ExtReal::Finite(v) => ExtReal::Finite(v / o.value),
            other => other,
        },
        _ => ExtReal::PosInf,
    };
    let verified_t31 = level_checks(prob, threshold_t31, PenaltyForm::Geometric, s)?;
    let verified_c41 = level_checks(prob, threshold_c41, PenaltyForm::Data, s)?;
    Ok(ThresholdReport {
        usreg_r,
        pcalm,
        threshold_t31,
        ulsc_f: cert.ulsc_f,
        outer_slope: cert.outer_slope,
        certificate_status: cert.status,
        threshold_c41,
        verified_t31,
        verified_c41,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
pub struct CalmnessInference<T: Scalar> {
    pub mapping_calm: ModulusEstimate<T>,
    pub exact_at_l: bool,
    pub pcalm_direct: ModulusEstimate<T>,
    /// Calm mapping and exact penalty imply a calm problem on this instance.
    pub consistent: bool,
}

/// Compares the inference "calm solution mapping and exact penalty at `l`
/// give a calm problem" with a direct problem calmness estimate.
pub fn calmness_inference_check<T: Scalar>(
    prob: &ParamProblem<T>,
    l: T,
    s: &Settings<T>,
) -> Result<CalmnessInference<T>> {
    let map = prob.solution_map(s);
    let mapping_calm = mapping_calmness_estimate(&map, s)?;
    let exact_at_l = exactness_verify(prob, l, PenaltyForm::Geometric, prob.local_opt_radius, s)?.exact;
    let pcalm_direct = problem_calmness_estimate(prob, s)?;
    let consistent = !(mapping_calm.is_finite() && exact_at_l) || pcalm_direct.is_finite();
    Ok(CalmnessInference {
        mapping_calm,
        exact_at_l,
        pcalm_direct,
        consistent,
    })
}

/// `uLlsc` of the section `x ↦ F(p̄, x)` at `(x̄, ω)`.
pub fn section_ulsc<T: Scalar, I: Inclusion<T>>(inc: &I, s: &Settings<T>) -> Result<ModulusEstimate<T>> {
    uniform_lipschitz_lsc_estimate(&SectionMap::new(inc), s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::formulas::{empty_param, shift_halfline, sqrt_problem};

    #[test]
    fn penalty_values_by_hand() {
        let s = Settings::default();
        let prob = shift_halfline::<f64>().unwrap();
        let p0 = Point::scalar(0.0);
        let v = penalty_value(&prob, 1.5, PenaltyForm::Geometric, &p0, &Point::scalar(-0.2), &s).unwrap();
        assert!((v.finite().unwrap() - 0.1).abs() < 1e-3);
        let v = penalty_value(&prob, 1.5, PenaltyForm::Geometric, &p0, &Point::scalar(0.3), &s).unwrap();
        assert_eq!(v, ExtReal::Finite(0.3));
        let ex31 = sqrt_problem::<f64>(2.0).unwrap();
        let v = penalty_value(&ex31, 5.0, PenaltyForm::Geometric, &p0, &Point::scalar(0.04), &s).unwrap();
        assert!(v.finite().unwrap().abs() < 1e-4);
        assert!(penalty_value(&prob, 0.0, PenaltyForm::Data, &p0, &p0, &s).is_err());
    }

    #[test]
    fn exactness_on_the_half_line() {
        let s = Settings::default();
        let prob = shift_halfline::<f64>().unwrap();
        let yes = exactness_verify(&prob, 1.5, PenaltyForm::Geometric, 0.5, &s).unwrap();
        assert!(yes.exact && yes.witness.is_none());
        let no = exactness_verify(&prob, 0.5, PenaltyForm::Geometric, 0.5, &s).unwrap();
        assert!(!no.exact);
        assert!(no.witness.unwrap().get(0) < 0.0);
        let ex31 = sqrt_problem::<f64>(2.0).unwrap();
        for l in [1.0, 10.0, 100.0] {
            assert!(!exactness_verify(&ex31, l, PenaltyForm::Geometric, 0.5, &s).unwrap().exact);
        }
    }

    #[test]
    fn parameterization_checks() {
        let s = Settings::default();
        let ok = parameterization_validity(&sqrt_problem::<f64>(1.0).unwrap(), &s.ladder, &s).unwrap();
        assert!(ok.condition_i && ok.condition_ii);
        let bad = parameterization_validity(&empty_param::<f64>().unwrap(), &s.ladder, &s).unwrap();
        assert!(!bad.condition_ii);
        assert!(bad.witnesses.iter().all(|(_, w)| w.is_none()));
        assert_eq!(
            problem_calmness_estimate(&empty_param::<f64>().unwrap(), &s),
            Err(Error::NoPerturbedFeasiblePoints)
        );
    }
}
