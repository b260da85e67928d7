//! Strong slopes of the displacement `p ↦ dist(ω, F(p, x))` and the
//! nondegeneracy certificate built from them.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RadiusLadder, Settings};
use crate::error::{Error, Result};
use crate::metric::{Ball, Point, Resolution};
use crate::moduli::{
    par_argmax, uniform_hemiregularity_estimate, uniform_lipschitz_lsc_estimate, ModulusEstimate,
};
use crate::scalar::{ExtReal, Scalar};
use crate::setvalued::{lsc_probe, Inclusion, SectionMap, SolutionMap};

const BAND_DENSITY: usize = 33;
const LSC_PROBES: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
pub struct SlopeRung<T: Scalar> {
    pub radius: T,
    /// Largest clamped decrease quotient over the sampled ball.
    pub quotient: T,
    pub witness: Option<Point<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
pub struct SlopeEstimate<T: Scalar> {
    pub p: Point<T>,
    pub x: Point<T>,
    pub rungs: Vec<SlopeRung<T>>,
    pub value: T,
    pub is_local_min: bool,
}

/// Partial strong slope of the displacement in `p` at `(p, x)`:
/// `limsup_{q→p} (disp(p, x) - disp(q, x))⁺ / d(q, p)`, read at the smallest
/// rung of the ladder. A point whose sampled decrease quotients at that rung
/// stay below the local-minimum tolerance counts as a local minimizer and has
/// slope 0.
pub fn partial_strong_slope<T: Scalar, I: Inclusion<T> + ?Sized>(
    inc: &I,
    p: &Point<T>,
    x: &Point<T>,
    ladder: &RadiusLadder<T>,
    s: &Settings<T>,
) -> Result<SlopeEstimate<T>> {
    ladder.validate()?;
    p.check_dim(inc.parameter_region().dim())?;
    x.check_dim(inc.state_region().dim())?;
    let Some(here) = inc.disp(p, x).finite() else {
        return Err(Error::UndefinedSlope);
    };
    let mut rungs = Vec::with_capacity(ladder.rungs);
    let mut any_finite = false;
    for r in ladder.radii() {
        let ball = Ball::new(p.clone(), r)?;
        let qs: Vec<Point<T>> = s
            .resolution
            .over(ball)
            .points()?
            .into_iter()
            .filter(|q| q.dist(p) > T::zero())
            .collect();
        let (_, best) = par_argmax(&qs, |q| {
            let there = inc.disp(q, x).finite()?;
            Some(((here - there) / q.dist(p), ()))
        });
        any_finite |= best.is_some();
        let (quotient, witness) = match best {
            Some((i, v, ())) => (v.max(T::zero()), Some(qs[i].clone())),
            None => (T::zero(), None),
        };
        rungs.push(SlopeRung {
            radius: r,
            quotient,
            witness,
        });
    }
    if !any_finite {
        return Err(Error::UndefinedSlope);
    }
    let last = rungs.last().map_or(T::zero(), |r| r.quotient);
    let is_local_min = last <= s.tol.local_min;
    Ok(SlopeEstimate {
        p: p.clone(),
        x: x.clone(),
        rungs,
        value: if is_local_min { T::zero() } else { last },
        is_local_min,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
pub struct BandRung<T: Scalar> {
    pub epsilon: T,
    /// Infimum of slopes over every band sample taken at this or a smaller
    /// `ε`; `+∞` while no sample has been found.
    pub infimum: ExtReal<T>,
    pub raw: ExtReal<T>,
    pub samples: usize,
    pub witness: Option<(Point<T>, Point<T>)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
pub struct OuterSlopeEstimate<T: Scalar> {
    pub per_epsilon: Vec<BandRung<T>>,
    pub value: T,
    /// Largest sampled `ε` whose band held no sample.
    pub band_empty_at: Option<T>,
}

/// Strict outer slope of the displacement at the reference pair: the limit
/// as `ε → 0` of the infimum of partial strong slopes over sampled pairs
/// `(p, x)` in `B(p̄, ε) × B(x̄, ε)` with `η < disp(p, x) < ε`.
pub fn strict_outer_slope<T: Scalar, I: Inclusion<T> + ?Sized>(
    inc: &I,
    eps_ladder: &RadiusLadder<T>,
    inner_ladder: &RadiusLadder<T>,
    s: &Settings<T>,
) -> Result<OuterSlopeEstimate<T>> {
    eps_ladder.validate()?;
    inner_ladder.validate()?;
    let (p_ref, x_ref) = inc.reference();
    let eta = inc.eta();
    if !inc.disp(p_ref, x_ref).at_most(eta) {
        return Err(Error::ReferenceNotInGraph(inc.disp(p_ref, x_ref).to_float().as_f64()));
    }
    let band = |center: &Point<T>, eps: T| -> Result<Vec<Point<T>>> {
        let res = Resolution {
            density: Some(s.resolution.density_for(center.dim()).min(BAND_DENSITY)),
            ..s.resolution
        };
        res.over(Ball::new(center.clone(), eps)?).points()
    };
    let mut raws = Vec::with_capacity(eps_ladder.rungs);
    for eps in eps_ladder.radii() {
        let ps = band(p_ref, eps)?;
        let xs = band(x_ref, eps)?;
        let pairs: Vec<(usize, usize)> = (0..ps.len())
            .flat_map(|i| (0..xs.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| {
                let d = inc.disp(&ps[i], &xs[j]);
                !d.at_most(eta) && d < ExtReal::Finite(eps)
            })
            .collect();
        let slopes: Vec<Result<T>> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let (p, x) = (&ps[i], &xs[j]);
                let d = inc.disp(p, x).finite().ok_or(Error::UndefinedSlope)?;
                let inner = inner_ladder.with_r0(inner_ladder.r0.min(d));
                Ok(partial_strong_slope(inc, p, x, &inner, s)?.value)
            })
            .collect();
        let mut best: Option<(T, usize)> = None;
        for (k, v) in slopes.into_iter().enumerate() {
            let v = v?;
            if best.is_none_or(|(b, _)| v < b) {
                best = Some((v, k));
            }
        }
        raws.push(BandRung {
            epsilon: eps,
            infimum: ExtReal::PosInf,
            raw: best.map_or(ExtReal::PosInf, |(v, _)| ExtReal::Finite(v)),
            samples: pairs.len(),
            witness: best.map(|(_, k)| {
                let (i, j) = pairs[k];
                (ps[i].clone(), xs[j].clone())
            }),
        });
    }
    if raws[0].samples == 0 {
        return Err(Error::EmptyBand);
    }
    let mut running = ExtReal::PosInf;
    for rung in raws.iter_mut().rev() {
        running = running.min(rung.raw);
        rung.infimum = running;
    }
    let band_empty_at = raws.iter().find(|r| r.samples == 0).map(|r| r.epsilon);
    let value = raws
        .iter()
        .rev()
        .find(|r| r.samples > 0)
        .and_then(|r| r.infimum.finite())
        .unwrap_or(T::zero());
    Ok(OuterSlopeEstimate {
        per_epsilon: raws,
        value,
        band_empty_at,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateStatus {
    Issued,
    /// The displacement failed a sampled lower semicontinuity probe.
    #[serde(rename = "hypothesis_ii_fails")]
    HypothesisIIFails,
    /// The section `x ↦ F(p̄, x)` is not uniformly Lipschitz l.s.c.
    #[serde(rename = "hypothesis_iii_fails")]
    HypothesisIIIFails,
    /// The strict outer slope vanishes.
    #[serde(rename = "hypothesis_iv_fails")]
    HypothesisIVFails,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
pub struct Theorem41Report<T: Scalar> {
    pub status: CertificateStatus,
    pub lsc_violation: Option<(Point<T>, Point<T>)>,
    pub ulsc_f: ModulusEstimate<T>,
    pub outer_slope: Option<OuterSlopeEstimate<T>>,
    /// `uLlsc / outer slope`, `+∞` unless the certificate is issued.
    pub bound: ExtReal<T>,
    pub direct_usreg_r: ModulusEstimate<T>,
    pub bound_respected: Option<bool>,
}

/// Checks the hypotheses of the implicit multifunction estimate on samples
/// and, when they hold, bounds the uniform hemiregularity modulus of the
/// solution mapping by `uLlsc(F(p̄, ·)) / (strict outer slope)`. The direct
/// estimate of that modulus is always computed for comparison.
pub fn theorem41_certificate<T: Scalar, I: Inclusion<T>>(
    inc: &I,
    s: &Settings<T>,
) -> Result<Theorem41Report<T>> {
    let (p_ref, x_ref) = inc.reference();
    let probe_res = Resolution {
        density: Some(LSC_PROBES),
        ..s.resolution
    };
    let r0 = s.ladder.r0;
    let probes_p = probe_res.over(Ball::new(p_ref.clone(), r0)?).points()?;
    let probes_x = probe_res.over(Ball::new(x_ref.clone(), r0)?).points()?;
    let mut lsc_violation = None;
    'probe: for x in &probes_x {
        for p in &probes_p {
            let rep = lsc_probe(inc, x, p, &s.ladder, &s.resolution, s.tol.lsc)?;
            if rep.violation.is_some() {
                lsc_violation = Some((p.clone(), x.clone()));
                break 'probe;
            }
        }
    }

    let ulsc_f = uniform_lipschitz_lsc_estimate(&SectionMap::new(inc), s)?;
    let solution = SolutionMap::new(inc, &s.search);
    let direct_usreg_r = uniform_hemiregularity_estimate(&solution, s)?;
    let outer_slope = match strict_outer_slope(inc, &s.ladder, &s.ladder, s) {
        Ok(o) => Some(o),
        Err(Error::EmptyBand) => None,
        Err(e) => return Err(e),
    };

    let status = if lsc_violation.is_some() {
        CertificateStatus::HypothesisIIFails
    } else if ulsc_f.verdict == crate::moduli::Verdict::Divergent {
        CertificateStatus::HypothesisIIIFails
    } else if !ulsc_f.is_finite() {
        CertificateStatus::Inconclusive
    } else {
        match &outer_slope {
            None => CertificateStatus::Inconclusive,
            Some(o) if o.value <= s.tol.conv => CertificateStatus::HypothesisIVFails,
            Some(_) => CertificateStatus::Issued,
        }
    };
    let bound = match (status, &outer_slope, ulsc_f.limiting_value) {
        (CertificateStatus::Issued, Some(o), ExtReal::Finite(u)) => ExtReal::Finite(u / o.value),
        _ => ExtReal::PosInf,
    };
    let bound_respected = match bound {
        ExtReal::Finite(b) => Some(
            direct_usreg_r.is_finite()
                && direct_usreg_r
                    .limiting_value
                    .at_most(b * (T::one() + s.tol.cert)),
        ),
        _ => None,
    };
    Ok(Theorem41Report {
        status,
        lsc_violation,
        ulsc_f,
        outer_slope,
        bound,
        direct_usreg_r,
        bound_respected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::formulas::{affine_inclusion, scalar_inclusion};

    #[test]
    fn slopes_of_simple_displacements() {
        let s = Settings::default();
        let ladder = s.ladder;
        let abs = affine_inclusion::<f64>(1.0).unwrap();
        let (p, x) = (Point::scalar(0.4), Point::scalar(0.1));
        let est = partial_strong_slope(&abs, &p, &x, &ladder, &s).unwrap();
        assert!((est.value - 1.0).abs() < 1e-9, "{}", est.value);
        assert!(!est.is_local_min);

        let at_min = partial_strong_slope(&abs, &x, &x, &ladder, &s).unwrap();
        assert!(at_min.is_local_min);
        assert_eq!(at_min.value, 0.0);

        let sq = scalar_inclusion(0.0, |p: f64, x| (p - x) * (p - x)).unwrap();
        let est = partial_strong_slope(&sq, &p, &x, &ladder, &s).unwrap();
        assert!((est.value - 0.6).abs() < 0.01, "{}", est.value);
        assert!(est.rungs.iter().all(|r| r.quotient >= 0.0));
    }

    #[test]
    fn outer_slope_scales_with_the_coefficient() {
        let s = Settings::default();
        for c in [0.5, 1.0, 2.0] {
            let inc = affine_inclusion::<f64>(c).unwrap();
            let est = strict_outer_slope(&inc, &s.ladder, &s.ladder, &s).unwrap();
            assert!((est.value - c).abs() <= 0.02 * c, "c = {c}: {}", est.value);
            let infs: Vec<_> = est.per_epsilon.iter().map(|r| r.infimum).collect();
            assert!(infs.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn flat_displacement_has_an_empty_band() {
        let s = Settings::default();
        let flat = scalar_inclusion(0.0, |_: f64, _| 0.0).unwrap();
        assert_eq!(
            strict_outer_slope(&flat, &s.ladder, &s.ladder, &s),
            Err(Error::EmptyBand)
        );
    }
}
