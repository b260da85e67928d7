use serde::Serialize;

use super::estimate::{ladder_estimate, par_argmax, ModulusEstimate, RungBest};
use crate::config::Settings;
use crate::error::Result;
use crate::metric::{Ball, Point};
use crate::scalar::{ExtReal, Scalar};
use crate::setvalued::{check_reference, SetValuedMap};

/// Sample points of `ball(center, r)` lying in `region`, plus a flag telling
/// whether the ball sticks out of the region.
pub(crate) fn ball_samples<T: Scalar>(
    s: &Settings<T>,
    center: &Point<T>,
    r: T,
    region: &Ball<T>,
) -> Result<(Vec<Point<T>>, bool)> {
    let ball = Ball::new(center.clone(), r)?;
    let clipped = !region.covers(&ball);
    let mut pts = s.resolution.over(ball).points()?;
    if clipped {
        pts.retain(|q| region.contains(q));
    }
    Ok((pts, clipped))
}

/// Whether an inverse-image point found at distance `d` from `p` may lie
/// within one search cell of the region boundary.
pub(crate) fn touches_boundary<T: Scalar>(
    s: &Settings<T>,
    region: &Ball<T>,
    p: &Point<T>,
    d: ExtReal<T>,
) -> bool {
    let cell = T::of(2.0) * region.radius / T::of(s.search.seed_density.max(1) as f64);
    match d {
        ExtReal::Finite(d) => region.depth(p) - d <= cell,
        _ => true,
    }
}

/// Supremum of `num(x) / den(x)` over sampled `x` of `ball(x̄, r)` whose
/// denominator exceeds η.
fn quotient_rung<T, N, D>(
    s: &Settings<T>,
    center: &Point<T>,
    r: T,
    region: &Ball<T>,
    eta: T,
    num: N,
    den: D,
    boundary: impl Fn(&Point<T>, ExtReal<T>) -> bool + Sync,
) -> Result<RungBest<T>>
where
    T: Scalar,
    N: Fn(&Point<T>) -> ExtReal<T> + Sync + Send,
    D: Fn(&Point<T>) -> ExtReal<T> + Sync + Send,
{
    let (pts, clipped) = ball_samples(s, center, r, region)?;
    let (count, best) = par_argmax(&pts, |x| {
        let d = den(x);
        if d.at_most(eta) {
            return None;
        }
        let n = num(x);
        let q = n.ratio(d).unwrap_or(ExtReal::PosInf);
        Some((q, n))
    });
    Ok(match best {
        None => RungBest {
            samples: count,
            ..RungBest::vacuous()
        },
        Some((i, q, n)) => RungBest {
            samples: count,
            value: q,
            witness: vec![pts[i].clone()],
            near_boundary: clipped || boundary(&pts[i], n),
        },
    })
}

/// Ladder estimate of the hemiregularity modulus: the supremum of
/// `dist(p̄, Θ⁻¹(x)) / d(x, x̄)` over shrinking balls around `x̄`.
pub fn hemiregularity_estimate<T: Scalar, M: SetValuedMap<T> + ?Sized>(
    map: &M,
    s: &Settings<T>,
) -> Result<ModulusEstimate<T>> {
    check_reference(map)?;
    let (p_ref, x_ref) = map.reference();
    let density = s.resolution.density_for(x_ref.dim());
    ladder_estimate("hemiregularity", &s.ladder, s, density, |r| {
        quotient_rung(
            s,
            x_ref,
            r,
            map.range_region(),
            map.eta(),
            |x| map.inverse_fiber_dist(x, p_ref, &s.search),
            |x| ExtReal::Finite(x.dist(x_ref)),
            |_, n| touches_boundary(s, map.domain_region(), p_ref, n),
        )
    })
}

/// Ladder estimate of the uniform hemiregularity modulus through
/// `dist(p̄, Θ⁻¹(x)) ≤ κ dist(x, Θ(p̄))` on balls around `x̄`. Rungs where
/// every sample lies on `Θ(p̄)` report 0.
pub fn uniform_hemiregularity_estimate<T: Scalar, M: SetValuedMap<T> + ?Sized>(
    map: &M,
    s: &Settings<T>,
) -> Result<ModulusEstimate<T>> {
    check_reference(map)?;
    let (p_ref, x_ref) = map.reference();
    let density = s.resolution.density_for(x_ref.dim());
    ladder_estimate("uniform_hemiregularity", &s.ladder, s, density, |r| {
        quotient_rung(
            s,
            x_ref,
            r,
            map.range_region(),
            map.eta(),
            |x| map.inverse_fiber_dist(x, p_ref, &s.search),
            |x| map.fiber_dist(p_ref, x),
            |_, n| touches_boundary(s, map.domain_region(), p_ref, n),
        )
    })
}

/// Ladder estimate of the uniform Lipschitz lower semicontinuity modulus of
/// `Φ : X ⇉ P` at its reference pair `(x̄, p̄)`: the supremum of
/// `dist(p̄, Φ(x)) / dist(x, Φ⁻¹(p̄))`.
pub fn uniform_lipschitz_lsc_estimate<T: Scalar, M: SetValuedMap<T> + ?Sized>(
    phi: &M,
    s: &Settings<T>,
) -> Result<ModulusEstimate<T>> {
    check_reference(phi)?;
    let (x_ref, p_ref) = phi.reference();
    let density = s.resolution.density_for(x_ref.dim());
    ladder_estimate("uniform_lipschitz_lsc", &s.ladder, s, density, |r| {
        quotient_rung(
            s,
            x_ref,
            r,
            phi.domain_region(),
            phi.eta(),
            |x| phi.fiber_dist(x, p_ref),
            |x| phi.inverse_fiber_dist(p_ref, x, &s.search),
            |x, n| n.is_pos_inf() || touches_boundary(s, phi.domain_region(), x, ExtReal::zero()),
        )
    })
}

/// A supremum over one sampled set, with the point attaining it.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
pub struct SupEstimate<T: Scalar> {
    pub value: ExtReal<T>,
    pub witness: Option<Point<T>>,
    pub samples: usize,
}

/// `‖Θ⁻¹‖⁻ = sup over the unit ball of X of dist(0, Θ⁻¹(x))` for a mapping
/// assumed to be a closed convex process.
pub fn convex_process_norm<T: Scalar, M: SetValuedMap<T> + ?Sized>(
    map: &M,
    s: &Settings<T>,
) -> Result<SupEstimate<T>> {
    let n = map.range_region().dim();
    let origin_x = Point::zeros(n);
    let origin_p = Point::zeros(map.domain_region().dim());
    let (pts, _) = ball_samples(s, &origin_x, T::one(), map.range_region())?;
    let (samples, best) = par_argmax(&pts, |x| {
        Some((map.inverse_fiber_dist(x, &origin_p, &s.search), ()))
    });
    Ok(match best {
        Some((i, v, ())) => SupEstimate {
            value: v,
            witness: Some(pts[i].clone()),
            samples,
        },
        None => SupEstimate {
            value: ExtReal::zero(),
            witness: None,
            samples,
        },
    })
}
