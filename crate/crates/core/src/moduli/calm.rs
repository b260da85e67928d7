use rayon::prelude::*;

use super::estimate::{ladder_estimate, par_argmax, ModulusEstimate, RungBest};
use super::fiber::fiber_points;
use super::hemi::ball_samples;
use crate::config::Settings;
use crate::error::Result;
use crate::metric::{Ball, Point};
use crate::scalar::{ExtReal, Scalar};
use crate::setvalued::{check_reference, SetValuedMap};

/// Largest `score(p, x)` over sampled perturbed parameters `p ≠ p̄` in
/// `ball(p̄, r)` and sampled fiber points `x ∈ Θ(p) ∩ ball(x̄, r)`.
pub(crate) fn perturbed_fiber_sup<T, M, F>(
    map: &M,
    s: &Settings<T>,
    r: T,
    score: F,
) -> Result<RungBest<T>>
where
    T: Scalar,
    M: SetValuedMap<T> + ?Sized,
    F: Fn(&Point<T>, &Point<T>) -> ExtReal<T> + Sync + Send,
{
    let (p_ref, x_ref) = map.reference();
    let eta = map.eta();
    let (params, clipped) = ball_samples(s, p_ref, r, map.domain_region())?;
    let params: Vec<Point<T>> = params.into_iter().filter(|p| p.dist(p_ref) > eta).collect();
    let x_ball = Ball::new(x_ref.clone(), r)?;
    let x_clipped = !map.range_region().covers(&x_ball);
    let per_param: Vec<Result<Option<(ExtReal<T>, Point<T>, usize)>>> = params
        .par_iter()
        .map(|p| {
            let xs = fiber_points(map, p, &x_ball, s)?;
            let (n, best) = par_argmax(&xs, |x| Some((score(p, x), ())));
            Ok(best.map(|(i, v, ())| (v, xs[i].clone(), n)))
        })
        .collect();
    let mut samples = 0;
    let mut best: Option<(ExtReal<T>, usize, Point<T>)> = None;
    for (i, res) in per_param.into_iter().enumerate() {
        let Some((v, x, n)) = res? else { continue };
        samples += n;
        if best.as_ref().is_none_or(|(b, _, _)| v > *b) {
            best = Some((v, i, x));
        }
    }
    Ok(match best {
        None => RungBest {
            samples,
            ..RungBest::vacuous()
        },
        Some((v, i, x)) => RungBest {
            samples,
            value: v,
            witness: vec![params[i].clone(), x],
            near_boundary: clipped || x_clipped,
        },
    })
}

/// Ladder estimate of the calmness modulus of a mapping at its reference
/// pair: the supremum of `dist(x, Θ(p̄)) / d(p, p̄)` over `p ≠ p̄` near `p̄`
/// and `x ∈ Θ(p)` near `x̄`.
pub fn mapping_calmness_estimate<T: Scalar, M: SetValuedMap<T> + ?Sized>(
    map: &M,
    s: &Settings<T>,
) -> Result<ModulusEstimate<T>> {
    check_reference(map)?;
    let (p_ref, _) = map.reference();
    let density = s.resolution.density_for(p_ref.dim());
    ladder_estimate("mapping_calmness", &s.ladder, s, density, |r| {
        perturbed_fiber_sup(map, s, r, |p, x| {
            map.fiber_dist(p_ref, x)
                .ratio(ExtReal::Finite(p.dist(p_ref)))
                .unwrap_or(ExtReal::PosInf)
        })
    })
}
