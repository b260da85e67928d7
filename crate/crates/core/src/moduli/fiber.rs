use rayon::prelude::*;

use super::hemi::ball_samples;
use crate::config::Settings;
use crate::error::Result;
use crate::metric::{nearest_zero, Ball, Point, Resolution};
use crate::scalar::{ExtReal, Scalar};
use crate::setvalued::SetValuedMap;

const BISECTION_STEPS: usize = 48;
const PROJECTION_DENSITY: usize = 17;

/// Sampled points of `Θ(p) ∩ ball`: lattice members, boundary points found
/// by bisection along lattice edges that cross the fiber boundary, and
/// projections of a coarse lattice onto the fiber.
pub fn fiber_points<T: Scalar, M: SetValuedMap<T> + ?Sized>(
    map: &M,
    p: &Point<T>,
    ball: &Ball<T>,
    s: &Settings<T>,
) -> Result<Vec<Point<T>>> {
    let eta = map.eta();
    let member = |x: &Point<T>| map.graph_residual(p, x).at_most(eta);
    let sample = s.resolution.over(ball.clone()).sample()?;
    let flags: Vec<bool> = sample.points.par_iter().map(&member).collect();
    let mut out: Vec<Point<T>> = sample
        .points
        .iter()
        .zip(&flags)
        .filter(|(_, &m)| m)
        .map(|(x, _)| x.clone())
        .collect();

    if let Some(layout) = &sample.layout {
        let crossings: Vec<(usize, usize)> = layout
            .edges()
            .into_iter()
            .filter(|&(a, b)| flags[a] != flags[b])
            .map(|(a, b)| if flags[a] { (a, b) } else { (b, a) })
            .collect();
        let found: Vec<Point<T>> = crossings
            .par_iter()
            .map(|&(inside, outside)| {
                let (mut a, mut b) = (sample.points[inside].clone(), sample.points[outside].clone());
                // From a point with zero residual, bisect towards the true
                // boundary rather than the edge of the η-enlargement.
                let strict = map.graph_residual(p, &a) == ExtReal::Finite(T::zero());
                let inner = |x: &Point<T>| {
                    if strict {
                        map.graph_residual(p, x) == ExtReal::Finite(T::zero())
                    } else {
                        member(x)
                    }
                };
                for _ in 0..BISECTION_STEPS {
                    let mid = a.lerp(&b, T::of(0.5));
                    if inner(&mid) {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                a
            })
            .collect();
        out.extend(found);
    }

    let coarse = Resolution {
        density: Some(s.resolution.density_for(ball.dim()).min(PROJECTION_DENSITY)),
        ..s.resolution
    };
    let (seeds, _) = ball_samples(
        &Settings {
            resolution: coarse,
            ..*s
        },
        &ball.center,
        ball.radius,
        ball,
    )?;
    let projected: Vec<Option<Point<T>>> = seeds
        .par_iter()
        .map(|q| {
            nearest_zero(q, ball, |x| map.graph_residual(p, x), &s.search, eta)
                .filter(|h| h.exact)
                .map(|h| h.witness)
        })
        .collect();
    out.extend(projected.into_iter().flatten());
    out.retain(|x| ball.contains(x));
    Ok(out)
}
