use serde::Serialize;

use super::estimate::par_argmax;
use super::fiber::fiber_points;
use crate::config::Settings;
use crate::error::{Error, Result};
use crate::metric::{Ball, Point, Resolution};
use crate::scalar::{ExtReal, Scalar};
use crate::setvalued::{check_reference, SetValuedMap};

const ANCHOR_DENSITY: usize = 17;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
pub struct OpennessViolation<T: Scalar> {
    pub x: Point<T>,
    pub r: T,
    /// `dist(p̄, Θ⁻¹(x))`, larger than `r`.
    pub inverse_distance: ExtReal<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
pub struct OpennessReport<T: Scalar> {
    pub a: T,
    pub delta_tilde: T,
    pub holds: bool,
    pub checked: usize,
    pub violation: Option<OpennessViolation<T>>,
}

/// Unit directions used to step off the fiber: the coordinate axes and, in
/// low dimension, the diagonals.
fn directions<T: Scalar>(n: usize) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    for i in 0..n {
        for sgn in [1.0, -1.0] {
            let mut u = vec![T::zero(); n];
            u[i] = T::of(sgn);
            out.push(u);
        }
    }
    if (2..=3).contains(&n) {
        let norm = T::of(n as f64).sqrt();
        for mask in 0..(1usize << n) {
            out.push(
                (0..n)
                    .map(|i| T::of(if mask >> i & 1 == 1 { -1.0 } else { 1.0 }) / norm)
                    .collect(),
            );
        }
    }
    out
}

/// Checks `Θ(B(p̄, r)) ⊇ B(Θ(p̄) ∩ B(x̄, δ̃), a r)` on samples: points `x`
/// within `a r` of sampled points of `Θ(p̄) ∩ B(x̄, δ̃)` must have a preimage
/// within `r` of `p̄`. Radii `r = 0.95 δ̃ 2^{-j}` are scanned from the
/// smallest up and the first offending radius is reported.
pub fn openness_check<T: Scalar, M: SetValuedMap<T> + ?Sized>(
    map: &M,
    a: T,
    delta_tilde: T,
    s: &Settings<T>,
) -> Result<OpennessReport<T>> {
    if !(a > T::zero() && delta_tilde > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "openness needs a > 0 and delta > 0, got a = {a}, delta = {delta_tilde}"
        )));
    }
    check_reference(map)?;
    let (p_ref, x_ref) = map.reference();
    let anchors_settings = Settings {
        resolution: Resolution {
            density: Some(s.resolution.density_for(x_ref.dim()).min(ANCHOR_DENSITY)),
            ..s.resolution
        },
        ..*s
    };
    let anchors = fiber_points(
        map,
        p_ref,
        &Ball::new(x_ref.clone(), delta_tilde)?,
        &anchors_settings,
    )?;
    let dirs = directions::<T>(x_ref.dim());
    let slack = T::one() + s.tol.conv;
    let radii: Vec<T> = (0..s.ladder.rungs)
        .map(|j| T::of(0.95) * delta_tilde * T::of(0.5).powi(j as i32))
        .collect();
    let mut checked = 0;
    for &r in radii.iter().rev() {
        let mut xs = Vec::new();
        for z in &anchors {
            for u in &dirs {
                for step in [a * r, a * r / T::of(2.0)] {
                    let x = z.offset(u, step);
                    if map.range_region().contains(&x) {
                        xs.push(x);
                    }
                }
            }
        }
        let (_, worst) = par_argmax(&xs, |x| {
            let reach = r * slack + map.eta();
            if map.inverse_within(x, p_ref, reach, &s.search) {
                return None;
            }
            let d = map.inverse_fiber_dist(x, p_ref, &s.search);
            (!d.at_most(reach)).then_some((d, ()))
        });
        checked += xs.len();
        if let Some((i, d, ())) = worst {
            return Ok(OpennessReport {
                a,
                delta_tilde,
                holds: false,
                checked,
                violation: Some(OpennessViolation {
                    x: xs[i].clone(),
                    r,
                    inverse_distance: d,
                }),
            });
        }
    }
    Ok(OpennessReport {
        a,
        delta_tilde,
        holds: true,
        checked,
        violation: None,
    })
}
