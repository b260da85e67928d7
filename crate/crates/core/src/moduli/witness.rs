use serde::{Deserialize, Serialize};

use super::estimate::par_argmax;
use super::hemi::ball_samples;
use crate::config::Settings;
use crate::error::{Error, Result};
use crate::metric::{Point, Resolution};
use crate::scalar::{ExtReal, Scalar};
use crate::setvalued::SetValuedMap;

const PAIR_DENSITY: usize = 17;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularityMode {
    /// `x` ranges over a ball around `x̄`.
    Local,
    /// `x` ranges over the enlargement of the whole fiber `Θ(p̄)`.
    Uniform,
}

/// A sampled pair violating `dist(p, Θ⁻¹(x)) ≤ κ dist(x, Θ(p))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
pub struct MetricRegularityWitness<T: Scalar> {
    pub p: Point<T>,
    pub x: Point<T>,
    pub radius: T,
    /// `dist(p, Θ⁻¹(x))`.
    pub lhs: T,
    /// `dist(x, Θ(p))`.
    pub rhs: T,
}

/// Looks for a sampled pair `(p, x)` near the reference pair violating the
/// metric regularity inequality with constant `kappa` by more than the
/// convergence tolerance. Rungs are scanned from the smallest radius up and
/// the worst violation of the first offending rung is returned.
pub fn metric_regularity_witness_search<T: Scalar, M: SetValuedMap<T> + ?Sized>(
    map: &M,
    kappa: T,
    mode: RegularityMode,
    s: &Settings<T>,
) -> Result<Option<MetricRegularityWitness<T>>> {
    if !(kappa > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "kappa must be positive, got {kappa}"
        )));
    }
    s.ladder.validate()?;
    let (p_ref, x_ref) = map.reference();
    let eta = map.eta();
    let pair = Settings {
        resolution: Resolution {
            density: Some(s.resolution.density_for(p_ref.dim()).min(PAIR_DENSITY)),
            ..s.resolution
        },
        ..*s
    };
    let x_pair = Settings {
        resolution: Resolution {
            density: Some(s.resolution.density_for(x_ref.dim()).min(PAIR_DENSITY)),
            ..s.resolution
        },
        ..*s
    };
    let bound = kappa * (T::one() + s.tol.conv);
    let range_lattice = match mode {
        RegularityMode::Uniform => {
            let region = map.range_region();
            s.resolution.over(region.clone()).points()?
        }
        RegularityMode::Local => Vec::new(),
    };
    for r in s.ladder.radii().into_iter().rev() {
        let (ps, _) = ball_samples(&pair, p_ref, r, map.domain_region())?;
        let xs = match mode {
            RegularityMode::Local => ball_samples(&x_pair, x_ref, r, map.range_region())?.0,
            RegularityMode::Uniform => range_lattice
                .iter()
                .filter(|x| map.fiber_dist(p_ref, x).at_most(r + eta))
                .cloned()
                .collect(),
        };
        let pairs: Vec<(usize, usize)> = (0..ps.len())
            .flat_map(|i| (0..xs.len()).map(move |j| (i, j)))
            .collect();
        let (_, best) = par_argmax(&pairs, |&(i, j)| {
            let (p, x) = (&ps[i], &xs[j]);
            let rhs = map.fiber_dist(p, x).finite()?;
            if map.inverse_within(x, p, (bound * rhs).max(eta), &s.search) {
                return None;
            }
            let lhs = map.inverse_fiber_dist(x, p, &s.search).finite()?;
            if lhs <= eta || lhs <= bound * rhs {
                return None;
            }
            let ratio = if rhs > T::zero() {
                ExtReal::Finite(lhs / rhs)
            } else {
                ExtReal::PosInf
            };
            Some((ratio, (lhs, rhs)))
        });
        if let Some((k, _, (lhs, rhs))) = best {
            let (i, j) = pairs[k];
            return Ok(Some(MetricRegularityWitness {
                p: ps[i].clone(),
                x: xs[j].clone(),
                radius: r,
                lhs,
                rhs,
            }));
        }
    }
    Ok(None)
}
