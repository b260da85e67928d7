//! Radius ladders, tolerances and the bundle of settings every estimator takes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{Resolution, SearchConfig};
use crate::scalar::Scalar;

/// Geometric radii `r0 * factor^k`, `k = 0..rungs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct RadiusLadder<T: Scalar> {
    pub r0: T,
    pub factor: T,
    pub rungs: usize,
}

impl<T: Scalar> RadiusLadder<T> {
    pub fn new(r0: T, factor: T, rungs: usize) -> Result<Self> {
        let ladder = Self { r0, factor, rungs };
        ladder.validate()?;
        Ok(ladder)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > T::zero() && self.r0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ladder r0 must be positive, got {}",
                self.r0
            )));
        }
        if !(self.factor > T::zero() && self.factor < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "ladder factor must lie in (0, 1), got {}",
                self.factor
            )));
        }
        if self.rungs < 3 {
            return Err(Error::InvalidParameter(format!(
                "ladder needs at least 3 rungs, got {}",
                self.rungs
            )));
        }
        Ok(())
    }

    pub fn radii(&self) -> Vec<T> {
        let mut r = self.r0;
        (0..self.rungs)
            .map(|_| {
                let out = r;
                r = r * self.factor;
                out
            })
            .collect()
    }

    pub fn smallest(&self) -> T {
        self.r0 * self.factor.powi(self.rungs as i32 - 1)
    }

    pub fn with_r0(&self, r0: T) -> Self {
        Self { r0, ..*self }
    }
}

impl<T: Scalar> Default for RadiusLadder<T> {
    fn default() -> Self {
        Self {
            r0: T::of(0.5),
            factor: T::of(0.5),
            rungs: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Tolerances<T: Scalar> {
    /// Relative agreement of the last two rungs for a finite verdict, and the
    /// per-rung growth that counts towards divergence.
    pub conv: T,
    /// Rung values above this on three consecutive rungs mean divergence.
    pub cap: T,
    /// Relative slack of certificate and threshold comparisons.
    pub cert: T,
    /// Membership tolerance of analytic oracles.
    pub eta: T,
    /// Smallest displacement deficit reported as a semicontinuity failure.
    pub lsc: T,
    /// Decrease quotients at or below this mean a local minimizer.
    pub local_min: T,
    /// Penalty values may dip this far below the reference before a witness
    /// is reported.
    pub exact: T,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            conv: T::of(0.05),
            cap: T::of(1e6),
            cert: T::of(0.10),
            eta: T::of(1e-9),
            lsc: T::of(1e-6),
            local_min: T::of(1e-9),
            exact: T::of(1e-9),
        }
    }
}

/// Everything an estimator needs besides the object it inspects.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Settings<T: Scalar> {
    pub ladder: RadiusLadder<T>,
    pub resolution: Resolution,
    pub search: SearchConfig<T>,
    pub tol: Tolerances<T>,
}

impl<T: Scalar> Default for Settings<T> {
    fn default() -> Self {
        Self {
            ladder: RadiusLadder::default(),
            resolution: Resolution::default(),
            search: SearchConfig::default(),
            tol: Tolerances::default(),
        }
    }
}

impl<T: Scalar> Settings<T> {
    pub fn with_ladder(mut self, ladder: RadiusLadder<T>) -> Self {
        self.ladder = ladder;
        self
    }

    pub fn with_density(mut self, density: usize) -> Self {
        self.resolution.density = Some(density);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_ladder_is_strictly_decreasing() {
        let radii = RadiusLadder::<f64>::default().radii();
        assert_eq!(radii.len(), 8);
        assert_eq!(radii[0], 0.5);
        assert!(radii.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
        assert_eq!(*radii.last().unwrap(), RadiusLadder::<f64>::default().smallest());
    }

    #[test]
    fn ladder_validation() {
        assert!(RadiusLadder::new(0.5, 1.0, 8).is_err());
        assert!(RadiusLadder::new(0.5, 0.5, 2).is_err());
        assert!(RadiusLadder::new(-1.0, 0.5, 4).is_err());
        assert!(RadiusLadder::new(1.0f32, 0.25, 3).is_ok());
    }
}
