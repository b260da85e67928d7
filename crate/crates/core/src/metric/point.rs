use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Inline storage covers every space up to dimension four without touching
/// the heap, which is where all the hot loops live.
pub type Coords<T> = SmallVec<[T; 4]>;

/// A point of a finite-dimensional Euclidean space.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
#[serde(try_from = "Vec<T>", into = "Vec<T>")]
pub struct Point<T: Scalar> {
    coords: Coords<T>,
}

impl<T: Scalar> Point<T> {
    pub fn new(coords: impl IntoIterator<Item = T>) -> Result<Self> {
        let coords: Coords<T> = coords.into_iter().collect();
        if coords.is_empty() {
            return Err(Error::ZeroDimension);
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate);
        }
        Ok(Self { coords })
    }

    /// Builds a point without validation. Callers guarantee finiteness.
    pub(crate) fn from_coords(coords: Coords<T>) -> Self {
        debug_assert!(!coords.is_empty());
        Self { coords }
    }

    pub fn scalar(v: T) -> Self {
        Self::from_coords(smallvec::smallvec![v])
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_coords(std::iter::repeat_n(T::zero(), dim.max(1)).collect())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn get(&self, i: usize) -> T {
        self.coords[i]
    }

    pub fn norm(&self) -> T {
        self.coords.iter().fold(T::zero(), |acc, &c| acc + c * c).sqrt()
    }

    /// Euclidean distance, rejecting points of different spaces.
    pub fn distance(&self, other: &Self) -> Result<T> {
        other.check_dim(self.dim())?;
        Ok(self.dist(other))
    }

    /// Euclidean distance for points already known to share a space.
    #[inline]
    pub fn dist(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(other.coords.iter())
            .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b))
            .sqrt()
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            })
        }
    }

    /// `self + t * dir`, coordinate-wise.
    pub fn offset(&self, dir: &[T], t: T) -> Self {
        Self::from_coords(
            self.coords
                .iter()
                .zip(dir.iter())
                .map(|(&c, &d)| c + t * d)
                .collect(),
        )
    }

    /// Point on the segment from `self` to `other` at parameter `t`.
    pub fn lerp(&self, other: &Self, t: T) -> Self {
        Self::from_coords(
            self.coords
                .iter()
                .zip(other.coords.iter())
                .map(|(&a, &b)| a + t * (b - a))
                .collect(),
        )
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.as_f64()).collect()
    }
}

/// Distance on `P × X` used for joint neighbourhoods: the max of the
/// component distances, so that balls are products of balls.
pub fn product_distance<T: Scalar>(a: (&Point<T>, &Point<T>), b: (&Point<T>, &Point<T>)) -> T {
    a.0.dist(b.0).max(a.1.dist(b.1))
}

impl<T: Scalar> TryFrom<Vec<T>> for Point<T> {
    type Error = Error;

    fn try_from(v: Vec<T>) -> Result<Self> {
        Point::new(v)
    }
}

impl<T: Scalar> From<Point<T>> for Vec<T> {
    fn from(p: Point<T>) -> Vec<T> {
        p.coords.into_vec()
    }
}

impl<T: Scalar> fmt::Debug for Point<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords.iter()).finish()
    }
}

impl<T: Scalar> fmt::Display for Point<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Closed ball `{q : d(q, center) <= radius}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Ball<T: Scalar> {
    pub center: Point<T>,
    pub radius: T,
}

impl<T: Scalar> Ball<T> {
    pub fn new(center: Point<T>, radius: T) -> Result<Self> {
        if !radius.is_finite() || radius < T::zero() {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be finite and nonnegative, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Membership with a relative slack of `1e-12` absorbing lattice roundoff.
    pub fn contains(&self, q: &Point<T>) -> bool {
        q.dim() == self.dim() && self.center.dist(q) <= self.radius * (T::one() + T::of(1e-12))
    }

    /// Whether `inner` lies inside this ball.
    pub fn covers(&self, inner: &Ball<T>) -> bool {
        inner.dim() == self.dim()
            && self.center.dist(&inner.center) + inner.radius
                <= self.radius * (T::one() + T::of(1e-12))
    }

    pub fn with_radius(&self, radius: T) -> Self {
        Self {
            center: self.center.clone(),
            radius,
        }
    }

    /// Distance from `q` to the bounding sphere, nonnegative inside.
    pub fn depth(&self, q: &Point<T>) -> T {
        self.radius - self.center.dist(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_empty() {
        assert_eq!(Point::<f64>::new(vec![]), Err(Error::ZeroDimension));
        assert_eq!(
            Point::new(vec![1.0, f64::NAN]),
            Err(Error::NonFiniteCoordinate)
        );
    }

    #[test]
    fn distance_checks_dimension() {
        let a = Point::new(vec![0.0, 0.0]).unwrap();
        let b = Point::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(a.distance(&b).unwrap(), 5.0);
        let c = Point::scalar(1.0);
        assert!(matches!(
            a.distance(&c),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn product_metric_is_max() {
        let p = Point::scalar(0.0);
        let x = Point::new(vec![0.0, 0.0]).unwrap();
        let q = Point::scalar(0.3);
        let y = Point::new(vec![0.0, 0.4]).unwrap();
        assert!((product_distance((&p, &x), (&q, &y)) - 0.4f64).abs() < 1e-15);
    }

    #[test]
    fn closed_ball_contains_boundary() {
        let b = Ball::new(Point::scalar(0.0), 1.0).unwrap();
        assert!(b.contains(&Point::scalar(1.0)));
        assert!(!b.contains(&Point::scalar(1.001)));
    }
}
