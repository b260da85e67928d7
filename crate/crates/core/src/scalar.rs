//! Scalar abstraction and the extended real line.

use std::cmp::Ordering;
use std::fmt::{self, Debug, Display};
use std::ops::{Add, Mul};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Floating point types the estimators can run on.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` constant. Panics only for values that do not fit,
    /// which cannot happen for the constants used in this crate.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// A value of the extended real line.
///
/// Infinities are distinguished variants rather than IEEE infinities so that
/// the empty-set convention `dist(p, ∅) = +∞` survives arithmetic exactly.
/// Variant order gives the natural order `-∞ < finite < +∞`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum ExtReal<T> {
    NegInf,
    Finite(T),
    PosInf,
}

impl<T: Scalar> ExtReal<T> {
    pub fn zero() -> Self {
        ExtReal::Finite(T::zero())
    }

    /// Maps IEEE infinities onto the distinguished variants. NaN maps to `+∞`,
    /// which is the conservative choice for a distance.
    pub fn from_float(v: T) -> Self {
        if v.is_nan() || v == T::infinity() {
            ExtReal::PosInf
        } else if v == T::neg_infinity() {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(v)
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_pos_inf(&self) -> bool {
        matches!(self, ExtReal::PosInf)
    }

    pub fn finite(self) -> Option<T> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Lossy conversion for plotting and logging.
    pub fn to_float(self) -> T {
        match self {
            ExtReal::NegInf => T::neg_infinity(),
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => T::infinity(),
        }
    }

    /// `self <= bound` with a finite bound.
    pub fn at_most(self, bound: T) -> bool {
        self <= ExtReal::Finite(bound)
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// Multiplication by a nonnegative finite factor. `0 · ∞` is taken as
    /// `∞`, matching the use of penalty terms where a positive level meets an
    /// infeasible point.
    pub fn scale(self, factor: T) -> Self {
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(v * factor),
            inf => inf,
        }
    }

    /// Ratio of two nonnegative extended values with `x / ∞ = 0` and
    /// `∞ / finite = ∞`. Returns `None` for `∞ / ∞` and for a zero
    /// denominator.
    pub fn ratio(self, den: Self) -> Option<Self> {
        match (self, den) {
            (_, ExtReal::Finite(d)) if d <= T::zero() => None,
            (ExtReal::Finite(n), ExtReal::Finite(d)) => Some(ExtReal::Finite(n / d)),
            (ExtReal::PosInf, ExtReal::Finite(_)) => Some(ExtReal::PosInf),
            (ExtReal::Finite(_), ExtReal::PosInf) => Some(ExtReal::zero()),
            _ => None,
        }
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }
}

impl<T: Scalar> Add for ExtReal<T> {
    type Output = ExtReal<T>;

    /// `+∞ + -∞` is not meaningful; it resolves to `+∞` which is what the
    /// penalty code needs (an infeasible point never beats a feasible one).
    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (ExtReal::PosInf, _) | (_, ExtReal::PosInf) => ExtReal::PosInf,
            (ExtReal::NegInf, _) | (_, ExtReal::NegInf) => ExtReal::NegInf,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
        }
    }
}

impl<T: Scalar> Mul<T> for ExtReal<T> {
    type Output = ExtReal<T>;

    fn mul(self, rhs: T) -> Self {
        self.scale(rhs)
    }
}

impl<T: Scalar> From<T> for ExtReal<T> {
    fn from(v: T) -> Self {
        ExtReal::from_float(v)
    }
}

impl<T: Display> Display for ExtReal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInf => write!(f, "inf"),
        }
    }
}

impl<T: Serialize> Serialize for ExtReal<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::NegInf => s.serialize_str("-inf"),
            ExtReal::Finite(v) => v.serialize(s),
            ExtReal::PosInf => s.serialize_str("inf"),
        }
    }
}

impl<'de, T: Scalar> Deserialize<'de> for ExtReal<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr<T> {
            Num(T),
            Str(String),
        }
        match Repr::<T>::deserialize(d)? {
            Repr::Num(v) => Ok(ExtReal::Finite(v)),
            Repr::Str(s) => match s.as_str() {
                "inf" | "+inf" => Ok(ExtReal::PosInf),
                "-inf" => Ok(ExtReal::NegInf),
                other => Err(serde::de::Error::custom(format!(
                    "expected number, \"inf\" or \"-inf\", got {other:?}"
                ))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_places_infinities_at_the_ends() {
        let a: ExtReal<f64> = ExtReal::Finite(1e300);
        assert!(ExtReal::NegInf < a);
        assert!(a < ExtReal::PosInf);
        assert!(ExtReal::Finite(1.0) < ExtReal::Finite(2.0));
    }

    #[test]
    fn infinity_propagates_through_arithmetic() {
        let inf: ExtReal<f64> = ExtReal::PosInf;
        assert_eq!(inf + ExtReal::Finite(-5.0), ExtReal::PosInf);
        assert_eq!(inf * 0.5, ExtReal::PosInf);
        assert_eq!(ExtReal::Finite(2.0).ratio(inf), Some(ExtReal::Finite(0.0)));
        assert_eq!(inf.ratio(ExtReal::Finite(3.0)), Some(ExtReal::PosInf));
        assert_eq!(ExtReal::Finite(1.0).ratio(ExtReal::Finite(0.0)), None);
    }

    #[test]
    fn json_round_trip_keeps_infinity_distinct() {
        let v: Vec<ExtReal<f64>> = vec![ExtReal::Finite(0.25), ExtReal::PosInf, ExtReal::NegInf];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[0.25,"inf","-inf"]"#);
        let back: Vec<ExtReal<f64>> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
