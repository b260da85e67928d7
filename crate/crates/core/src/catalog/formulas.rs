//! Closed-form mappings, inclusions and problems bound by name.

use crate::error::{Error, Result};
use crate::metric::{Ball, Point};
use crate::penalty::ParamProblem;
use crate::scalar::{ExtReal, Scalar};
use crate::setvalued::{FnInclusion, FnMap};

use super::poly::real_roots;

fn ball<T: Scalar>(dim: usize, r: f64) -> Ball<T> {
    Ball {
        center: Point::zeros(dim),
        radius: T::of(r),
    }
}

fn origin<T: Scalar>(dim: usize) -> Point<T> {
    Point::zeros(dim)
}

/// `dist(x, {y : y₁y₂ = c})`.
pub fn hyperbola_distance<T: Scalar>(x: &Point<T>, c: T) -> T {
    let (a, b) = (x.get(0), x.get(1));
    if c == T::zero() {
        return a.abs().min(b.abs());
    }
    // Stationary points (t, c/t) solve t⁴ - a t³ + b c t - c² = 0.
    let quartic = [T::one(), -a, T::zero(), b * c, -c * c];
    let mut ts = real_roots(&quartic);
    ts.extend(real_roots(&[T::of(4.0), T::of(-3.0) * a, T::zero(), b * c]));
    ts.into_iter()
        .filter(|t| *t != T::zero())
        .map(|t| {
            let (u, v) = (t - a, c / t - b);
            (u * u + v * v).sqrt()
        })
        .fold(T::infinity(), T::min)
}

/// `Θ(p₁, p₂) = p₁ + p₂²` for `p₁ ≥ 0`, `p₁ - p₂²` otherwise.
///
/// `|x - Θ(p)|` jumps across `p₁ = 0`, so inverse images are searched
/// through a continuous residual whose zero set is the closure of the graph.
/// Distances to a set and to its closure agree.
pub fn branch_parabola<T: Scalar>() -> Result<FnMap<T>> {
    fn theta<T: Scalar>(p: &Point<T>) -> T {
        let (p1, p2) = (p.get(0), p.get(1));
        if p1 >= T::zero() {
            p1 + p2 * p2
        } else {
            p1 - p2 * p2
        }
    }
    FnMap::new(
        ball(2, 2.0),
        ball(1, 2.0),
        (origin(2), origin(1)),
        |p: &Point<T>, x: &Point<T>| ExtReal::Finite((x.get(0) - theta(p)).abs()),
    )
    .map(|m| {
        m.with_residual(|p: &Point<T>, x: &Point<T>| {
            let (p1, p2, x) = (p.get(0), p.get(1), x.get(0));
            let right = (x - p1 - p2 * p2).abs() + (-p1).max(T::zero());
            let left = (x - p1 + p2 * p2).abs() + p1.max(T::zero());
            ExtReal::Finite(right.min(left))
        })
    })
}

/// `Θ(p) = {x ∈ ℝ² : x₁x₂ = p}`; the graph residual is `|x₁x₂ - p|`.
pub fn hyperbola<T: Scalar>(range_radius: f64) -> Result<FnMap<T>> {
    let domain = (range_radius * range_radius / 2.0).min(2.5).max(0.5);
    Ok(FnMap::new(
        ball(1, domain),
        ball(2, range_radius),
        (origin(1), origin(2)),
        |p, x| ExtReal::Finite(hyperbola_distance(x, p.get(0))),
    )?
    .with_residual(|p: &Point<T>, x: &Point<T>| ExtReal::Finite((x.get(0) * x.get(1) - p.get(0)).abs())))
}

/// `Λ(p) = p₁ + 2p₂`.
pub fn linear_onto<T: Scalar>() -> Result<FnMap<T>> {
    FnMap::new(
        ball(2, 2.0),
        ball(1, 2.0),
        (origin(2), origin(1)),
        |p, x| ExtReal::Finite((x.get(0) - p.get(0) - T::of(2.0) * p.get(1)).abs()),
    )
}

pub fn identity<T: Scalar>() -> Result<FnMap<T>> {
    FnMap::new(
        ball(1, 2.0),
        ball(1, 2.0),
        (origin(1), origin(1)),
        |p, x| ExtReal::Finite((x.get(0) - p.get(0)).abs()),
    )
}

/// `Θ(p) = {p, -p}`.
pub fn cone<T: Scalar>() -> Result<FnMap<T>> {
    FnMap::new(
        ball(1, 2.0),
        ball(1, 2.0),
        (origin(1), origin(1)),
        |p, x| {
            let (p, x) = (p.get(0), x.get(0));
            ExtReal::Finite((x - p).abs().min((x + p).abs()))
        },
    )
}

/// `Θ(p) = {p³}`.
pub fn cubic_map<T: Scalar>() -> Result<FnMap<T>> {
    FnMap::new(
        ball(1, 2.0),
        ball(1, 2.0),
        (origin(1), origin(1)),
        |p, x| ExtReal::Finite((x.get(0) - p.get(0).powi(3)).abs()),
    )
}

/// A scalar inclusion `0 ∈ {f(p, x)}` on `[-2, 2]³`.
pub fn scalar_inclusion<T: Scalar>(
    p_ref: f64,
    f: impl Fn(T, T) -> T + Send + Sync + 'static,
) -> Result<FnInclusion<T>> {
    FnInclusion::new(
        ball(1, 2.0),
        ball(1, 2.0),
        ball(1, 2.0),
        (Point::scalar(T::of(p_ref)), origin(1)),
        origin(1),
        move |p, x, y| ExtReal::Finite((y.get(0) - f(p.get(0), x.get(0))).abs()),
    )
}

/// `F(p, x) = {c p - x}`.
pub fn affine_inclusion<T: Scalar>(c: f64) -> Result<FnInclusion<T>> {
    let c = T::of(c);
    scalar_inclusion(0.0, move |p, x| c * p - x)
}

/// `F(p, x) = {p³ - x}`.
pub fn cubic_inclusion<T: Scalar>() -> Result<FnInclusion<T>> {
    scalar_inclusion(0.0, |p: T, x| p.powi(3) - x)
}

/// `F(p, x) = {0}` for `p ≤ 0` and `{1}` otherwise.
pub fn step_lsc_ok<T: Scalar>() -> Result<FnInclusion<T>> {
    scalar_inclusion(0.0, |p: T, _| if p <= T::zero() { T::zero() } else { T::one() })
}

/// `F(p, x) = {1}` for `p ≤ 0` and `{0}` otherwise.
pub fn step_lsc_bad<T: Scalar>() -> Result<FnInclusion<T>> {
    scalar_inclusion(0.5, |p: T, _| if p <= T::zero() { T::one() } else { T::zero() })
}

/// `min x` subject to `x ∈ [p, ∞)`, written as `0 ∈ {(p - x)⁺}`.
pub fn shift_halfline<T: Scalar>() -> Result<ParamProblem<T>> {
    let constraint = scalar_inclusion(0.0, |p: T, x| (p - x).max(T::zero()))?;
    ParamProblem::new(|x: &Point<T>| ExtReal::Finite(x.get(0)), constraint, T::of(0.5))
}

/// The objective `√(-x)` for `x ≤ 0`, `-√x` for `x > 0`.
pub fn sqrt_objective<T: Scalar>(x: T) -> T {
    if x <= T::zero() {
        (-x).sqrt()
    } else {
        -x.sqrt()
    }
}

/// `min φ(x)` over `R_β(p) = (-∞, |p|^β]`, written as `0 ∈ {(x - |p|^β)⁺}`.
pub fn sqrt_problem<T: Scalar>(beta: f64) -> Result<ParamProblem<T>> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let b = T::of(beta);
    let constraint = scalar_inclusion(0.0, move |p: T, x: T| (x - p.abs().powf(b)).max(T::zero()))?;
    ParamProblem::new(
        |x: &Point<T>| ExtReal::Finite(sqrt_objective(x.get(0))),
        constraint,
        T::of(0.5),
    )
}

/// A parameterization whose perturbed feasible sets are empty:
/// `0 ∈ {|p| + |x|}`.
pub fn empty_param<T: Scalar>() -> Result<ParamProblem<T>> {
    let constraint = scalar_inclusion(0.0, |p: T, x: T| p.abs() + x.abs())?;
    ParamProblem::new(|x: &Point<T>| ExtReal::Finite(x.get(0)), constraint, T::of(0.5))
}
