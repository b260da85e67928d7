use std::sync::Arc;

use super::grid::GridSpec;
use super::point::{Ball, Point};
use crate::error::{Error, Result};
use crate::scalar::{ExtReal, Scalar};

/// Membership tolerance for analytic oracles.
pub const ETA_ANALYTIC: f64 = 1e-9;

pub type Membership<T> = Arc<dyn Fn(&Point<T>) -> bool + Send + Sync>;
pub type DistanceFn<T> = Arc<dyn Fn(&Point<T>) -> T + Send + Sync>;

/// A closed set given by callbacks and a bounded region containing every
/// point of the set that matters.
#[derive(Clone)]
pub struct ClosedSetOracle<T: Scalar> {
    membership: Membership<T>,
    distance: Option<DistanceFn<T>>,
    search_region: Ball<T>,
}

impl<T: Scalar> ClosedSetOracle<T> {
    pub fn sampled(
        membership: impl Fn(&Point<T>) -> bool + Send + Sync + 'static,
        search_region: Ball<T>,
    ) -> Self {
        Self {
            membership: Arc::new(membership),
            distance: None,
            search_region,
        }
    }

    /// An oracle with a closed-form distance; membership is `distance <= η`.
    pub fn analytic(
        distance: impl Fn(&Point<T>) -> T + Send + Sync + 'static,
        search_region: Ball<T>,
    ) -> Self {
        let distance: DistanceFn<T> = Arc::new(distance);
        let d = distance.clone();
        Self {
            membership: Arc::new(move |q| d(q) <= T::of(ETA_ANALYTIC)),
            distance: Some(distance),
            search_region,
        }
    }

    pub fn with_distance(
        mut self,
        distance: impl Fn(&Point<T>) -> T + Send + Sync + 'static,
    ) -> Self {
        self.distance = Some(Arc::new(distance));
        self
    }

    pub fn is_member(&self, q: &Point<T>) -> bool {
        (self.membership)(q)
    }

    pub fn has_analytic_distance(&self) -> bool {
        self.distance.is_some()
    }

    pub fn search_region(&self) -> &Ball<T> {
        &self.search_region
    }

    pub fn dim(&self) -> usize {
        self.search_region.dim()
    }

    /// Membership tolerance: fixed for analytic oracles, half a grid step
    /// for sampled ones.
    pub fn eta(&self, grid: &GridSpec<T>) -> T {
        if self.distance.is_some() {
            T::of(ETA_ANALYTIC)
        } else {
            grid.step() / T::of(2.0)
        }
    }
}

fn check_query<T: Scalar>(q: &Point<T>, set: &ClosedSetOracle<T>, grid: &GridSpec<T>) -> Result<()> {
    q.check_dim(set.dim())?;
    grid.region.center.check_dim(set.dim())
}

/// Grid members nearest to `q`, ties to the lowest grid index.
fn nearest_member<T: Scalar>(
    q: &Point<T>,
    set: &ClosedSetOracle<T>,
    grid: &GridSpec<T>,
) -> Result<Option<(T, Point<T>)>> {
    let mut best: Option<(T, Point<T>)> = None;
    for g in grid.points()? {
        if !set.is_member(&g) {
            continue;
        }
        let d = q.dist(&g);
        if best.as_ref().is_none_or(|(b, _)| d < *b) {
            best = Some((d, g));
        }
    }
    Ok(best)
}

/// `dist(q, S)`, with `+∞` when the set has no sampled member.
pub fn distance_to_set<T: Scalar>(
    q: &Point<T>,
    set: &ClosedSetOracle<T>,
    grid: &GridSpec<T>,
) -> Result<ExtReal<T>> {
    check_query(q, set, grid)?;
    if let Some(dist) = &set.distance {
        // The grid still has to be valid even though the analytic branch
        // does not walk it.
        if grid.density < 2 {
            return Err(Error::EmptyGrid);
        }
        return Ok(ExtReal::from_float(dist(q)));
    }
    if set.is_member(q) {
        return Ok(ExtReal::zero());
    }
    Ok(match nearest_member(q, set, grid)? {
        Some((d, _)) => ExtReal::Finite(d),
        None => ExtReal::PosInf,
    })
}

/// Whether `q` lies in the closed `r`-enlargement of `S`.
pub fn enlargement_contains<T: Scalar>(
    q: &Point<T>,
    set: &ClosedSetOracle<T>,
    r: T,
    grid: &GridSpec<T>,
) -> Result<bool> {
    if r < T::zero() {
        return Err(Error::InvalidParameter(format!(
            "enlargement radius must be nonnegative, got {r}"
        )));
    }
    let d = distance_to_set(q, set, grid)?;
    Ok(d.at_most(r + set.eta(grid)))
}

/// A sampled member of `S` nearest to `q`.
pub fn project_onto_set<T: Scalar>(
    q: &Point<T>,
    set: &ClosedSetOracle<T>,
    grid: &GridSpec<T>,
) -> Result<Point<T>> {
    check_query(q, set, grid)?;
    if set.is_member(q) {
        return Ok(q.clone());
    }
    nearest_member(q, set, grid)?
        .map(|(_, g)| g)
        .ok_or(Error::EmptySetInRegion)
}
