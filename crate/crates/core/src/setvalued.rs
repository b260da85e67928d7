//! Set-valued mappings given by fiber-distance oracles, their inverses, and
//! parameterized inclusions `ω ∈ F(p, x)` with the displacement functional.

use std::sync::Arc;

use serde::Serialize;

use crate::config::RadiusLadder;
use crate::error::{Error, Result};
use crate::metric::{nearest_zero, zero_within, Ball, GridSpec, Point, Resolution, SearchConfig, ZeroHit};
use crate::scalar::{ExtReal, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Analytic,
    /// Fiber distances come from a sampled search.
    GridBacked,
}

/// A mapping `Θ : P ⇉ X` with closed values, known through
/// `dist(x, Θ(p))`.
pub trait SetValuedMap<T: Scalar>: Send + Sync {
    fn domain_region(&self) -> &Ball<T>;
    fn range_region(&self) -> &Ball<T>;
    /// `(p̄, x̄)` with `x̄ ∈ Θ(p̄)`.
    fn reference(&self) -> (&Point<T>, &Point<T>);

    /// `dist(x, Θ(p))` without region checks.
    fn fiber_dist(&self, p: &Point<T>, x: &Point<T>) -> ExtReal<T>;

    /// A nonnegative function vanishing exactly on the graph. Inverse images
    /// are located through its zero set, so a cheap residual with the same
    /// zeros may stand in for the true fiber distance.
    fn graph_residual(&self, p: &Point<T>, x: &Point<T>) -> ExtReal<T> {
        self.fiber_dist(p, x)
    }

    /// `dist(p, Θ⁻¹(x))`. The default searches the domain region for zeros
    /// of the graph residual; mappings that know their inverse override it.
    fn inverse_fiber_dist(&self, x: &Point<T>, p: &Point<T>, search: &SearchConfig<T>) -> ExtReal<T> {
        inverse_hit(self, x, p, search).map_or(ExtReal::PosInf, |h| ExtReal::Finite(h.distance))
    }

    /// Whether `dist(p, Θ⁻¹(x)) ≤ radius` up to the search tolerance. Must
    /// agree with [`SetValuedMap::inverse_fiber_dist`].
    fn inverse_within(&self, x: &Point<T>, p: &Point<T>, radius: T, search: &SearchConfig<T>) -> bool {
        zero_within(
            p,
            self.domain_region(),
            |q| self.graph_residual(q, x),
            search,
            self.eta(),
            radius,
        )
    }

    fn oracle_kind(&self) -> OracleKind {
        OracleKind::Analytic
    }

    /// Membership tolerance η.
    fn eta(&self) -> T {
        T::of(crate::metric::ETA_ANALYTIC)
    }
}

impl<T: Scalar, M: SetValuedMap<T> + ?Sized> SetValuedMap<T> for &M {
    fn domain_region(&self) -> &Ball<T> {
        (**self).domain_region()
    }
    fn range_region(&self) -> &Ball<T> {
        (**self).range_region()
    }
    fn reference(&self) -> (&Point<T>, &Point<T>) {
        (**self).reference()
    }
    fn fiber_dist(&self, p: &Point<T>, x: &Point<T>) -> ExtReal<T> {
        (**self).fiber_dist(p, x)
    }
    fn graph_residual(&self, p: &Point<T>, x: &Point<T>) -> ExtReal<T> {
        (**self).graph_residual(p, x)
    }
    fn inverse_fiber_dist(&self, x: &Point<T>, p: &Point<T>, search: &SearchConfig<T>) -> ExtReal<T> {
        (**self).inverse_fiber_dist(x, p, search)
    }
    fn inverse_within(&self, x: &Point<T>, p: &Point<T>, radius: T, search: &SearchConfig<T>) -> bool {
        (**self).inverse_within(x, p, radius, search)
    }
    fn oracle_kind(&self) -> OracleKind {
        (**self).oracle_kind()
    }
    fn eta(&self) -> T {
        (**self).eta()
    }
}

impl<T: Scalar, M: SetValuedMap<T> + ?Sized> SetValuedMap<T> for Box<M> {
    fn domain_region(&self) -> &Ball<T> {
        (**self).domain_region()
    }
    fn range_region(&self) -> &Ball<T> {
        (**self).range_region()
    }
    fn reference(&self) -> (&Point<T>, &Point<T>) {
        (**self).reference()
    }
    fn fiber_dist(&self, p: &Point<T>, x: &Point<T>) -> ExtReal<T> {
        (**self).fiber_dist(p, x)
    }
    fn graph_residual(&self, p: &Point<T>, x: &Point<T>) -> ExtReal<T> {
        (**self).graph_residual(p, x)
    }
    fn inverse_fiber_dist(&self, x: &Point<T>, p: &Point<T>, search: &SearchConfig<T>) -> ExtReal<T> {
        (**self).inverse_fiber_dist(x, p, search)
    }
    fn inverse_within(&self, x: &Point<T>, p: &Point<T>, radius: T, search: &SearchConfig<T>) -> bool {
        (**self).inverse_within(x, p, radius, search)
    }
    fn oracle_kind(&self) -> OracleKind {
        (**self).oracle_kind()
    }
    fn eta(&self) -> T {
        (**self).eta()
    }
}

fn check_region<T: Scalar>(q: &Point<T>, region: &Ball<T>, which: &'static str) -> Result<()> {
    q.check_dim(region.dim())?;
    if region.contains(q) {
        Ok(())
    } else {
        Err(Error::OutOfRegion { which })
    }
}

/// `dist(x, Θ(p))` for `p` and `x` inside the declared regions.
pub fn fiber_distance<T: Scalar, M: SetValuedMap<T> + ?Sized>(
    map: &M,
    p: &Point<T>,
    x: &Point<T>,
) -> Result<ExtReal<T>> {
    check_region(p, map.domain_region(), "domain")?;
    check_region(x, map.range_region(), "range")?;
    Ok(map.fiber_dist(p, x))
}

/// Search for the point of `Θ⁻¹(x)` nearest to `p` inside the domain region.
pub fn inverse_hit<T: Scalar, M: SetValuedMap<T> + ?Sized>(
    map: &M,
    x: &Point<T>,
    p: &Point<T>,
    search: &SearchConfig<T>,
) -> Option<ZeroHit<T>> {
    nearest_zero(
        p,
        map.domain_region(),
        |q| map.graph_residual(q, x),
        search,
        map.eta(),
    )
}

/// `dist(p, Θ⁻¹(x))`, `+∞` when no solution lies in the domain region.
pub fn inverse_distance<T: Scalar, M: SetValuedMap<T> + ?Sized>(
    map: &M,
    x: &Point<T>,
    p: &Point<T>,
    search: &SearchConfig<T>,
) -> Result<ExtReal<T>> {
    check_region(p, map.domain_region(), "domain")?;
    check_region(x, map.range_region(), "range")?;
    Ok(inverse_dist(map, x, p, search))
}

pub(crate) fn inverse_dist<T: Scalar, M: SetValuedMap<T> + ?Sized>(
    map: &M,
    x: &Point<T>,
    p: &Point<T>,
    search: &SearchConfig<T>,
) -> ExtReal<T> {
    map.inverse_fiber_dist(x, p, search)
}

/// Checks that the reference pair lies in the graph.
pub fn check_reference<T: Scalar, M: SetValuedMap<T> + ?Sized>(map: &M) -> Result<()> {
    let (p, x) = map.reference();
    p.check_dim(map.domain_region().dim())?;
    x.check_dim(map.range_region().dim())?;
    match map.fiber_dist(p, x) {
        ExtReal::Finite(d) if d <= map.eta() => Ok(()),
        other => Err(Error::ReferenceNotInGraph(other.to_float().as_f64())),
    }
}

type FiberFn<T> = Arc<dyn Fn(&Point<T>, &Point<T>) -> ExtReal<T> + Send + Sync>;

/// A mapping built from closures.
#[derive(Clone)]
pub struct FnMap<T: Scalar> {
    domain: Ball<T>,
    range: Ball<T>,
    p_ref: Point<T>,
    x_ref: Point<T>,
    fiber: FiberFn<T>,
    residual: Option<FiberFn<T>>,
}

impl<T: Scalar> FnMap<T> {
    pub fn new(
        domain: Ball<T>,
        range: Ball<T>,
        reference: (Point<T>, Point<T>),
        fiber: impl Fn(&Point<T>, &Point<T>) -> ExtReal<T> + Send + Sync + 'static,
    ) -> Result<Self> {
        let map = Self {
            domain,
            range,
            p_ref: reference.0,
            x_ref: reference.1,
            fiber: Arc::new(fiber),
            residual: None,
        };
        check_reference(&map)?;
        Ok(map)
    }

    pub fn with_residual(
        mut self,
        residual: impl Fn(&Point<T>, &Point<T>) -> ExtReal<T> + Send + Sync + 'static,
    ) -> Self {
        self.residual = Some(Arc::new(residual));
        self
    }

    /// Same mapping around another graph point.
    pub fn at(&self, p: Point<T>, x: Point<T>) -> Result<Self> {
        let mut out = self.clone();
        out.p_ref = p;
        out.x_ref = x;
        check_reference(&out)?;
        Ok(out)
    }
}

impl<T: Scalar> SetValuedMap<T> for FnMap<T> {
    fn domain_region(&self) -> &Ball<T> {
        &self.domain
    }
    fn range_region(&self) -> &Ball<T> {
        &self.range
    }
    fn reference(&self) -> (&Point<T>, &Point<T>) {
        (&self.p_ref, &self.x_ref)
    }
    fn fiber_dist(&self, p: &Point<T>, x: &Point<T>) -> ExtReal<T> {
        (self.fiber)(p, x)
    }
    fn graph_residual(&self, p: &Point<T>, x: &Point<T>) -> ExtReal<T> {
        match &self.residual {
            Some(r) => r(p, x),
            None => (self.fiber)(p, x),
        }
    }
}

/// A mapping known only through sampled graph points `(pᵢ, xᵢ)`. The fiber
/// at `p` is the set of sampled `xᵢ` whose `pᵢ` lies within `p_tol` of `p`.
#[derive(Clone)]
pub struct GraphSampleMap<T: Scalar> {
    domain: Ball<T>,
    range: Ball<T>,
    reference: (Point<T>, Point<T>),
    graph: Vec<(Point<T>, Point<T>)>,
    p_tol: T,
}

impl<T: Scalar> GraphSampleMap<T> {
    pub fn new(
        domain: Ball<T>,
        range: Ball<T>,
        reference: (Point<T>, Point<T>),
        graph: Vec<(Point<T>, Point<T>)>,
        p_tol: T,
    ) -> Result<Self> {
        let map = Self {
            domain,
            range,
            reference,
            graph,
            p_tol,
        };
        check_reference(&map)?;
        Ok(map)
    }

    /// Samples `p ↦ Θ(p)` on a grid of the domain, given a routine listing a
    /// few points of each fiber.
    pub fn from_grid(
        grid: &GridSpec<T>,
        range: Ball<T>,
        reference: (Point<T>, Point<T>),
        fiber_points: impl Fn(&Point<T>) -> Vec<Point<T>>,
    ) -> Result<Self> {
        let mut graph = vec![reference.clone()];
        for p in grid.points()? {
            for x in fiber_points(&p) {
                graph.push((p.clone(), x));
            }
        }
        Self::new(grid.region.clone(), range, reference, graph, grid.step() / T::of(2.0))
    }
}

impl<T: Scalar> SetValuedMap<T> for GraphSampleMap<T> {
    fn domain_region(&self) -> &Ball<T> {
        &self.domain
    }
    fn range_region(&self) -> &Ball<T> {
        &self.range
    }
    fn reference(&self) -> (&Point<T>, &Point<T>) {
        (&self.reference.0, &self.reference.1)
    }
    fn fiber_dist(&self, p: &Point<T>, x: &Point<T>) -> ExtReal<T> {
        self.graph
            .iter()
            .filter(|(gp, _)| gp.dist(p) <= self.p_tol)
            .map(|(_, gx)| ExtReal::Finite(gx.dist(x)))
            .fold(ExtReal::PosInf, ExtReal::min)
    }
    fn oracle_kind(&self) -> OracleKind {
        OracleKind::GridBacked
    }
    fn eta(&self) -> T {
        self.p_tol
    }
}

/// `Θ⁻¹ : X ⇉ P`. Its fiber distances are inverse-image searches of the
/// parent; inverting again gives back the parent's oracle.
#[derive(Clone)]
pub struct InverseView<M, T: Scalar> {
    parent: M,
    search: SearchConfig<T>,
}

impl<T: Scalar, M: SetValuedMap<T>> InverseView<M, T> {
    pub fn new(parent: M, search: &SearchConfig<T>) -> Self {
        Self {
            parent,
            search: *search,
        }
    }

    pub fn parent(&self) -> &M {
        &self.parent
    }
}

impl<T: Scalar, M: SetValuedMap<T>> SetValuedMap<T> for InverseView<M, T> {
    fn domain_region(&self) -> &Ball<T> {
        self.parent.range_region()
    }
    fn range_region(&self) -> &Ball<T> {
        self.parent.domain_region()
    }
    fn reference(&self) -> (&Point<T>, &Point<T>) {
        let (p, x) = self.parent.reference();
        (x, p)
    }
    fn fiber_dist(&self, x: &Point<T>, p: &Point<T>) -> ExtReal<T> {
        inverse_dist(&self.parent, x, p, &self.search)
    }
    fn graph_residual(&self, x: &Point<T>, p: &Point<T>) -> ExtReal<T> {
        self.parent.graph_residual(p, x)
    }
    fn inverse_fiber_dist(&self, p: &Point<T>, x: &Point<T>, _: &SearchConfig<T>) -> ExtReal<T> {
        self.parent.fiber_dist(p, x)
    }
    fn inverse_within(&self, p: &Point<T>, x: &Point<T>, radius: T, _: &SearchConfig<T>) -> bool {
        self.parent.fiber_dist(p, x).at_most(radius)
    }
    fn oracle_kind(&self) -> OracleKind {
        OracleKind::GridBacked
    }
    fn eta(&self) -> T {
        self.parent.eta()
    }
}

/// A parameterized inclusion `ω ∈ F(p, x)` with `F : P × X ⇉ Y`.
pub trait Inclusion<T: Scalar>: Send + Sync {
    fn parameter_region(&self) -> &Ball<T>;
    fn state_region(&self) -> &Ball<T>;
    fn value_region(&self) -> &Ball<T>;
    /// `(p̄, x̄)` with `x̄ ∈ R(p̄)`.
    fn reference(&self) -> (&Point<T>, &Point<T>);
    fn omega(&self) -> &Point<T>;

    /// `dist(y, F(p, x))`.
    fn value_dist(&self, p: &Point<T>, x: &Point<T>, y: &Point<T>) -> ExtReal<T>;

    /// `disp(p, x) = dist(ω, F(p, x))`.
    fn disp(&self, p: &Point<T>, x: &Point<T>) -> ExtReal<T> {
        self.value_dist(p, x, self.omega())
    }

    fn eta(&self) -> T {
        T::of(crate::metric::ETA_ANALYTIC)
    }
}

impl<T: Scalar, I: Inclusion<T> + ?Sized> Inclusion<T> for &I {
    fn parameter_region(&self) -> &Ball<T> {
        (**self).parameter_region()
    }
    fn state_region(&self) -> &Ball<T> {
        (**self).state_region()
    }
    fn value_region(&self) -> &Ball<T> {
        (**self).value_region()
    }
    fn reference(&self) -> (&Point<T>, &Point<T>) {
        (**self).reference()
    }
    fn omega(&self) -> &Point<T> {
        (**self).omega()
    }
    fn value_dist(&self, p: &Point<T>, x: &Point<T>, y: &Point<T>) -> ExtReal<T> {
        (**self).value_dist(p, x, y)
    }
    fn disp(&self, p: &Point<T>, x: &Point<T>) -> ExtReal<T> {
        (**self).disp(p, x)
    }
    fn eta(&self) -> T {
        (**self).eta()
    }
}

impl<T: Scalar, I: Inclusion<T> + ?Sized> Inclusion<T> for Box<I> {
    fn parameter_region(&self) -> &Ball<T> {
        (**self).parameter_region()
    }
    fn state_region(&self) -> &Ball<T> {
        (**self).state_region()
    }
    fn value_region(&self) -> &Ball<T> {
        (**self).value_region()
    }
    fn reference(&self) -> (&Point<T>, &Point<T>) {
        (**self).reference()
    }
    fn omega(&self) -> &Point<T> {
        (**self).omega()
    }
    fn value_dist(&self, p: &Point<T>, x: &Point<T>, y: &Point<T>) -> ExtReal<T> {
        (**self).value_dist(p, x, y)
    }
    fn disp(&self, p: &Point<T>, x: &Point<T>) -> ExtReal<T> {
        (**self).disp(p, x)
    }
    fn eta(&self) -> T {
        (**self).eta()
    }
}

type ValueFn<T> = Arc<dyn Fn(&Point<T>, &Point<T>, &Point<T>) -> ExtReal<T> + Send + Sync>;

/// An inclusion built from a closure computing `dist(y, F(p, x))`.
#[derive(Clone)]
pub struct FnInclusion<T: Scalar> {
    params: Ball<T>,
    states: Ball<T>,
    values: Ball<T>,
    p_ref: Point<T>,
    x_ref: Point<T>,
    omega: Point<T>,
    value: ValueFn<T>,
}

impl<T: Scalar> FnInclusion<T> {
    pub fn new(
        params: Ball<T>,
        states: Ball<T>,
        values: Ball<T>,
        reference: (Point<T>, Point<T>),
        omega: Point<T>,
        value: impl Fn(&Point<T>, &Point<T>, &Point<T>) -> ExtReal<T> + Send + Sync + 'static,
    ) -> Result<Self> {
        let inc = Self {
            params,
            states,
            values,
            p_ref: reference.0,
            x_ref: reference.1,
            omega,
            value: Arc::new(value),
        };
        inc.p_ref.check_dim(inc.params.dim())?;
        inc.x_ref.check_dim(inc.states.dim())?;
        inc.omega.check_dim(inc.values.dim())?;
        match inc.disp(&inc.p_ref, &inc.x_ref) {
            ExtReal::Finite(d) if d <= inc.eta() => Ok(inc),
            other => Err(Error::ReferenceNotInGraph(other.to_float().as_f64())),
        }
    }
}

impl<T: Scalar> Inclusion<T> for FnInclusion<T> {
    fn parameter_region(&self) -> &Ball<T> {
        &self.params
    }
    fn state_region(&self) -> &Ball<T> {
        &self.states
    }
    fn value_region(&self) -> &Ball<T> {
        &self.values
    }
    fn reference(&self) -> (&Point<T>, &Point<T>) {
        (&self.p_ref, &self.x_ref)
    }
    fn omega(&self) -> &Point<T> {
        &self.omega
    }
    fn value_dist(&self, p: &Point<T>, x: &Point<T>, y: &Point<T>) -> ExtReal<T> {
        (self.value)(p, x, y)
    }
}

/// `disp(p, x)` for a point of the declared product region.
pub fn displacement<T: Scalar, I: Inclusion<T> + ?Sized>(
    inc: &I,
    p: &Point<T>,
    x: &Point<T>,
) -> Result<ExtReal<T>> {
    check_region(p, inc.parameter_region(), "parameter")?;
    check_region(x, inc.state_region(), "state")?;
    Ok(inc.disp(p, x))
}

/// The solution mapping `R(p) = {x : ω ∈ F(p, x)}` as a set-valued map.
pub struct SolutionMap<I, T: Scalar> {
    inc: I,
    search: SearchConfig<T>,
}

impl<T: Scalar, I: Inclusion<T>> SolutionMap<I, T> {
    pub fn new(inc: I, search: &SearchConfig<T>) -> Self {
        Self {
            inc,
            search: *search,
        }
    }

    pub fn inclusion(&self) -> &I {
        &self.inc
    }
}

impl<T: Scalar, I: Inclusion<T>> SetValuedMap<T> for SolutionMap<I, T> {
    fn domain_region(&self) -> &Ball<T> {
        self.inc.parameter_region()
    }
    fn range_region(&self) -> &Ball<T> {
        self.inc.state_region()
    }
    fn reference(&self) -> (&Point<T>, &Point<T>) {
        self.inc.reference()
    }
    fn fiber_dist(&self, p: &Point<T>, x: &Point<T>) -> ExtReal<T> {
        nearest_zero(
            x,
            self.inc.state_region(),
            |z| self.inc.disp(p, z),
            &self.search,
            self.inc.eta(),
        )
        .map_or(ExtReal::PosInf, |h| ExtReal::Finite(h.distance))
    }
    fn graph_residual(&self, p: &Point<T>, x: &Point<T>) -> ExtReal<T> {
        self.inc.disp(p, x)
    }
    fn oracle_kind(&self) -> OracleKind {
        OracleKind::GridBacked
    }
    fn eta(&self) -> T {
        self.inc.eta()
    }
}

/// The section `x ↦ F(p̄, x)` as a mapping `X ⇉ Y` referenced at `(x̄, ω)`.
pub struct SectionMap<I> {
    inc: I,
}

impl<I> SectionMap<I> {
    pub fn new(inc: I) -> Self {
        Self { inc }
    }
}

impl<T: Scalar, I: Inclusion<T>> SetValuedMap<T> for SectionMap<I> {
    fn domain_region(&self) -> &Ball<T> {
        self.inc.state_region()
    }
    fn range_region(&self) -> &Ball<T> {
        self.inc.value_region()
    }
    fn reference(&self) -> (&Point<T>, &Point<T>) {
        (self.inc.reference().1, self.inc.omega())
    }
    fn fiber_dist(&self, x: &Point<T>, y: &Point<T>) -> ExtReal<T> {
        self.inc.value_dist(self.inc.reference().0, x, y)
    }
    fn eta(&self) -> T {
        self.inc.eta()
    }
}

/// Outcome of [`lsc_probe`].
#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "T: Scalar"))]
pub struct LscReport<T: Scalar> {
    pub probe: Point<T>,
    pub value_at_probe: ExtReal<T>,
    /// `(radius, min of disp(·, x) over the sampled ball)`.
    pub per_rung: Vec<(T, ExtReal<T>)>,
    /// A sampled parameter where the displacement stays below the probe
    /// value at the smallest rung.
    pub violation: Option<Point<T>>,
}

/// Probes lower semicontinuity of `p ↦ disp(p, x)` at `p̂`.
///
/// `lim inf` is read off the ladder: a violation is flagged when the deficit
/// `disp(p̂, x) − m_k` exceeds `tol` at the smallest rung and has not shrunk
/// by more than 10% since the previous rung. A continuous displacement has a
/// deficit that vanishes with the radius; a jump keeps it constant.
pub fn lsc_probe<T: Scalar, I: Inclusion<T> + ?Sized>(
    inc: &I,
    x: &Point<T>,
    p_hat: &Point<T>,
    ladder: &RadiusLadder<T>,
    resolution: &Resolution,
    tol: T,
) -> Result<LscReport<T>> {
    ladder.validate()?;
    p_hat.check_dim(inc.parameter_region().dim())?;
    x.check_dim(inc.state_region().dim())?;
    let at_probe = inc.disp(p_hat, x);
    let mut per_rung = Vec::with_capacity(ladder.rungs);
    let mut argmins = Vec::with_capacity(ladder.rungs);
    for r in ladder.radii() {
        let grid = resolution.over(Ball::new(p_hat.clone(), r)?);
        let mut best = ExtReal::PosInf;
        let mut arg = None;
        for q in grid.points()? {
            let v = inc.disp(&q, x);
            if v < best {
                best = v;
                arg = Some(q);
            }
        }
        per_rung.push((r, best));
        argmins.push(arg);
    }
    let deficit = |v: ExtReal<T>| match (at_probe, v) {
        (ExtReal::Finite(a), ExtReal::Finite(m)) => a - m,
        (ExtReal::PosInf, ExtReal::Finite(_)) => T::infinity(),
        _ => T::zero(),
    };
    let k = per_rung.len();
    let last = deficit(per_rung[k - 1].1);
    let prev = deficit(per_rung[k - 2].1);
    let persistent = last > tol && last >= T::of(0.9) * prev;
    let violation = if persistent {
        argmins[k - 1].clone()
    } else {
        None
    };
    Ok(LscReport {
        probe: p_hat.clone(),
        value_at_probe: at_probe,
        per_rung,
        violation,
    })
}
