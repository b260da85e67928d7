//! Distance from a query point to the zero set of a nonnegative function.
//!
//! Every inverse-image distance in this crate reduces to
//! `inf { d(q, z) : f(z) = 0 }` for some residual `f` that vanishes exactly on
//! the set of interest. A flat grid cannot resolve such distances once they
//! are much smaller than the grid step, so the search is a best-first
//! subdivision of cells ordered by their distance to the query. A cell is
//! kept while its sampled residuals are small relative to their spread across
//! the cell; it is accepted once its diameter is below a relative tolerance of
//! its distance to the query. An accepted cell without a member sample is
//! polished by a pattern search that must reach the zero set.
//!
//! The spread test presumes a continuous residual growing at least linearly
//! with the distance to its zero set. Residuals that vanish to higher order
//! (such as `t²`) leave a band of near-zero cells that the search cannot tell
//! apart from true zeros, and jumps look like zero crossings at every scale.
//! Both end in unpolishable cells; after a few of those the nearest one is
//! returned as an unconverged hit.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::point::{Ball, Coords, Point};
use crate::scalar::{ExtReal, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct SearchConfig<T: Scalar> {
    /// Cells per axis in the initial tiling of the region.
    pub seed_density: usize,
    /// Accepted cells have diameter at most `rel_tol` times their distance to
    /// the query.
    pub rel_tol: T,
    /// A cell may contain a zero when its smallest sampled residual is at
    /// most `safety` times the spread of its samples.
    pub safety: T,
    pub max_cells: usize,
    /// Cells smaller than this fraction of the region radius are accepted
    /// regardless of their distance.
    pub floor: T,
}

impl<T: Scalar> Default for SearchConfig<T> {
    fn default() -> Self {
        Self {
            seed_density: 16,
            rel_tol: T::of(1e-3),
            safety: T::of(2.0),
            max_cells: 200_000,
            floor: T::of(1e-12),
        }
    }
}

/// Result of [`nearest_zero`].
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroHit<T: Scalar> {
    pub distance: T,
    pub witness: Point<T>,
    /// The witness itself has residual at most `eta`.
    pub exact: bool,
    /// False when the cell budget ran out before the tolerance was met.
    pub converged: bool,
}

struct Cell<T: Scalar> {
    lower: T,
    seq: usize,
    center: Point<T>,
    half: T,
}

impl<T: Scalar> PartialEq for Cell<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Cell<T> {}

impl<T: Scalar> PartialOrd for Cell<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Cell<T> {
    // Reversed so that BinaryHeap pops the smallest lower bound first; ties
    // go to the earliest cell for reproducibility.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .lower
            .partial_cmp(&self.lower)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn box_distance<T: Scalar>(q: &Point<T>, center: &Point<T>, half: T) -> T {
    q.coords()
        .iter()
        .zip(center.coords())
        .fold(T::zero(), |acc, (&a, &c)| {
            let gap = ((a - c).abs() - half).max(T::zero());
            acc + gap * gap
        })
        .sqrt()
}

/// Sample offsets of a cell in units of its half-width: the centre and the
/// corners, or the face centres above four dimensions.
fn stencil(dim: usize) -> Vec<Coords<f64>> {
    let mut out = vec![Coords::from_elem(0.0, dim)];
    if dim <= 4 {
        for mask in 0..(1usize << dim) {
            out.push(
                (0..dim)
                    .map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 })
                    .collect(),
            );
        }
    } else {
        for i in 0..dim {
            for s in [-1.0, 1.0] {
                let mut c = Coords::from_elem(0.0, dim);
                c[i] = s;
                out.push(c);
            }
        }
    }
    out
}

fn shifted<T: Scalar>(center: &Point<T>, unit: &[f64], half: T) -> Point<T> {
    Point::from_coords(
        center
            .coords()
            .iter()
            .zip(unit)
            .map(|(&c, &u)| c + T::of(u) * half)
            .collect(),
    )
}

/// Searches `region` for the zero of `f` nearest to `query`.
///
/// Returns `None` when no cell of the region can contain a zero, which the
/// callers read as the empty-set distance `+∞`.
pub fn nearest_zero<T, F>(
    query: &Point<T>,
    region: &Ball<T>,
    f: F,
    cfg: &SearchConfig<T>,
    eta: T,
) -> Option<ZeroHit<T>>
where
    T: Scalar,
    F: Fn(&Point<T>) -> ExtReal<T>,
{
    search(query, region, f, cfg, eta, None)
}

/// Decides whether `f` has a zero within `radius` of `query`, with the
/// relative tolerance of the search applied to `radius`. The search stops at
/// the first zero found inside the radius, which makes it much cheaper than
/// [`nearest_zero`] when only the comparison matters. When the budget runs
/// out or the zero set cannot be resolved the answer is `true`.
pub fn zero_within<T, F>(
    query: &Point<T>,
    region: &Ball<T>,
    f: F,
    cfg: &SearchConfig<T>,
    eta: T,
    radius: T,
) -> bool
where
    T: Scalar,
    F: Fn(&Point<T>) -> ExtReal<T>,
{
    search(query, region, f, cfg, eta, Some(radius)).is_some()
}

fn search<T, F>(
    query: &Point<T>,
    region: &Ball<T>,
    f: F,
    cfg: &SearchConfig<T>,
    eta: T,
    horizon: Option<T>,
) -> Option<ZeroHit<T>>
where
    T: Scalar,
    F: Fn(&Point<T>) -> ExtReal<T>,
{
    if f(query).at_most(eta) {
        return Some(ZeroHit {
            distance: T::zero(),
            witness: query.clone(),
            exact: true,
            converged: true,
        });
    }
    let n = region.dim();
    let sqrt_n = T::of(n as f64).sqrt();
    let r = region.radius;
    let s = cfg.seed_density.max(1);
    let half0 = r / T::of(s as f64);
    let floor = cfg.floor * r.max(T::min_positive_value());
    let stencil = stencil(n);
    let children: Vec<Coords<f64>> = (0..(1usize << n))
        .map(|mask| {
            (0..n)
                .map(|i| if mask >> i & 1 == 1 { 0.5 } else { -0.5 })
                .collect()
        })
        .collect();

    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let total = s.pow(n as u32);
    let c = region.center.coords();
    for flat in 0..total {
        let mut rest = flat;
        let coords: Coords<T> = (0..n)
            .map(|i| {
                let k = rest % s;
                rest /= s;
                c[i] - r + T::of((2 * k + 1) as f64) * half0
            })
            .collect();
        let center = Point::from_coords(coords);
        if region.contains(&center) || r == T::zero() {
            heap.push(Cell {
                lower: box_distance(query, &center, half0),
                seq,
                center,
                half: half0,
            });
            seq += 1;
        }
    }

    // Small cells without a member sample are polished by a pattern search;
    // if that stalls the cell is kept as a fallback and the next cells are
    // tried, up to `MAX_STALLS` of them.
    let mut fallback: Option<ZeroHit<T>> = None;
    let mut stalls = 0usize;
    let mut pops = 0usize;
    let moves = pattern(n);
    let scale = |lower: T| horizon.map_or(lower, |h| h.max(lower));
    while let Some(cell) = heap.pop() {
        if horizon.is_some_and(|h| cell.lower > h) {
            return None;
        }
        pops += 1;
        let samples: Vec<(Point<T>, ExtReal<T>)> = stencil
            .iter()
            .map(|u| {
                let p = shifted(&cell.center, u, cell.half);
                let v = f(&p);
                (p, v)
            })
            .collect();
        let lo = samples
            .iter()
            .filter_map(|(p, v)| v.finite().map(|v| (p, v)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal));
        let Some((lo_point, lo)) = lo else { continue };
        let hi = samples
            .iter()
            .map(|(_, v)| *v)
            .fold(ExtReal::NegInf, ExtReal::max);
        let candidate = lo <= eta
            || match hi {
                ExtReal::Finite(hi) => lo <= cfg.safety * (hi - lo),
                _ => true,
            };
        if !candidate {
            continue;
        }
        let diameter = T::of(2.0) * cell.half * sqrt_n;
        // A candidate cell may sit up to `safety` diameters away from the
        // zero set, hence the extra factor.
        let small = diameter * (T::one() + cfg.safety) <= cfg.rel_tol * scale(cell.lower);
        let tiny = diameter <= floor;
        let out_of_budget = pops >= cfg.max_cells;
        let exact_best = samples
            .iter()
            .filter(|(_, v)| v.at_most(eta))
            .map(|(p, _)| (query.dist(p), p))
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        if let Some((d, p)) = exact_best {
            let inside = horizon.is_some_and(|h| d <= h);
            if small || tiny || out_of_budget || inside {
                return Some(ZeroHit {
                    distance: d,
                    witness: p.clone(),
                    exact: true,
                    converged: small || tiny,
                });
            }
        } else if small || tiny || out_of_budget {
            if let Some(p) = polish(
                &f,
                lo_point.clone(),
                lo,
                &cell,
                (cfg.safety + T::one()) * diameter,
                hi.finite().map_or(T::zero(), |hi| (hi - lo) / diameter) / T::of(10.0),
                &moves,
                floor,
                eta,
            ) {
                let d = query.dist(&p);
                if horizon.is_none_or(|h| d <= h * (T::one() + cfg.rel_tol)) {
                    return Some(ZeroHit {
                        distance: d,
                        witness: p,
                        exact: true,
                        converged: !out_of_budget,
                    });
                }
                continue;
            }
            stalls += 1;
            let hit = fallback.get_or_insert_with(|| ZeroHit {
                distance: query.dist(&cell.center),
                witness: cell.center.clone(),
                exact: false,
                converged: !out_of_budget,
            });
            if out_of_budget || stalls >= MAX_STALLS {
                hit.converged = false;
                return fallback;
            }
            continue;
        }
        let half = cell.half / T::of(2.0);
        for u in &children {
            let center = shifted(&cell.center, u, cell.half);
            heap.push(Cell {
                lower: box_distance(query, &center, half),
                seq,
                center,
                half,
            });
            seq += 1;
        }
    }
    fallback
}

/// Failed polishes tolerated before the first fallback is returned.
const MAX_STALLS: usize = 32;

/// Unit moves of the pattern search: the axes and, up to four dimensions,
/// the diagonals.
fn pattern(dim: usize) -> Vec<Coords<f64>> {
    let mut out: Vec<Coords<f64>> = Vec::new();
    for i in 0..dim {
        for s in [-1.0, 1.0] {
            let mut c = Coords::from_elem(0.0, dim);
            c[i] = s;
            out.push(c);
        }
    }
    if dim <= 4 {
        out.extend(stencil(dim).into_iter().skip(1));
    }
    out
}

/// Pattern search for a member point near `start`, confined to the box of
/// half-width `reach` around the cell centre. A move of length `h` is taken
/// only if it lowers the residual by at least `min_gain * h`, so that slow
/// creeping along the zero set does not stall the step reduction. Returns `None` when the step shrinks below `floor`
/// before the residual drops to `eta`.
#[allow(clippy::too_many_arguments)]
fn polish<T: Scalar, F: Fn(&Point<T>) -> ExtReal<T>>(
    f: &F,
    start: Point<T>,
    start_value: T,
    cell: &Cell<T>,
    reach: T,
    min_gain: T,
    moves: &[Coords<f64>],
    floor: T,
    eta: T,
) -> Option<Point<T>> {
    let (mut y, mut v) = (start, start_value);
    let mut h = cell.half / T::of(2.0);
    for _ in 0..400 {
        if v <= eta {
            return Some(y);
        }
        if h <= floor {
            return None;
        }
        let best = moves
            .iter()
            .map(|u| shifted(&y, u, h))
            .filter(|q| {
                q.coords()
                    .iter()
                    .zip(cell.center.coords())
                    .all(|(&a, &c)| (a - c).abs() <= reach)
            })
            .filter_map(|q| f(&q).finite().map(|w| (q, w)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal));
        match best {
            Some((q, w)) if v - w >= min_gain * h => {
                y = q;
                v = w;
            }
            _ => h = h / T::of(2.0),
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SearchConfig<f64> {
        SearchConfig::default()
    }

    #[test]
    fn distance_to_a_line_in_the_plane() {
        // Zero set of |p1 + 2 p2 - x| is a line at distance |x|/sqrt(5) from 0.
        let region = Ball::new(Point::new(vec![0.0, 0.0]).unwrap(), 2.0).unwrap();
        let q = Point::new(vec![0.0, 0.0]).unwrap();
        for x in [0.3, 1e-3, -2e-5] {
            let hit = nearest_zero(
                &q,
                &region,
                |p| ExtReal::Finite((p.get(0) + 2.0 * p.get(1) - x).abs()),
                &cfg(),
                1e-12,
            )
            .unwrap();
            let exact = x.abs() / 5f64.sqrt();
            assert!(
                (hit.distance - exact).abs() <= 2e-3 * exact,
                "x={x}: {} vs {exact}",
                hit.distance
            );
            assert!(hit.converged);
        }
    }

    #[test]
    fn isolated_zero() {
        let region = Ball::new(Point::new(vec![0.0, 0.0]).unwrap(), 1.0).unwrap();
        let q = Point::new(vec![0.0, 0.05]).unwrap();
        let hit = nearest_zero(
            &q,
            &region,
            |p| ExtReal::Finite(p.get(0).abs() + p.get(1).abs()),
            &cfg(),
            1e-12,
        )
        .unwrap();
        assert!((hit.distance - 0.05).abs() < 1e-4, "{hit:?}");
    }

    #[test]
    fn no_zero_means_none() {
        let region = Ball::new(Point::scalar(0.0), 1.0).unwrap();
        let hit = nearest_zero(
            &Point::scalar(0.0),
            &region,
            |p| ExtReal::Finite(1.0 + p.get(0) * p.get(0)),
            &cfg(),
            1e-9,
        );
        assert!(hit.is_none());
    }

    #[test]
    fn half_line_witness_is_a_member() {
        let region = Ball::new(Point::scalar(0.0), 1.0).unwrap();
        let q = Point::scalar(0.7);
        let hit = nearest_zero(
            &q,
            &region,
            |p| ExtReal::Finite((p.get(0) - 0.01).max(0.0)),
            &cfg(),
            1e-12,
        )
        .unwrap();
        assert!(hit.exact, "{hit:?}");
        assert!(hit.witness.get(0) <= 0.01);
        assert!((hit.distance - 0.69).abs() < 0.69 * 1e-3);
    }
}
