//! Points, balls, sampling grids and closed-set oracles.

mod grid;
mod oracle;
mod point;
mod search;

pub use grid::{GridSpec, Layout, Resolution, Sample, Scheme, DEFAULT_SEED};
pub use oracle::{
    distance_to_set, enlargement_contains, project_onto_set, ClosedSetOracle, DistanceFn,
    Membership, ETA_ANALYTIC,
};
pub use point::{product_distance, Ball, Coords, Point};
pub use search::{nearest_zero, zero_within, SearchConfig, ZeroHit};
