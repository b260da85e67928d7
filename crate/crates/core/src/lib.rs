//! Numerical estimation of regularity moduli of set-valued mappings and of
//! exact penalty thresholds for parameterized constrained problems.
//!
//! The core is generic over the scalar type ([`Scalar`] is implemented for
//! `f32` and `f64`); the `*64` aliases fix it to `f64`.

pub mod catalog;
pub mod config;
pub mod error;
pub mod metric;
pub mod moduli;
pub mod penalty;
pub mod scalar;
pub mod setvalued;
pub mod slopes;

pub use config::{RadiusLadder, Settings, Tolerances};
pub use error::{Error, Result};
pub use metric::{Ball, ClosedSetOracle, GridSpec, Point, Resolution, Scheme, SearchConfig};
pub use moduli::{ModulusEstimate, Rung, Verdict};
pub use scalar::{ExtReal, Scalar};
pub use setvalued::{
    displacement, fiber_distance, inverse_distance, lsc_probe, FnInclusion, FnMap,
    GraphSampleMap, Inclusion, InverseView, SectionMap, SetValuedMap, SolutionMap,
};

pub type Point64 = Point<f64>;
pub type Ball64 = Ball<f64>;
pub type Ext64 = ExtReal<f64>;
pub type Settings64 = Settings<f64>;
pub type ModulusEstimate64 = ModulusEstimate<f64>;
