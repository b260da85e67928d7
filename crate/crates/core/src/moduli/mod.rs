//! Ladder estimators of regularity moduli.
//!
//! A modulus defined as "the least κ for which an inequality holds on some
//! ball" is read off a decreasing ladder of radii: each rung records the
//! largest sampled quotient inside its ball, and the verdict classifies how
//! the rungs behave as the radius shrinks.

mod calm;
mod estimate;
mod fiber;
mod hemi;
mod openness;
mod witness;

pub use calm::mapping_calmness_estimate;
pub use estimate::{ModulusEstimate, Rung, Verdict};
pub use fiber::fiber_points;
pub use hemi::{
    convex_process_norm, hemiregularity_estimate, uniform_hemiregularity_estimate,
    uniform_lipschitz_lsc_estimate, SupEstimate,
};
pub use openness::{openness_check, OpennessReport, OpennessViolation};
pub use witness::{metric_regularity_witness_search, MetricRegularityWitness, RegularityMode};

pub(crate) use calm::perturbed_fiber_sup;
pub(crate) use estimate::{ladder_estimate, par_argmax, RungBest};
