use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("point has a non-finite coordinate")]
    NonFiniteCoordinate,

    #[error("a point needs at least one coordinate")]
    ZeroDimension,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sampling grid is empty")]
    EmptyGrid,

    #[error("no member of the set was found inside the search region")]
    EmptySetInRegion,

    #[error("query point lies outside the declared {which} region")]
    OutOfRegion { which: &'static str },

    #[error("all sampled displacements are infinite; the slope is undefined")]
    UndefinedSlope,

    #[error("the strict outer slope band is empty at the largest radius")]
    EmptyBand,

    #[error("no perturbed feasible point was sampled at any rung")]
    NoPerturbedFeasiblePoints,

    #[error("objective takes the value -inf near the reference point")]
    DegenerateObjective,

    #[error("reference pair is not in the graph (residual {0})")]
    ReferenceNotInGraph(f64),

    #[error("reference point is not locally optimal on samples (witness value {0})")]
    ReferenceNotOptimal(f64),

    #[error("unknown catalog entry {0:?}")]
    UnknownEntry(String),

    #[error("operation {operation:?} is not available for {kind} entries")]
    UnknownOperation { operation: String, kind: String },

    #[error("unknown formula {0:?}")]
    UnknownFormula(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
