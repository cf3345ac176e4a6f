use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("x_max = {requested} exceeds the configured capacity of {limit}")]
    Capacity { requested: u64, limit: u64 },

    #[error("{what} = {value} is outside the table range 1..={x_max}")]
    OutOfRange { what: &'static str, value: f64, x_max: u64 },

    #[error("block j = {j} contains no integers")]
    EmptyBlock { j: u64 },

    #[error("need at least {needed} nonempty blocks, found {found}")]
    InsufficientBlocks { needed: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coefficient present at n = {n} where the weight vanishes")]
    ExcludedIndex { n: u64 },

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("quadrature did not converge: estimated relative error {estimate:.3e} exceeds {tolerance:.3e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("insufficient decay on the inversion contour: |F| at the window edge is {ratio:.3e} of its maximum")]
    InsufficientDecay { ratio: f64 },

    #[error("degenerate blocks: n_j = n_(j+1) at j = {j}; increase N")]
    DegenerateBlocks { j: u64 },

    #[error("profile support violation: {0}")]
    SupportViolation(String),

    #[error("reference norm vanishes")]
    ZeroNorm,

    #[error("point {0} is not admissible")]
    PointOutside(String),

    #[error("contraction failure: norm history {history:?}")]
    ContractionFailure { history: Vec<f64> },

    #[error("grid is empty")]
    EmptyGrid,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
