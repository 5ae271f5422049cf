use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("sources do not conserve mass: |sum| = {sum:e} exceeds {tol:e}")]
    UnbalancedSources { sum: f64, tol: f64 },

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("conductivities violate the feasible set: {0}")]
    InfeasibleConductivity(String),

    #[error("degenerate edge length at ({i}, {j})")]
    DegenerateLength { i: usize, j: usize },

    #[error("singular system: the positive-conductivity graph is disconnected")]
    SingularSystem,

    #[error("linear solver stalled: residual {residual:e} after {iterations} iterations")]
    SolverStall { residual: f64, iterations: usize },

    #[error("source density has non-zero mean: {mean:e}")]
    NonZeroMeanDensity { mean: f64 },

    #[error("graphon is not 0-1 valued at ({x}, {y}): {value}")]
    NonZeroOneGraphon { x: f64, y: f64, value: f64 },

    #[error("kernel out of range: {0}")]
    KernelRange(String),

    #[error("coercivity failure at resolution {resolution}: positive-weight graph disconnected")]
    CoercivityFailure { resolution: usize },

    #[error("refinement did not stabilize: trace {trace:?}")]
    NonConvergentRefinement { trace: Vec<(usize, f64)> },

    #[error(
        "assumption violated for n = {n}: {what} measured {measured:e}, required {required:e}"
    )]
    AssumptionViolation {
        what: String,
        n: usize,
        measured: f64,
        required: f64,
    },

    #[error("cross-check failed ({what}): {lhs:e} vs {rhs:e}")]
    CrossCheckFailed { what: String, lhs: f64, rhs: f64 },

    #[error("brute force rejected: {edges} edges exceeds limit {max}")]
    TooManyEdges { edges: usize, max: usize },

    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
