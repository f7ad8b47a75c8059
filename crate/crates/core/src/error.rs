use thiserror::Error;

/// Errors produced by the grid primitives and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("transaction cost {a} is not an integer multiple of the mesh width {h}")]
    NotGridMultiple { a: f64, h: f64 },

    #[error("shift exceeds domain: {steps} steps on a grid of {n_cells} cells")]
    ShiftExceedsDomain { steps: usize, n_cells: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("singular system: zero pivot in row {row}")]
    SingularSystem { row: usize },

    #[error("time step too large for collision term: dt*k*B = {value:.6} > 1")]
    CollisionStepTooLarge { value: f64 },

    #[error("fast-time step too large: dt*max(alpha+beta) = {value:.6} > 1")]
    FastTimeStepTooLarge { value: f64 },

    #[error(
        "drift step too large: dt*c*max|(fg)_x| = {value:.6e} exceeds density scale {bound:.6e}"
    )]
    DriftStepTooLarge { value: f64, bound: f64 },

    #[error("positivity lost: value {value:.3e} at node {node}")]
    PositivityLost { node: usize, value: f64 },

    #[error("price undefined: V has no root")]
    PriceUndefined,

    #[error("price estimate undefined: no trading activity")]
    PriceEstimateUndefined,

    #[error("transform undefined for zero transaction cost")]
    ZeroTransactionCost,

    #[error(
        "closed-form layer limit hypotheses violated: h_I > 0 at x = {positive_at}, \
         vanishes at x = {vanishes_at}, positive again at x = {reappears_at}"
    )]
    LayerHypothesisViolated {
        positive_at: f64,
        vanishes_at: f64,
        reappears_at: f64,
    },

    #[error("incompatible domains: {0}")]
    IncompatibleDomains(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at_step(self, step: usize) -> Error {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }

    /// Strips any step annotation.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root_cause(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
