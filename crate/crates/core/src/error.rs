use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid functional: {0}")]
    InvalidFunctional(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("divergent radial integral: {0}")]
    DivergentIntegral(String),

    #[error("shift sum does not converge: {0}")]
    NonConvergentSum(String),

    #[error(
        "rejection budget exhausted after {attempts} attempts ({accepted} accepted, acceptance rate ~{rate:.3e})"
    )]
    RejectionBudget {
        attempts: u64,
        accepted: u64,
        rate: f64,
    },

    #[error("too few exceedances: found {found}, need at least {required}")]
    TooFewExceedances { found: usize, required: usize },

    #[error("too few qualifying blocks: found {found}, need at least {required}")]
    InsufficientBlocks { found: usize, required: usize },

    #[error("functional returned NaN: {0}")]
    NanValue(String),

    #[error("io: {0}")]
    Io(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("internal error: {0}")]
    Internal(String),
}
