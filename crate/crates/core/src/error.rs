use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix of {rows}x{cols} exceeds the dense size cap of {max}")]
    Size { rows: usize, cols: usize, max: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite or otherwise unusable numbers: {0}")]
    Numeric(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("clock has no nonzero tick operator and would never tick")]
    NeverTicks,

    #[error("out of domain: {0}")]
    Domain(String),

    #[error("register mode not supported here: {0}")]
    Mode(String),

    #[error("accuracy loss: {message} (suggested dt {suggested_dt:e})")]
    Accuracy { message: String, suggested_dt: f64 },

    #[error("delay function mass {mass} too small for moments; try t_max >= {suggested_t_max}")]
    Horizon { mass: f64, suggested_t_max: f64 },

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("need at least 2 usable records, found {usable}")]
    InsufficientData { usable: usize },

    #[error("unpaired trajectory ids: {0}")]
    Pairing(String),

    #[error("enumeration of {required} outcome sequences exceeds the budget of {budget}; use at most {suggested_n} times")]
    Resource {
        required: u128,
        budget: u128,
        suggested_n: usize,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}
