use thiserror::Error;

/// Errors raised by the analysis library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input contains non-finite entries")]
    NonFinite,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("infeasible pair at coordinate {coordinate}: {detail}")]
    Infeasible { coordinate: usize, detail: String },

    #[error("KKT residual {residual:.3e} exceeds tolerance {tol:.1e}")]
    NotKkt { residual: f64, tol: f64 },

    #[error("Robinson constraint qualification fails")]
    RcqViolated { witness: Vec<f64> },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
