use thiserror::Error;

/// Errors raised by the approximation, quantization and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point {0} lies outside [0, 1]")]
    Domain(f64),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("requested degree {requested} is below the polynomial degree {degree}")]
    DegreeBelowPolynomial { requested: usize, degree: usize },

    #[error("degree {n} exceeds the cap of {cap} for {what}")]
    DegreeTooLarge { n: usize, cap: usize, what: &'static str },

    #[error("input bound violated: max |y| = {max} exceeds {bound}")]
    Precondition { max: f64, bound: f64 },

    #[error("coefficients are not admissible for one-bit quantization: max |y| = {max} > mu = {mu}")]
    NotAdmissible { max: f64, mu: f64 },

    #[error("stability violation at index {index}: |u| = {value} exceeds the cap {cap}")]
    Stability { index: usize, value: f64, cap: f64 },

    #[error("adaptive quadrature did not converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },

    #[error("unknown function {0:?}")]
    UnknownFunction(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    ///
    /// 2 = admissibility or input-bound failure, 3 = stability violation,
    /// 4 = configuration error, 1 = anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotAdmissible { .. } | Error::Precondition { .. } => 2,
            Error::Stability { .. } => 3,
            Error::UnknownFunction(_)
            | Error::InvalidParameter(_)
            | Error::DegreeTooLarge { .. }
            | Error::DegreeBelowPolynomial { .. }
            | Error::Domain(_)
            | Error::LengthMismatch { .. } => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(x))
    }
}
