use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    Domain(String),
    /// The result would overflow the floating-point range.
    Range(String),
    /// Quadrature did not reach the requested tolerance.
    Accuracy { value: f64, error_estimate: f64 },
    /// Input data is malformed (non-finite samples, mismatched grids, ...).
    Input(String),
    /// A configuration violates a precondition (stability, contraction, ...).
    Config(String),
    /// Fixed-point iteration did not converge; carries the residual history.
    NonConvergence { block: usize, residuals: Vec<f64> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Range(msg) => write!(f, "range error: {msg}"),
            Error::Accuracy {
                value,
                error_estimate,
            } => write!(
                f,
                "quadrature tolerance not reached: best value {value:e}, error estimate {error_estimate:e}"
            ),
            Error::Input(msg) => write!(f, "invalid input: {msg}"),
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::NonConvergence { block, residuals } => {
                write!(
                    f,
                    "fixed-point iteration did not converge in block {block} after {} iterations",
                    residuals.len()
                )?;
                if let Some(last) = residuals.last() {
                    write!(f, " (last residual {last:e})")?;
                }
                Ok(())
            }
        }
    }
}

impl core::error::Error for Error {}

macro_rules! domain_err {
    ($($arg:tt)*) => {
        $crate::Error::Domain(alloc::format!($($arg)*))
    };
}
pub(crate) use domain_err;
