use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failures raised by the solver.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A primitive violates a structural requirement (fails before any check runs).
    Structural { check: &'static str, detail: String },
    /// The discretized kernel rows are not ordered by first-order stochastic dominance.
    FosdViolation { row: usize, next: usize, column: usize, excess: f64 },
    /// The primitives fail a model assumption and validation was not bypassed.
    AssumptionViolated { check: &'static str, detail: String },
    /// Grid or measure arguments are inconsistent.
    InvalidArgument(String),
    /// A bracket could not be grown to contain a sign change.
    BracketNotFound { what: &'static str, limit: f64 },
    /// An iteration exhausted its budget.
    NoConvergence { what: &'static str, iterations: usize },
    /// A linear system turned out singular.
    SingularSystem { pivot: usize },
    /// The linear-solve certificate exceeded its bound.
    ResidualTooLarge { what: &'static str, residual: f64 },
    /// Continuation values increase with the type somewhere.
    NonMonotoneContinuation { cell: usize },
    /// The exit residual changes sign more than once along the entry schedule.
    MultipleCrossings { crossings: usize },
    /// Demand is zero at the long-run supply price.
    NoActiveEquilibrium { price: f64, choke: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Structural { check, detail } => write!(f, "{check}: {detail}"),
            Error::FosdViolation { row, next, column, excess } => write!(
                f,
                "kernel rows {row} and {next} violate stochastic dominance at column {column} (cdf excess {excess:e})"
            ),
            Error::AssumptionViolated { check, detail } => {
                write!(f, "assumption violated: {check}: {detail}")
            }
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::BracketNotFound { what, limit } => {
                write!(f, "{what}: no sign change found below {limit}")
            }
            Error::NoConvergence { what, iterations } => {
                write!(f, "{what}: no convergence after {iterations} iterations")
            }
            Error::SingularSystem { pivot } => write!(f, "singular linear system at pivot {pivot}"),
            Error::ResidualTooLarge { what, residual } => {
                write!(f, "{what}: residual {residual:e} exceeds its bound")
            }
            Error::NonMonotoneContinuation { cell } => {
                write!(f, "continuation value increases in type at cell {cell}")
            }
            Error::MultipleCrossings { crossings } => write!(
                f,
                "exit residual changes sign {crossings} times along the entry schedule"
            ),
            Error::NoActiveEquilibrium { price, choke } => write!(
                f,
                "no active equilibrium: long-run supply price {price} is not below the demand choke price {choke}, so equilibrium demand would be zero"
            ),
        }
    }
}

impl core::error::Error for Error {}
