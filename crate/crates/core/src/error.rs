//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

/// Everything that can go wrong across the crate. Variants carry enough
/// context to point at the offending input (line/column, grid cell, cap).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Instance text did not parse. Positions are 1-based.
    Parse { line: usize, col: usize, msg: String },
    /// A variable was declared in more than one block (or twice in one).
    DuplicateVariable(String),
    /// The formula references a variable no block declares, or an
    /// assignment is missing a required variable.
    UnboundVariable(String),
    /// A structural cap was exceeded (enumeration width, grid width,
    /// precision, derivative order). `what` names the cap.
    Capacity { what: &'static str, limit: u64, got: u64 },
    /// The difference-equation solution left `[0, R)`; first offending cell.
    CellOverflow { row: usize, col: u64 },
    /// A name oracle violated its contract (non-integral multiple, etc).
    NameContract(String),
    /// Branch-and-bound could not certify a derivative bound at the depth
    /// cap; carries the best interval-derived exponent found.
    Certification { order: usize, best_exponent: i64 },
    /// Bad parameter combination for gadget construction.
    Parameter(String),
    /// An integration trajectory left its containment box.
    Containment(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse { line, col, msg } => {
                write!(f, "parse error at line {line}, column {col}: {msg}")
            }
            Error::DuplicateVariable(v) => write!(f, "variable declared twice: {v}"),
            Error::UnboundVariable(v) => write!(f, "variable not bound: {v}"),
            Error::Capacity { what, limit, got } => {
                write!(f, "{what} cap exceeded: limit {limit}, got {got}")
            }
            Error::CellOverflow { row, col } => {
                write!(f, "cell value left [0, R) at row {row}, column {col}")
            }
            Error::NameContract(msg) => write!(f, "name oracle contract violation: {msg}"),
            Error::Certification { order, best_exponent } => write!(
                f,
                "could not certify derivative bound at order {order}; best exponent {best_exponent}"
            ),
            Error::Parameter(msg) => write!(f, "bad parameter: {msg}"),
            Error::Containment(msg) => write!(f, "trajectory left containment: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
