//! Error type shared by every layer of the pipeline.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad argument values: out-of-range tolerances, inadmissible
    /// potentials, malformed vectors or matrices.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Text inputs (DIMACS files, matrix files, expression strings) that
    /// do not parse.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// The request is well formed but exceeds what the selected backend
    /// can honestly deliver (matrix dimension caps, qubit caps,
    /// floating-point accuracy floors, truncation-mass deficits).
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Internal iteration caps blown or invariants broken mid-run. These
    /// indicate a defect, not a user mistake.
    #[error("numerical fault: {0}")]
    Numerical(String),

    /// A `verify` run found the estimate and the brute-force answer in
    /// disagreement.
    #[error("verification mismatch: {0}")]
    VerifyMismatch(String),
}

impl Error {
    /// Process exit code used by the CLI: 2 for input problems, 3 for
    /// capacity, 4 for verification mismatches.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity(_) => 3,
            Error::VerifyMismatch(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
