//! Exhaustive ground truth for small instances.

pub mod enumerate;
pub mod influence;
pub mod lcol;
pub mod markov;
pub mod transfer;

use thiserror::Error;

use crate::coloring::ColoringError;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("refused: more than {cap} states (at least {at_least})")]
    CapExceeded { cap: u64, at_least: u64 },
    #[error("refused: transfer-matrix layer {layer} exceeds {cap} states")]
    StateCap { cap: usize, layer: usize },
    #[error("refused: count overflows 128 bits")]
    Overflow,
    #[error("refused: no convergence within {0} steps")]
    NoConvergence(u64),
    #[error("layer plan: {0}")]
    Plan(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Coloring(#[from] ColoringError),
}

impl OracleError {
    /// Cap refusals, as opposed to bad input.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            OracleError::CapExceeded { .. }
                | OracleError::StateCap { .. }
                | OracleError::Overflow
                | OracleError::NoConvergence(_)
        )
    }
}
