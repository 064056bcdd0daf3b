//! Error types shared across the simulator.

use thiserror::Error;

/// Errors produced by the simulator core.
#[derive(Debug, Error)]
pub enum Error {
    /// A bank or schedule was requested with zero elements.
    #[error("empty bank: {0}")]
    EmptyBank(String),

    /// A caller violated an operation precondition.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// A parameter set failed its invariants.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A linear system was singular or too ill-conditioned to solve.
    #[error("numerical conditioning: {0}")]
    NumericalConditioning(String),

    /// An iterative procedure failed to converge.
    #[error("divergence: {0}")]
    Divergence(String),

    /// An operation does not fit the hardware unit it was mapped to.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A layer was handed to the wrong lowering routine.
    #[error("layer kind mismatch: {0}")]
    KindMismatch(String),

    /// Vector operands disagree in length.
    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    /// Tensor shapes are incompatible with the model description.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// No admissible configuration satisfies the sweep constraints.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Model or weight file could not be read or decoded.
    #[error("model i/o: {0}")]
    ModelIo(String),
}

pub type Result<T> = std::result::Result<T, Error>;
