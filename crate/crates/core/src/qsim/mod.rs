//! Dense state-vector simulation.
//!
//! States are value-like: every operation either mutates a locally owned
//! state or returns branches as fresh states, so independent simulations can
//! run on separate threads without shared mutable state. Amplitude index bit
//! `i` is global qubit `i` (qubit 0 least significant), and register qubits
//! are assigned in layout order.

mod density;
mod dist;
mod layout;
mod linalg;
mod observable;
mod state;

pub use density::{trace_distance, trace_out, trace_out_mixed, MixedState};
pub use dist::OutcomeDistribution;
pub use layout::RegisterLayout;
pub use linalg::{
    embed_operator, hadamard, identity, is_hermitian, is_projector, is_unitary, kron, pauli_x,
    pauli_z, random_state_vector, random_unitary, CMat,
};
pub use observable::{pauli_parity, BinaryObservable, PauliKind};
pub use state::PureState;

use thiserror::Error;

/// Hard cap on total qubits in a layout.
pub const MAX_QUBITS: usize = 26;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("layout exceeds {MAX_QUBITS} qubits (requested {0})")]
    WidthOverflow(usize),
    #[error("duplicate register name {0:?}")]
    DuplicateRegister(String),
    #[error("register width must be at least 1 ({0:?})")]
    EmptyRegister(String),
    #[error("unknown register {0:?}")]
    UnknownRegister(String),
    #[error("operator dimension {got} does not match {want} target qubits")]
    DimensionMismatch { got: usize, want: usize },
    #[error("operator is not unitary within tolerance")]
    NotUnitary,
    #[error("operator is not an involution within tolerance")]
    NotInvolutive,
    #[error("bit string length {got} does not match register width {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("projection onto a zero-probability branch")]
    ZeroProbabilityBranch,
    #[error("empty keep set for partial trace")]
    EmptyKeepSet,
    #[error("matrix is not positive semidefinite within tolerance")]
    NotPsd,
}

pub type Result<T> = std::result::Result<T, SimError>;
