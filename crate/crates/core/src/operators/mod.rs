//! Operator primitives: Pauli strings, state vectors, Haar-random sampling.

mod haar;
pub(crate) mod pauli;
mod state;

pub use haar::{
    sample_haar_state, sample_haar_state_with_cavity, sample_haar_unitary, DenseUnitary,
    MAX_DENSE_QUBITS,
};
pub use pauli::{apply_pauli, apply_pauli_mut, pauli_expectation, Axis, PauliString, Phase};
pub use state::StateVector;
