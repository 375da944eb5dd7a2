//! Statevector simulator for the quantum layer: amplitude embedding, three
//! variational ansatz families, Born-probability readout and exact gradients.

mod ansatz;
pub(crate) mod grad;
mod state;

pub use ansatz::{apply_ansatz, AnsatzKind, AnsatzSpec};
pub use grad::{quantum_forward, quantum_forward_backward, quantum_gradient, QuantumGradient};
pub use state::{amplitude_embed, Mat2, OneQubitGate, QuantumState, TwoQubitGate, C64, EMBED_NORM_FLOOR};

/// Free-function form of [`QuantumState::probabilities`].
pub fn probabilities(state: &QuantumState) -> Vec<f64> {
    state.probabilities()
}
