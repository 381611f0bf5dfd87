//! Simulator for a circuit-QED protocol that transfers an n-qubit entangled
//! state from single-photon-state qubits onto coherent-state qubits through a
//! flux-qutrit coupler: tensor algebra, device Hamiltonians, closed- and
//! open-system propagation, the six-step protocol pipeline, and fidelity
//! sweeps.

pub mod device;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod protocol;
pub mod sparse;

pub use error::{CoreError, Result};
