//! Truncated-Fock-space tensor algebra: composite spaces, subsystem
//! operators and embeddings, pure and mixed states, coherent states,
//! displacement, fidelity, and partial trace.

pub mod density;
pub mod operator;
pub mod serialize;
pub mod space;
pub mod state;

pub use density::{fidelity, partial_trace, pure_fidelity, DensityMatrix};
pub use operator::{
    annihilation, displacement, embed, embed_product, number, qutrit_sigma_z, qutrit_transition,
    Level, Operator,
};
pub use space::HilbertSpace;
pub use state::{coherent_state, coherent_state_bounded, default_mode_dim, StateVector};
