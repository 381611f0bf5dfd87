//! Time evolution: ODE integration, closed-system and Lindblad propagation,
//! quantum-trajectory unraveling, and closed-form step maps.

pub mod lindblad;
pub mod maps;
pub mod ode;
pub mod schrodinger;
pub mod trajectories;

pub use lindblad::{propagate_lindblad, LindbladResult};
pub use maps::{
    evolve_conditional_drive_map, evolve_conditional_drive_map_inverse, evolve_dispersive_map,
    evolve_rabi,
};
pub use ode::{integrate, integrate_with_samples, Method, OdeStats, PropagationConfig};
pub use schrodinger::{default_max_step, propagate_schrodinger, SchrodingerResult};
pub use trajectories::{
    evolve_ensemble_mcwf, propagate_trajectories, TrajectoryConfig, TrajectoryResult,
};
