//! Fidelity experiments for the entangled-state transfer protocol:
//! single-point Bell-transfer runs, sweeps over coupling strength and cavity
//! lifetime, and deterministic result emission with resumable manifests.

pub mod emit;
pub mod point;
pub mod sweep;
pub mod tier;

pub use emit::{parse_csv, render_csv, write_csv, CSV_HEADER};
pub use point::{bell_transfer_fidelity, transfer_point, PointDiagnostics};
pub use sweep::{
    default_g2_values_mhz, default_kappa_inv_values_us, estimate_peak, run_sweep, PeakEstimate,
    SweepAxis, SweepConfig, SweepResult, SweepRow, WORKERS_ENV,
};
pub use tier::Tier;
