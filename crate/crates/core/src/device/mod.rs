//! Device description: physical parameters, derived quantities and validity
//! checks, preset files, and construction of every Hamiltonian and collapse
//! operator the protocol needs.

pub mod builders;
pub mod derived;
pub mod hamiltonian;
pub mod params;
pub mod preset;

pub use builders::{
    build_crosstalk, build_h1, build_h2, build_h2_full, build_h3, build_h3_full,
    build_h_eff_dispersive, build_h_eff_drive, build_h_eff_drive_static, collapse_operators,
    stark_frame_generator, stark_frame_unitary,
};
pub use derived::{
    check_matching, quality_factors, validate_dispersive, DerivedParams, DispersiveReport,
    MatchingReport, RatioEntry,
};
pub use hamiltonian::{OscTerm, TimeDependentHamiltonian};
pub use params::{
    cs_label, ghz, mhz, sps_label, to_ghz, to_mhz, us, DeadTimes, DeviceParams, UnwantedRatios,
    TWO_PI,
};
pub use preset::{
    apply_overrides, load_preset_file, load_preset_with_overrides, parse_preset_text,
    resolve_preset,
};
