//! Single-point transfer experiments: run the protocol at one parameter set
//! and report fidelity plus numerical-health diagnostics.

use std::sync::Arc;

use cst_core::device::DeviceParams;
use cst_core::hilbert::space::HilbertSpace;
use cst_core::protocol::{run_numeric, NumericOptions, ProtocolState, RunOutput};
use cst_core::{CoreError, Result};

/// Diagnostics for one protocol run at one parameter point.
#[derive(Debug, Clone, Copy)]
pub struct PointDiagnostics {
    pub fidelity: f64,
    /// Worst final-member norm deviation |1 - ||psi|||.
    pub trace_err: f64,
    /// Largest truncation leakage seen across steps.
    pub leakage: f64,
    /// Largest second-excited-level population seen across steps.
    pub f_pop_max: f64,
}

pub fn diagnostics_from_run(out: &RunOutput) -> PointDiagnostics {
    let trace_err = match &out.final_state {
        ProtocolState::Pure(s) => (1.0 - s.norm()).abs(),
        ProtocolState::Ensemble(m) => m
            .iter()
            .map(|(_, s)| (1.0 - s.norm()).abs())
            .fold(0.0, f64::max),
    };
    let leakage = out
        .outcomes
        .iter()
        .map(|o| o.leakage)
        .fold(0.0, f64::max);
    PointDiagnostics {
        fidelity: out.final_fidelity,
        trace_err,
        leakage,
        f_pop_max: out.max_f_population(),
    }
}

/// Run the transfer at one parameter point and return diagnostics.
pub fn transfer_point(
    p: &DeviceParams,
    space: &Arc<HilbertSpace>,
    opts: &NumericOptions,
) -> Result<PointDiagnostics> {
    let out = run_numeric(p, space, opts)?;
    Ok(diagnostics_from_run(&out))
}

/// Fidelity of the two-pair (Bell-state) transfer against the ideal target.
pub fn bell_transfer_fidelity(
    p: &DeviceParams,
    space: &Arc<HilbertSpace>,
    opts: &NumericOptions,
) -> Result<f64> {
    if p.n != 2 {
        return Err(CoreError::Precondition(
            "the Bell-transfer experiment requires exactly two cavity pairs".into(),
        ));
    }
    Ok(transfer_point(p, space, opts)?.fidelity)
}
