//! Closed-system state-vector propagation under a time-dependent Hamiltonian.

use ndarray as nd;
use num_complex::Complex64 as C64;

use crate::device::TimeDependentHamiltonian;
use crate::dynamics::ode::{integrate_with_samples, OdeStats, PropagationConfig};
use crate::error::{CoreError, Result};
use crate::hilbert::state::StateVector;

/// Fractional norm drift above which propagation is considered failed.
pub const NORM_DRIFT_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct SchrodingerResult {
    /// Final state, renormalized.
    pub state: StateVector,
    /// |1 - ||psi(T)|| | before renormalization.
    pub norm_drift: f64,
    /// States at the requested sample times (renormalized), excluding the
    /// final time (which is `state`).
    pub samples: Vec<(f64, StateVector)>,
    pub stats: OdeStats,
}

/// Default anti-aliasing step bound for a Hamiltonian with fastest
/// oscillation frequency `nu_max` (rad/s).
pub fn default_max_step(nu_max: f64) -> Option<f64> {
    if nu_max > 0.0 {
        Some(1.0 / (20.0 * nu_max))
    } else {
        None
    }
}

pub fn propagate_schrodinger(
    h: &TimeDependentHamiltonian,
    psi0: &StateVector,
    config: &PropagationConfig,
) -> Result<SchrodingerResult> {
    if psi0.space() != h.space() {
        return Err(CoreError::SpaceMismatch(
            "initial state lives on a different space than the Hamiltonian".into(),
        ));
    }
    psi0.check_normalized()?;
    let mut cfg = config.clone();
    if cfg.max_step.is_none() {
        cfg.max_step = default_max_step(h.max_freq());
    }
    let t_final = cfg.t_final;
    let mut samples = Vec::new();
    let (y, stats) = integrate_with_samples(
        psi0.amplitudes(),
        0.0,
        &cfg,
        |t, y: &nd::Array1<C64>, out: &mut nd::Array1<C64>| {
            h.apply_rhs(
                t,
                y.as_slice().expect("contiguous"),
                out.as_slice_mut().expect("contiguous"),
            );
        },
        |_, _| true,
        |t, y| {
            if (t - t_final).abs() > 1e-15 * t_final {
                samples.push((t, y.clone()));
            }
        },
    )?;
    let norm = y.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let norm_drift = (1.0 - norm).abs();
    if norm_drift > NORM_DRIFT_LIMIT {
        return Err(CoreError::IntegratorFailure(format!(
            "norm drift {norm_drift:.3e} exceeds {NORM_DRIFT_LIMIT:.1e}"
        )));
    }
    let mut state =
        StateVector::from_amplitudes(psi0.space().clone(), y)?;
    state.set_truncation_leakage(psi0.truncation_leakage());
    state.normalize()?;
    let samples = samples
        .into_iter()
        .map(|(t, y)| {
            let mut s = StateVector::from_amplitudes(psi0.space().clone(), y)?;
            s.normalize()?;
            Ok((t, s))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SchrodingerResult {
        state,
        norm_drift,
        samples,
        stats,
    })
}
