//! Protocol planning: the ordered six-step schedule, its timing budget, and
//! the feasibility checks (shift matching and the drive phase-return
//! condition) that must hold before any execution.

use num_complex::Complex64 as C64;

use crate::device::{check_matching, DerivedParams, DeviceParams};
use crate::error::{CoreError, Result};

/// Relative tolerance on the phase-return condition of the conditional
/// drive (its duration must close an integer number of conditional-phase
/// periods).
pub const PHASE_RETURN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum StepKind {
    /// Local rotation |0> -> |+>, |1> -> |-> on the single-photon cavities
    /// 2..n.
    PrepPlusMinus,
    /// Resonant swap of cavity 1's photon into the coupler, pi/(2 g_r).
    ResonantSwap,
    /// Dispersive conditional phase for pi/lambda.
    DispersivePhase,
    /// Phase-space displacement of cavity 1' by the given amount.
    Displace(C64),
    /// Number-selective drive returning the coupler excitation, pi/(2 Omega).
    ConditionalDrive,
}

impl StepKind {
    pub fn name(&self) -> &'static str {
        match self {
            StepKind::PrepPlusMinus => "prep_plus_minus",
            StepKind::ResonantSwap => "resonant_swap",
            StepKind::DispersivePhase => "dispersive_phase",
            StepKind::Displace(a) if a.re >= 0.0 => "displace_plus",
            StepKind::Displace(_) => "displace_minus",
            StepKind::ConditionalDrive => "conditional_drive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolStep {
    pub kind: StepKind,
    /// Seconds.
    pub duration: f64,
    /// Subsystem labels the step touches.
    pub actors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolPlan {
    pub steps: Vec<ProtocolStep>,
    /// Total switching dead time (level-spacing and cavity-frequency
    /// adjustments) added on top of the step durations.
    pub dead_time: f64,
    pub total_time: f64,
    /// Conditional-phase period count closed by the drive step.
    pub phase_return_m: u32,
}

/// Build and validate the six-step schedule.
pub fn plan(p: &DeviceParams) -> Result<ProtocolPlan> {
    p.validate()?;
    let matching = check_matching(p)?;
    if !matching.matched {
        let worst = matching
            .residuals
            .iter()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(l, r)| format!("{l}: {r:.3e}"))
            .unwrap_or_default();
        return Err(CoreError::Precondition(format!(
            "dispersive shifts are not matched (worst relative residual {worst})"
        )));
    }
    let derived = DerivedParams::from_params(p)?;
    if p.g_r <= 0.0 {
        return Err(CoreError::Parameter("g_r must be positive".into()));
    }
    if p.drive_rabi <= 0.0 {
        return Err(CoreError::Parameter("drive Rabi rate must be positive".into()));
    }
    // Phase-return: the drive duration t = pi/(2 Omega) must satisfy
    // 2 w t = 2 pi m for integer m >= 1, i.e. m = w / (2 Omega).
    let m_exact = derived.omega_tilde / (2.0 * p.drive_rabi);
    let m_round = m_exact.round();
    if m_round < 1.0 || (m_exact - m_round).abs() > PHASE_RETURN_TOL * m_exact.abs().max(1.0) {
        return Err(CoreError::Precondition(format!(
            "conditional-drive phase-return violated: period count {m_exact:.8} is not an \
             integer within {PHASE_RETURN_TOL:.0e}"
        )));
    }
    let dt = &p.dead_times;
    let sps_actors: Vec<String> = (2..=p.n).map(crate::device::sps_label).collect();
    let cs_actors: Vec<String> = (1..=p.n).map(crate::device::cs_label).collect();
    let mut dispersive_actors = vec!["qutrit".to_string()];
    dispersive_actors.extend(sps_actors.iter().cloned());
    dispersive_actors.extend(cs_actors.iter().cloned());
    let steps = vec![
        ProtocolStep {
            kind: StepKind::PrepPlusMinus,
            duration: dt.tau_p,
            actors: sps_actors,
        },
        ProtocolStep {
            kind: StepKind::ResonantSwap,
            duration: 0.5 * std::f64::consts::PI / p.g_r,
            actors: vec!["qutrit".into(), "c1".into()],
        },
        ProtocolStep {
            kind: StepKind::DispersivePhase,
            duration: derived.dispersive_time(),
            actors: dispersive_actors,
        },
        ProtocolStep {
            kind: StepKind::Displace(p.alpha),
            duration: dt.tau_alpha,
            actors: vec!["c1p".into()],
        },
        ProtocolStep {
            kind: StepKind::ConditionalDrive,
            duration: 0.5 * std::f64::consts::PI / p.drive_rabi,
            actors: vec!["qutrit".into(), "c1p".into()],
        },
        ProtocolStep {
            kind: StepKind::Displace(-p.alpha),
            duration: dt.tau_alpha,
            actors: vec!["c1p".into()],
        },
    ];
    let dead_time = 4.0 * dt.tau_d + 2.0 * dt.tau_c;
    let total_time = steps.iter().map(|s| s.duration).sum::<f64>() + dead_time;
    Ok(ProtocolPlan {
        steps,
        dead_time,
        total_time,
        phase_return_m: m_round as u32,
    })
}
