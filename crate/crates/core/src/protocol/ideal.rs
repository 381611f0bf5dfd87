//! Closed-form protocol execution: every step is applied as its idealized
//! map, and the inverse sequence undoes the transfer exactly.

use std::sync::Arc;

use crate::device::{DerivedParams, DeviceParams};
use crate::dynamics::{
    evolve_conditional_drive_map, evolve_conditional_drive_map_inverse, evolve_dispersive_map,
    evolve_rabi,
};
use crate::error::Result;
use crate::hilbert::operator::Operator;
use crate::hilbert::space::HilbertSpace;
use crate::hilbert::state::StateVector;
use crate::protocol::exec::{
    displace_c1p_operator, f_projector, prep_plus_minus_operator, ProtocolState, RunOutput,
    StepOutcome,
};
use crate::protocol::plan::{plan, ProtocolStep, StepKind};
use crate::protocol::states::{ideal_intermediates, initial_state, target_state};

/// Apply one protocol step as its idealized map to every ensemble member.
pub(crate) fn apply_ideal_step(
    p: &DeviceParams,
    derived: &DerivedParams,
    space: &Arc<HilbertSpace>,
    step: &ProtocolStep,
    st: &ProtocolState,
) -> Result<ProtocolState> {
    match &step.kind {
        StepKind::PrepPlusMinus => {
            let u = prep_plus_minus_operator(p, space)?;
            st.map(|s| s.apply(&u))
        }
        StepKind::ResonantSwap => st.map(|s| evolve_rabi(s, p.g_r, step.duration)),
        StepKind::DispersivePhase => {
            st.map(|s| evolve_dispersive_map(s, &derived.lambda, &derived.lambda_p, step.duration))
        }
        StepKind::Displace(a) => {
            let u = displace_c1p_operator(space, *a)?;
            st.map(|s| s.apply(&u))
        }
        StepKind::ConditionalDrive => st.map(|s| {
            evolve_conditional_drive_map(s, derived.omega_tilde, p.drive_rabi, step.duration, p.phi)
        }),
    }
}

/// Apply the exact inverse of one protocol step.
fn apply_inverse_step(
    p: &DeviceParams,
    derived: &DerivedParams,
    space: &Arc<HilbertSpace>,
    step: &ProtocolStep,
    st: &ProtocolState,
) -> Result<ProtocolState> {
    match &step.kind {
        // The plus/minus rotation is an involution.
        StepKind::PrepPlusMinus => {
            let u = prep_plus_minus_operator(p, space)?;
            st.map(|s| s.apply(&u))
        }
        StepKind::ResonantSwap => st.map(|s| evolve_rabi(s, p.g_r, -step.duration)),
        StepKind::DispersivePhase => {
            st.map(|s| evolve_dispersive_map(s, &derived.lambda, &derived.lambda_p, -step.duration))
        }
        StepKind::Displace(a) => {
            let u = displace_c1p_operator(space, -*a)?;
            st.map(|s| s.apply(&u))
        }
        StepKind::ConditionalDrive => st.map(|s| {
            evolve_conditional_drive_map_inverse(
                s,
                derived.omega_tilde,
                p.drive_rabi,
                step.duration,
                p.phi,
            )
        }),
    }
}

fn outcome(
    st: &ProtocolState,
    reference: &StateVector,
    f_op: &Operator,
    step: &ProtocolStep,
) -> Result<StepOutcome> {
    Ok(StepOutcome {
        kind: step.kind.clone(),
        duration: step.duration,
        fidelity: st.fidelity_to(reference)?,
        f_population: st.expectation(f_op)?,
        leakage: st.leakage(),
    })
}

/// Execute the full six-step transfer with idealized step maps, starting from
/// the canonical initial state.
pub fn run_ideal(p: &DeviceParams, space: &Arc<HilbertSpace>) -> Result<RunOutput> {
    let schedule = plan(p)?;
    let derived = DerivedParams::from_params(p)?;
    let refs = ideal_intermediates(p, space)?;
    let target = target_state(p, space)?;
    let f_op = f_projector(space)?;
    let mut st = ProtocolState::Pure(initial_state(p, space)?);
    let mut outcomes = Vec::with_capacity(schedule.steps.len());
    for (k, step) in schedule.steps.iter().enumerate() {
        st = apply_ideal_step(p, &derived, space, step, &st)?;
        outcomes.push(outcome(&st, &refs[k], &f_op, step)?);
    }
    let final_fidelity = st.fidelity_to(&target)?;
    Ok(RunOutput {
        outcomes,
        final_state: st,
        final_fidelity,
    })
}

/// Undo the six steps in reverse order starting from `start`, reporting
/// per-step fidelities against the forward intermediates and the final
/// fidelity against the canonical initial state.
pub fn run_reverse(
    p: &DeviceParams,
    space: &Arc<HilbertSpace>,
    start: &ProtocolState,
) -> Result<RunOutput> {
    let schedule = plan(p)?;
    let derived = DerivedParams::from_params(p)?;
    let refs = ideal_intermediates(p, space)?;
    let initial = initial_state(p, space)?;
    let f_op = f_projector(space)?;
    let mut st = start.clone();
    let mut outcomes = Vec::with_capacity(schedule.steps.len());
    for (k, step) in schedule.steps.iter().enumerate().rev() {
        st = apply_inverse_step(p, &derived, space, step, &st)?;
        let reference = if k == 0 { &initial } else { &refs[k - 1] };
        outcomes.push(outcome(&st, reference, &f_op, step)?);
    }
    let final_fidelity = st.fidelity_to(&initial)?;
    Ok(RunOutput {
        outcomes,
        final_state: st,
        final_fidelity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::states::protocol_space;
    use num_complex::Complex64 as C64;

    fn tier_a_params() -> DeviceParams {
        let mut p = DeviceParams::paper_point();
        p.alpha = C64::new(1.2, 0.0);
        p
    }

    #[test]
    fn forward_run_reaches_target() {
        let p = DeviceParams::paper_point();
        let space = protocol_space(2, 3, 38, 17).unwrap();
        let out = run_ideal(&p, &space).unwrap();
        assert!(
            out.final_fidelity > 0.999,
            "final fidelity {}",
            out.final_fidelity
        );
        for o in &out.outcomes {
            assert!(o.fidelity > 0.999, "{}: {}", o.kind.name(), o.fidelity);
            assert!(o.f_population < 1e-10);
        }
    }

    #[test]
    fn forward_run_reaches_target_small_alpha() {
        let p = tier_a_params();
        let space = protocol_space(2, 3, 18, 12).unwrap();
        let out = run_ideal(&p, &space).unwrap();
        assert!(
            out.final_fidelity > 0.995,
            "final fidelity {}",
            out.final_fidelity
        );
    }

    #[test]
    fn round_trip_recovers_initial_state() {
        let p = DeviceParams::paper_point();
        let space = protocol_space(2, 3, 38, 17).unwrap();
        let fwd = run_ideal(&p, &space).unwrap();
        let back = run_reverse(&p, &space, &fwd.final_state).unwrap();
        assert!(
            back.final_fidelity > 0.999,
            "round-trip fidelity {}",
            back.final_fidelity
        );
    }

    #[test]
    fn run_is_linear_in_the_input_amplitudes() {
        // Running the superposition c|0..0> + d|1..1> must equal the
        // amplitude-weighted sum of running each branch alone.
        let space = protocol_space(2, 3, 38, 17).unwrap();
        let mut pc = DeviceParams::paper_point();
        pc.c_amp = C64::new(1.0, 0.0);
        pc.d_amp = C64::new(0.0, 0.0);
        let mut pd = DeviceParams::paper_point();
        pd.c_amp = C64::new(0.0, 0.0);
        pd.d_amp = C64::new(1.0, 0.0);
        let p = DeviceParams::paper_point();
        let run = |q: &DeviceParams| {
            let out = run_ideal(q, &space).unwrap();
            match out.final_state {
                ProtocolState::Pure(s) => s,
                _ => unreachable!(),
            }
        };
        let full = run(&p);
        let c_only = run(&pc);
        let d_only = run(&pd);
        let combo = c_only
            .scale(p.c_amp)
            .add(&d_only.scale(p.d_amp))
            .unwrap();
        // Branch runs start from normalized single-branch states, so the
        // weighted sum reproduces the full run up to the shared norm factor.
        let overlap = full.overlap(&combo.normalized().unwrap()).unwrap();
        assert!((overlap.norm() - 1.0).abs() < 1e-10, "overlap {overlap}");
        assert!(overlap.re > 0.999, "relative phase drifted: {overlap}");
    }
}
