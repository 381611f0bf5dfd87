//! Shared execution machinery: the pure-or-ensemble protocol state, per-step
//! outcome records, and the ideal unitaries for the locally-trivial steps.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::device::{sps_label, DeviceParams};
use crate::error::{CoreError, Result};
use crate::hilbert::operator::{displacement, embed, qutrit_transition, Level, Operator};
use crate::hilbert::space::HilbertSpace;
use crate::hilbert::state::StateVector;
use crate::protocol::plan::StepKind;
use crate::sparse::CsrMatrix;

/// A protocol state: a single pure state on the lossless path, or a
/// multiplicity-weighted pure-state ensemble on the stochastic lossy path.
#[derive(Debug, Clone)]
pub enum ProtocolState {
    Pure(StateVector),
    Ensemble(Vec<(u32, StateVector)>),
}

impl ProtocolState {
    pub fn space(&self) -> Result<&Arc<HilbertSpace>> {
        match self {
            ProtocolState::Pure(s) => Ok(s.space()),
            ProtocolState::Ensemble(m) => m
                .first()
                .map(|(_, s)| s.space())
                .ok_or_else(|| CoreError::InvalidState("empty ensemble".into())),
        }
    }

    pub fn total_weight(&self) -> f64 {
        match self {
            ProtocolState::Pure(_) => 1.0,
            ProtocolState::Ensemble(m) => m.iter().map(|(w, _)| *w as f64).sum(),
        }
    }

    /// Apply a pure-state map to every member.
    pub fn map<F>(&self, mut f: F) -> Result<ProtocolState>
    where
        F: FnMut(&StateVector) -> Result<StateVector>,
    {
        match self {
            ProtocolState::Pure(s) => Ok(ProtocolState::Pure(f(s)?)),
            ProtocolState::Ensemble(m) => {
                let mut out = Vec::with_capacity(m.len());
                for (w, s) in m {
                    out.push((*w, f(s)?));
                }
                Ok(ProtocolState::Ensemble(out))
            }
        }
    }

    /// F = sqrt(<psi|rho|psi>) against a pure target.
    pub fn fidelity_to(&self, target: &StateVector) -> Result<f64> {
        match self {
            ProtocolState::Pure(s) => Ok(s.overlap(target)?.norm().min(1.0)),
            ProtocolState::Ensemble(m) => {
                let total = self.total_weight();
                if total <= 0.0 {
                    return Err(CoreError::InvalidState("empty ensemble".into()));
                }
                let mut acc = 0.0;
                for (w, s) in m {
                    acc += (*w as f64 / total) * s.overlap(target)?.norm_sqr();
                }
                Ok(acc.sqrt().min(1.0))
            }
        }
    }

    /// Ensemble-averaged expectation of a Hermitian observable.
    pub fn expectation(&self, op: &Operator) -> Result<f64> {
        match self {
            ProtocolState::Pure(s) => Ok(s.expectation(op)?.re),
            ProtocolState::Ensemble(m) => {
                let total = self.total_weight();
                let mut acc = 0.0;
                for (w, s) in m {
                    acc += (*w as f64 / total) * s.expectation(op)?.re;
                }
                Ok(acc)
            }
        }
    }

    /// Largest truncation leakage across members.
    pub fn leakage(&self) -> f64 {
        match self {
            ProtocolState::Pure(s) => s.truncation_leakage(),
            ProtocolState::Ensemble(m) => m
                .iter()
                .map(|(_, s)| s.truncation_leakage())
                .fold(0.0, f64::max),
        }
    }
}

/// Record of one executed protocol step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub kind: StepKind,
    pub duration: f64,
    /// Fidelity against the closed-form per-step reference state.
    pub fidelity: f64,
    /// Population of the coupler's second excited level after the step.
    pub f_population: f64,
    pub leakage: f64,
}

/// Result of a full protocol execution.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub outcomes: Vec<StepOutcome>,
    pub final_state: ProtocolState,
    /// Fidelity against the end-to-end reference (target state for forward
    /// runs, initial state for reverse runs).
    pub final_fidelity: f64,
}

impl RunOutput {
    pub fn max_f_population(&self) -> f64 {
        self.outcomes
            .iter()
            .map(|o| o.f_population)
            .fold(0.0, f64::max)
    }

    /// Step log as structured text: one line per step.
    pub fn step_log(&self) -> String {
        let mut out = String::new();
        for o in &self.outcomes {
            out.push_str(&format!(
                "{name}: duration_s={dur:.6e} fidelity={fid:.9} f_pop={fp:.3e} leakage={lk:.3e}\n",
                name = o.kind.name(),
                dur = o.duration,
                fid = o.fidelity,
                fp = o.f_population,
                lk = o.leakage,
            ));
        }
        out.push_str(&format!("final_fidelity={:.9}\n", self.final_fidelity));
        out
    }
}

/// |f><f| of the coupler embedded in `space`.
pub fn f_projector(space: &Arc<HilbertSpace>) -> Result<Operator> {
    embed(&qutrit_transition(Level::F, Level::F), space, "qutrit")
}

/// The |0>->|+>, |1>->|-> rotation on one cavity (identity above the qubit
/// subspace).
pub fn plus_minus_local(dim: usize) -> Result<Operator> {
    if dim < 2 {
        return Err(CoreError::InvalidDimension {
            dim,
            reason: "plus/minus rotation needs at least two levels".into(),
        });
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut triplets = vec![
        (0, 0, C64::new(r, 0.0)),
        (1, 0, C64::new(r, 0.0)),
        (0, 1, C64::new(r, 0.0)),
        (1, 1, C64::new(-r, 0.0)),
    ];
    for k in 2..dim {
        triplets.push((k, k, C64::new(1.0, 0.0)));
    }
    let m = CsrMatrix::from_triplets(dim, dim, &triplets);
    Operator::from_csr(HilbertSpace::single("mode", dim)?, m)
}

/// The step-(i) unitary: plus/minus rotation on single-photon cavities 2..n.
pub fn prep_plus_minus_operator(
    p: &DeviceParams,
    space: &Arc<HilbertSpace>,
) -> Result<Operator> {
    let mut acc = Operator::identity(space.clone());
    for j in 2..=p.n {
        let label = sps_label(j);
        let local = plus_minus_local(space.dim_of(&label)?)?;
        acc = embed(&local, space, &label)?.dot(&acc)?;
    }
    Ok(acc)
}

/// Displacement of cavity 1' by `amount`, embedded in `space`.
pub fn displace_c1p_operator(
    space: &Arc<HilbertSpace>,
    amount: C64,
) -> Result<Operator> {
    let dim = space.dim_of("c1p")?;
    embed(&displacement(amount, dim)?, space, "c1p")
}
