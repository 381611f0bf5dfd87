use std::sync::Arc;

use ndarray as nd;
use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};
use crate::hilbert::operator::Operator;
use crate::hilbert::space::HilbertSpace;

pub const NORM_TOL: f64 = 1e-9;
/// Default acceptable coherent-state truncation leakage.
pub const DEFAULT_LEAKAGE_BOUND: f64 = 1e-3;

/// Pure state tagged with its space. Normalized after `normalize`; raw
/// coherent-state truncation leakage is carried along as a diagnostic.
#[derive(Debug, Clone)]
pub struct StateVector {
    space: Arc<HilbertSpace>,
    amplitudes: nd::Array1<C64>,
    truncation_leakage: f64,
}

impl StateVector {
    pub fn from_amplitudes(
        space: Arc<HilbertSpace>,
        amplitudes: nd::Array1<C64>,
    ) -> Result<StateVector> {
        if amplitudes.len() != space.total_dim() {
            return Err(CoreError::DimensionMismatch {
                expected: space.total_dim(),
                got: amplitudes.len(),
                context: "state amplitudes vs space".into(),
            });
        }
        Ok(StateVector {
            space,
            amplitudes,
            truncation_leakage: 0.0,
        })
    }

    /// Computational basis state |multi⟩.
    pub fn basis(space: Arc<HilbertSpace>, multi: &[usize]) -> Result<StateVector> {
        if multi.len() != space.n_subsystems() {
            return Err(CoreError::DimensionMismatch {
                expected: space.n_subsystems(),
                got: multi.len(),
                context: "basis multi-index length".into(),
            });
        }
        for (&i, &d) in multi.iter().zip(space.dims()) {
            if i >= d {
                return Err(CoreError::InvalidDimension {
                    dim: i,
                    reason: format!("basis index out of range (dim {d})"),
                });
            }
        }
        let mut amps = nd::Array1::zeros(space.total_dim());
        let idx = space.flat_index(multi);
        amps[idx] = C64::new(1.0, 0.0);
        StateVector::from_amplitudes(space, amps)
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn amplitudes(&self) -> &nd::Array1<C64> {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut nd::Array1<C64> {
        &mut self.amplitudes
    }

    pub fn truncation_leakage(&self) -> f64 {
        self.truncation_leakage
    }

    pub fn set_truncation_leakage(&mut self, leakage: f64) {
        self.truncation_leakage = leakage;
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n < 1e-14 {
            return Err(CoreError::InvalidState("cannot normalize zero vector".into()));
        }
        let inv = C64::new(1.0 / n, 0.0);
        self.amplitudes.mapv_inplace(|v| v * inv);
        Ok(())
    }

    pub fn normalized(mut self) -> Result<StateVector> {
        self.normalize()?;
        Ok(self)
    }

    pub fn check_normalized(&self) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(CoreError::InvalidState(format!(
                "state norm {n} deviates from 1 beyond tolerance"
            )));
        }
        Ok(())
    }

    /// ⟨self|other⟩
    pub fn overlap(&self, other: &StateVector) -> Result<C64> {
        if self.space != other.space {
            return Err(CoreError::SpaceMismatch(
                "overlap between states on different spaces".into(),
            ));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn scale(&self, c: C64) -> StateVector {
        StateVector {
            space: self.space.clone(),
            amplitudes: self.amplitudes.mapv(|v| v * c),
            truncation_leakage: self.truncation_leakage,
        }
    }

    pub fn add(&self, other: &StateVector) -> Result<StateVector> {
        if self.space != other.space {
            return Err(CoreError::SpaceMismatch(
                "adding states on different spaces".into(),
            ));
        }
        Ok(StateVector {
            space: self.space.clone(),
            amplitudes: &self.amplitudes + &other.amplitudes,
            truncation_leakage: self.truncation_leakage.max(other.truncation_leakage),
        })
    }

    /// Tensor product; subsystem labels must stay unique.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let subs: Vec<(&str, usize)> = self
            .space
            .labels()
            .iter()
            .zip(self.space.dims())
            .chain(other.space.labels().iter().zip(other.space.dims()))
            .map(|(l, &d)| (l.as_str(), d))
            .collect();
        let space = HilbertSpace::new(&subs)?;
        let mut amps = nd::Array1::zeros(space.total_dim());
        let db = other.amplitudes.len();
        for (i, &a) in self.amplitudes.iter().enumerate() {
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, &b) in other.amplitudes.iter().enumerate() {
                amps[i * db + j] = a * b;
            }
        }
        let mut out = StateVector::from_amplitudes(space, amps)?;
        out.truncation_leakage = self.truncation_leakage + other.truncation_leakage;
        Ok(out)
    }

    /// Apply an operator (no renormalization).
    pub fn apply(&self, op: &Operator) -> Result<StateVector> {
        if *op.space() != self.space {
            return Err(CoreError::SpaceMismatch(
                "operator and state on different spaces".into(),
            ));
        }
        Ok(StateVector {
            space: self.space.clone(),
            amplitudes: op.matrix().matvec(&self.amplitudes),
            truncation_leakage: self.truncation_leakage,
        })
    }

    /// ⟨ψ|A|ψ⟩
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        let apsi = self.apply(op)?;
        self.overlap(&apsi)
    }

    /// Rename a subsystem label (dimensions unchanged). Used when gluing
    /// single-mode states into a composite register.
    pub fn relabel(&self, from: &str, to: &str) -> Result<StateVector> {
        let subs: Vec<(&str, usize)> = self
            .space
            .labels()
            .iter()
            .zip(self.space.dims())
            .map(|(l, &d)| (if l == from { to } else { l.as_str() }, d))
            .collect();
        self.space.position(from)?;
        let space = HilbertSpace::new(&subs)?;
        StateVector::from_amplitudes(space, self.amplitudes.clone()).map(|mut s| {
            s.truncation_leakage = self.truncation_leakage;
            s
        })
    }
}

/// Truncated coherent state |alpha⟩ with amplitudes e^{-|α|²/2} αⁿ/√(n!),
/// renormalized; the pre-normalization leakage is recorded on the state.
pub fn coherent_state(alpha: C64, dim: usize) -> Result<StateVector> {
    coherent_state_bounded(alpha, dim, DEFAULT_LEAKAGE_BOUND)
}

pub fn coherent_state_bounded(alpha: C64, dim: usize, bound: f64) -> Result<StateVector> {
    if dim < 2 {
        return Err(CoreError::InvalidDimension {
            dim,
            reason: "coherent state needs at least two Fock levels".into(),
        });
    }
    let space = HilbertSpace::single("mode", dim)?;
    let mut amps = nd::Array1::zeros(dim);
    if alpha == C64::new(0.0, 0.0) {
        amps[0] = C64::new(1.0, 0.0);
        return StateVector::from_amplitudes(space, amps);
    }
    // Work in log magnitude to dodge factorial overflow at large n.
    let r = alpha.norm();
    let theta = alpha.arg();
    let mut log_mag = -r * r / 2.0;
    let mut weight = 0.0f64;
    for n in 0..dim {
        if n > 0 {
            log_mag += r.ln() - 0.5 * (n as f64).ln();
        }
        let mag = log_mag.exp();
        let phase = theta * n as f64;
        amps[n] = C64::from_polar(mag, phase);
        weight += mag * mag;
    }
    let leakage = (1.0 - weight).max(0.0);
    if leakage > bound {
        return Err(CoreError::TruncationTooSmall { leakage, bound });
    }
    let mut state = StateVector::from_amplitudes(space, amps)?;
    state.normalize()?;
    state.truncation_leakage = leakage;
    Ok(state)
}

/// Default per-cavity truncation for a mode whose largest mean photon number
/// is `nbar_max`: Poisson-tail rule ceil(n̄ + 5√n̄) + 4.
pub fn default_mode_dim(nbar_max: f64) -> usize {
    (nbar_max + 5.0 * nbar_max.sqrt()).ceil() as usize + 4
}
