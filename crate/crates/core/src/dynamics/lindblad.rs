//! Open-system density-matrix propagation under a Lindblad master equation
//! with a (possibly time-dependent) Hamiltonian and a set of collapse
//! operators with rates.

use ndarray as nd;
use num_complex::Complex64 as C64;

use crate::device::TimeDependentHamiltonian;
use crate::dynamics::ode::{integrate_with_samples, OdeStats, PropagationConfig};
use crate::dynamics::schrodinger::default_max_step;
use crate::error::{CoreError, Result};
use crate::hilbert::density::DensityMatrix;
use crate::hilbert::operator::Operator;
use crate::sparse::CsrMatrix;

pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;
pub const NEGATIVITY_LIMIT: f64 = -1e-5;

/// A dissipation channel prepared for repeated right-hand-side application.
pub(crate) struct Channel {
    pub l: CsrMatrix,
    pub ldag: CsrMatrix,
    pub ldagl: CsrMatrix,
    pub rate: f64,
}

pub(crate) fn prepare_channels(
    h: &TimeDependentHamiltonian,
    collapse: &[(Operator, f64)],
) -> Result<Vec<Channel>> {
    collapse
        .iter()
        .map(|(op, rate)| {
            if op.space() != h.space() {
                return Err(CoreError::SpaceMismatch(
                    "collapse operator on a different space".into(),
                ));
            }
            if !(*rate >= 0.0) {
                return Err(CoreError::Parameter(format!(
                    "collapse rate must be non-negative, got {rate}"
                )));
            }
            let l = op.matrix().clone();
            let ldag = l.dagger();
            let ldagl = ldag.matmul(&l);
            Ok(Channel {
                l,
                ldag,
                ldagl,
                rate: *rate,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct LindbladResult {
    pub rho: DensityMatrix,
    /// |1 - tr rho(T)| before any correction.
    pub trace_drift: f64,
    pub samples: Vec<(f64, DensityMatrix)>,
    pub stats: OdeStats,
}

pub fn propagate_lindblad(
    h: &TimeDependentHamiltonian,
    collapse: &[(Operator, f64)],
    rho0: &DensityMatrix,
    config: &PropagationConfig,
) -> Result<LindbladResult> {
    if rho0.space() != h.space() {
        return Err(CoreError::SpaceMismatch(
            "initial density matrix on a different space than the Hamiltonian".into(),
        ));
    }
    rho0.validate()?;
    let channels = prepare_channels(h, collapse)?;
    let d = h.space().total_dim();
    let mut cfg = config.clone();
    if cfg.max_step.is_none() {
        cfg.max_step = default_max_step(h.max_freq());
    }
    let t_final = cfg.t_final;
    let mut work: nd::Array2<C64> = nd::Array2::zeros((d, d));
    let mut samples = Vec::new();
    let (m, stats) = integrate_with_samples(
        rho0.matrix(),
        0.0,
        &cfg,
        |t, rho: &nd::Array2<C64>, out: &mut nd::Array2<C64>| {
            h.apply_commutator_rhs(t, rho, out);
            for ch in &channels {
                if ch.rate == 0.0 {
                    continue;
                }
                // out += rate * L rho L† - (rate/2) {L†L, rho}
                work.fill(C64::new(0.0, 0.0));
                ch.l.mat_dense_acc(C64::new(1.0, 0.0), rho, &mut work);
                ch.ldag.dense_mat_acc(C64::new(ch.rate, 0.0), &work, out);
                let half = C64::new(-0.5 * ch.rate, 0.0);
                ch.ldagl.mat_dense_acc(half, rho, out);
                ch.ldagl.dense_mat_acc(half, rho, out);
            }
        },
        |_, rho| {
            // Keep the state exactly Hermitian against roundoff accumulation.
            for i in 0..d {
                for j in (i + 1)..d {
                    let avg = 0.5 * (rho[(i, j)] + rho[(j, i)].conj());
                    rho[(i, j)] = avg;
                    rho[(j, i)] = avg.conj();
                }
                rho[(i, i)] = C64::new(rho[(i, i)].re, 0.0);
            }
            true
        },
        |t, rho| {
            if (t - t_final).abs() > 1e-15 * t_final {
                samples.push((
                    t,
                    DensityMatrix::from_matrix_unchecked(rho0.space().clone(), rho.clone()),
                ));
            }
        },
    )?;
    let mut rho = DensityMatrix::from_matrix_unchecked(rho0.space().clone(), m);
    rho.symmetrize();
    let trace_drift = (rho.trace().re - 1.0).abs();
    if trace_drift > TRACE_DRIFT_LIMIT {
        return Err(CoreError::IntegratorFailure(format!(
            "trace drift {trace_drift:.3e} exceeds {TRACE_DRIFT_LIMIT:.1e}"
        )));
    }
    let floor = rho.eigenvalue_floor_estimate();
    if floor < NEGATIVITY_LIMIT {
        return Err(CoreError::IntegratorFailure(format!(
            "density matrix negativity {floor:.3e} exceeds {NEGATIVITY_LIMIT:.1e}"
        )));
    }
    Ok(LindbladResult {
        rho,
        trace_drift,
        samples,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::TimeDependentHamiltonian;
    use crate::hilbert::operator::{annihilation, embed, number};
    use crate::hilbert::space::HilbertSpace;
    use crate::hilbert::state::StateVector;
    use approx::assert_abs_diff_eq;

    /// Pure photon loss on a Fock state: <n>(t) = n0 e^{-kappa t}.
    #[test]
    fn photon_loss_decays_exponentially() {
        let space = HilbertSpace::single("mode", 6).unwrap();
        let h = TimeDependentHamiltonian::new(space.clone());
        let a = annihilation(6).unwrap();
        let a = embed(&a, &space, "mode").unwrap();
        let kappa = 2.5;
        let psi0 = StateVector::basis(space.clone(), &[3]).unwrap();
        let rho0 = DensityMatrix::from_pure(&psi0);
        let t = 0.4;
        let res =
            propagate_lindblad(&h, &[(a, kappa)], &rho0, &PropagationConfig::new(t)).unwrap();
        let n = embed(&number(6).unwrap(), &space, "mode").unwrap();
        let got = res.rho.expectation(&n).unwrap().re;
        assert_abs_diff_eq!(got, 3.0 * (-kappa * t).exp(), epsilon = 1e-7);
        assert!(res.trace_drift < 1e-8);
        res.rho.validate().unwrap();
    }

    /// Dephasing of a superposition: off-diagonals of a driven-free qubit-like
    /// mode decay at gamma/2 per the D[n] channel with n idempotent on {0,1}.
    #[test]
    fn dephasing_kills_coherence_at_known_rate() {
        let space = HilbertSpace::single("mode", 2).unwrap();
        let h = TimeDependentHamiltonian::new(space.clone());
        let proj = embed(&number(2).unwrap(), &space, "mode").unwrap();
        let gamma = 3.0;
        let amps = ndarray::Array1::from_vec(vec![
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ]);
        let psi0 = StateVector::from_amplitudes(space.clone(), amps).unwrap();
        let rho0 = DensityMatrix::from_pure(&psi0);
        let t = 0.3;
        let res =
            propagate_lindblad(&h, &[(proj, gamma)], &rho0, &PropagationConfig::new(t)).unwrap();
        // D[P] with projector P: rho_01 -> rho_01 e^{-gamma t / 2}.
        let got = res.rho.matrix()[(0, 1)].re;
        assert_abs_diff_eq!(got, 0.5 * (-0.5 * gamma * t).exp(), epsilon = 1e-7);
        // Populations untouched.
        assert_abs_diff_eq!(res.rho.matrix()[(0, 0)].re, 0.5, epsilon = 1e-9);
    }

    /// With no collapse channels the master equation reduces to unitary
    /// dynamics and purity is conserved.
    #[test]
    fn unitary_limit_preserves_purity() {
        let space = HilbertSpace::single("mode", 4).unwrap();
        let mut h = TimeDependentHamiltonian::new(space.clone());
        let a = embed(&annihilation(4).unwrap(), &space, "mode").unwrap();
        let drive = a.scale(C64::new(0.7, 0.0));
        h.add_term(drive, 0.0).unwrap();
        let psi0 = StateVector::basis(space.clone(), &[0]).unwrap();
        let rho0 = DensityMatrix::from_pure(&psi0);
        let res = propagate_lindblad(&h, &[], &rho0, &PropagationConfig::new(1.0)).unwrap();
        assert!((res.rho.purity() - 1.0).abs() < 1e-7);
    }
}
