//! Closed-form evolution maps for the protocol steps whose dynamics are known
//! analytically: the resonant coupler–cavity exchange, the dispersive
//! conditional phase accumulation, and the number-selective drive that swaps
//! the coupler's excitation into a phase on the readout cavity.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};
use crate::hilbert::state::StateVector;

/// Residual weight allowed outside the closed-form support of a map.
pub const SUPPORT_TOL: f64 = 1e-7;

/// Resonant excitation exchange between the coupler ("qutrit") and cavity
/// "c1": |e,0> -> cos(g t)|e,0> - i sin(g t)|g,1> and symmetrically
/// |g,1> -> cos(g t)|g,1> - i sin(g t)|e,0>; |g,0> is stationary.
///
/// The closed form holds only on span{|g,0>, |g,1>, |e,0>} of the
/// (qutrit, c1) pair; support elsewhere beyond [`SUPPORT_TOL`] is an error.
pub fn evolve_rabi(psi: &StateVector, g_r: f64, t: f64) -> Result<StateVector> {
    let space = psi.space().clone();
    let pq = space.position("qutrit")?;
    let pc = space.position("c1")?;
    let sq = space.strides()[pq];
    let sc = space.strides()[pc];
    let dc = space.dims()[pc];
    let amps = psi.amplitudes();
    let mut bad = 0.0f64;
    for (i, a) in amps.iter().enumerate() {
        let iq = (i / sq) % space.dims()[pq];
        let ic = (i / sc) % dc;
        let ok = (iq == 0 && ic <= 1) || (iq == 1 && ic == 0);
        if !ok {
            bad += a.norm_sqr();
        }
    }
    if bad > SUPPORT_TOL {
        return Err(CoreError::Precondition(format!(
            "resonant-exchange map: weight {bad:.3e} outside span{{|g,0>,|g,1>,|e,0>}}"
        )));
    }
    let th = g_r * t;
    let (c, s) = (th.cos(), th.sin());
    let mis = C64::new(0.0, -s);
    let mut out = amps.clone();
    // Enumerate flat indices with qutrit=e, c1=0 and mix with qutrit=g, c1=1.
    for i in 0..amps.len() {
        let iq = (i / sq) % space.dims()[pq];
        let ic = (i / sc) % dc;
        if iq == 1 && ic == 0 {
            let j = i - sq + sc; // (g, 1) partner
            let (ae0, ag1) = (amps[i], amps[j]);
            out[i] = ae0 * c + ag1 * mis;
            out[j] = ag1 * c + ae0 * mis;
        }
    }
    let mut res = StateVector::from_amplitudes(space, out)?;
    res.set_truncation_leakage(psi.truncation_leakage());
    Ok(res)
}

/// Dispersive conditional phase: each cavity named in `lambda_g` imprints
/// exp(+i lambda t n) on the coupler's ground branch, and each cavity in
/// `lambda_e` does the same on the excited branch. Support on the coupler's
/// second excited level beyond [`SUPPORT_TOL`] is an error.
pub fn evolve_dispersive_map(
    psi: &StateVector,
    lambda_g: &BTreeMap<String, f64>,
    lambda_e: &BTreeMap<String, f64>,
    t: f64,
) -> Result<StateVector> {
    let space = psi.space().clone();
    let pq = space.position("qutrit")?;
    let sq = space.strides()[pq];
    let dq = space.dims()[pq];
    // Precompute (stride, dim, lambda) per branch.
    let resolve = |map: &BTreeMap<String, f64>| -> Result<Vec<(usize, usize, f64)>> {
        map.iter()
            .map(|(label, &lam)| {
                let p = space.position(label)?;
                Ok((space.strides()[p], space.dims()[p], lam))
            })
            .collect()
    };
    let gs = resolve(lambda_g)?;
    let es = resolve(lambda_e)?;
    let amps = psi.amplitudes();
    let mut f_weight = 0.0f64;
    let mut out = amps.clone();
    for i in 0..amps.len() {
        let iq = (i / sq) % dq;
        let branch = match iq {
            0 => &gs,
            1 => &es,
            _ => {
                f_weight += amps[i].norm_sqr();
                continue;
            }
        };
        let mut phase = 0.0f64;
        for &(stride, dim, lam) in branch {
            let n = (i / stride) % dim;
            phase += lam * t * n as f64;
        }
        out[i] = amps[i] * C64::from_polar(1.0, phase);
    }
    if f_weight > SUPPORT_TOL {
        return Err(CoreError::Precondition(format!(
            "dispersive map: second-excited-level weight {f_weight:.3e} exceeds tolerance"
        )));
    }
    let mut res = StateVector::from_amplitudes(space, out)?;
    res.set_truncation_leakage(psi.truncation_leakage());
    Ok(res)
}

fn conditional_drive_apply(
    psi: &StateVector,
    omega_tilde: f64,
    rabi: f64,
    t: f64,
    phi: f64,
    inverse: bool,
) -> Result<StateVector> {
    let space = psi.space().clone();
    let pq = space.position("qutrit")?;
    let pc = space.position("c1p")?;
    let sq = space.strides()[pq];
    let sc = space.strides()[pc];
    let dq = space.dims()[pq];
    let dc = space.dims()[pc];
    let amps = psi.amplitudes();
    // Preconditions: no second-excited-level support; the excited branch may
    // only hold photons at the truncation-tail level, since the drive is
    // number-selective on the vacuum.
    let mut f_weight = 0.0f64;
    let mut e_photon_weight = 0.0f64;
    for (i, a) in amps.iter().enumerate() {
        let iq = (i / sq) % dq;
        let n = (i / sc) % dc;
        if iq == 2 {
            f_weight += a.norm_sqr();
        } else if iq == 1 && n >= 1 {
            e_photon_weight += a.norm_sqr();
        }
    }
    if f_weight > SUPPORT_TOL {
        return Err(CoreError::Precondition(format!(
            "conditional-drive map: second-excited-level weight {f_weight:.3e}"
        )));
    }
    if e_photon_weight > 1e-4 {
        return Err(CoreError::Precondition(format!(
            "conditional-drive map: excited branch carries photon weight {e_photon_weight:.3e}; \
             branch correlation violated"
        )));
    }
    let theta = rabi * t;
    let (cth, sth) = (theta.cos(), theta.sin());
    let half = C64::from_polar(1.0, omega_tilde * t);
    // Forward unitary on the (level, photon-number) pair:
    //   (e,0) -> e^{-i w t} cos |e,0> - i e^{+i phi} e^{+i w t} sin |g,0>
    //   (g,0) -> e^{+i w t} cos |g,0> - i e^{-i phi} e^{-i w t} sin |e,0>
    //   (g,n>=1) -> e^{+i 2 w t (n+1/2)} (g,n)
    //   (e,n>=1) -> e^{-i 2 w t (n+1/2)} (e,n)
    // with w the conditional rotation rate. The inverse is the adjoint.
    let m_ee = half.conj() * cth;
    let m_ge = C64::new(0.0, -1.0) * C64::from_polar(1.0, phi) * half * sth;
    let m_gg = half * cth;
    let m_eg = C64::new(0.0, -1.0) * C64::from_polar(1.0, -phi) * half.conj() * sth;
    let (m_ee, m_ge, m_gg, m_eg) = if inverse {
        (m_ee.conj(), m_eg.conj(), m_gg.conj(), m_ge.conj())
    } else {
        (m_ee, m_ge, m_gg, m_eg)
    };
    let mut out = amps.clone();
    for i in 0..amps.len() {
        let iq = (i / sq) % dq;
        let n = (i / sc) % dc;
        match (iq, n) {
            (2, _) => {}
            (1, 0) => {
                let j = i - sq; // (g, 0) partner
                let (ae, ag) = (amps[i], amps[j]);
                out[i] = m_ee * ae + m_eg * ag;
                out[j] = m_ge * ae + m_gg * ag;
            }
            (1, _) => {
                let ph = 2.0 * omega_tilde * t * (n as f64 + 0.5);
                let ph = if inverse { ph } else { -ph };
                out[i] = amps[i] * C64::from_polar(1.0, ph);
            }
            (0, 0) => {} // handled together with (e, 0)
            (0, _) => {
                let ph = 2.0 * omega_tilde * t * (n as f64 + 0.5);
                let ph = if inverse { -ph } else { ph };
                out[i] = amps[i] * C64::from_polar(1.0, ph);
            }
            _ => unreachable!(),
        }
    }
    let mut res = StateVector::from_amplitudes(space, out)?;
    res.set_truncation_leakage(psi.truncation_leakage());
    Ok(res)
}

/// Number-selective drive map on the (coupler, cavity "c1p") pair: the vacuum
/// block rotates between |e,0> and |g,0> at the given Rabi rate while every
/// photon-carrying component only accumulates the conditional phase
/// exp(-+ i 2 w t (n + 1/2)) on the excited/ground branch.
pub fn evolve_conditional_drive_map(
    psi: &StateVector,
    omega_tilde: f64,
    rabi: f64,
    t: f64,
    phi: f64,
) -> Result<StateVector> {
    conditional_drive_apply(psi, omega_tilde, rabi, t, phi, false)
}

/// Exact inverse (adjoint) of [`evolve_conditional_drive_map`].
pub fn evolve_conditional_drive_map_inverse(
    psi: &StateVector,
    omega_tilde: f64,
    rabi: f64,
    t: f64,
    phi: f64,
) -> Result<StateVector> {
    conditional_drive_apply(psi, omega_tilde, rabi, t, phi, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::space::HilbertSpace;
    use crate::hilbert::state::{coherent_state, StateVector};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn qc1_space(dim: usize) -> std::sync::Arc<HilbertSpace> {
        HilbertSpace::new(&[("qutrit", 3), ("c1", dim)]).unwrap()
    }

    #[test]
    fn rabi_half_period_transfers_excitation() {
        let space = qc1_space(3);
        let psi = StateVector::basis(space.clone(), &[1, 0]).unwrap();
        let g = 2.0e8;
        let out = evolve_rabi(&psi, g, 0.5 * PI / g).unwrap();
        let got = out.amplitudes()[space.flat_index(&[0, 1])];
        assert!((got - C64::new(0.0, -1.0)).norm() < 1e-12);
        assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rabi_rejects_unsupported_components() {
        let space = qc1_space(3);
        let psi = StateVector::basis(space.clone(), &[0, 2]).unwrap();
        assert!(evolve_rabi(&psi, 1.0, 1.0).is_err());
        let psi2 = StateVector::basis(space, &[2, 0]).unwrap();
        assert!(evolve_rabi(&psi2, 1.0, 1.0).is_err());
    }

    #[test]
    fn rabi_is_unitary_on_support() {
        let space = qc1_space(2);
        let a = StateVector::basis(space.clone(), &[1, 0]).unwrap();
        let b = StateVector::basis(space.clone(), &[0, 1]).unwrap();
        let psi = a.scale(C64::new(0.6, 0.0)).add(&b.scale(C64::new(0.0, 0.8))).unwrap();
        let out = evolve_rabi(&psi, 3.0, 0.77).unwrap();
        assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-12);
        // Round trip through -t restores the input.
        let back = evolve_rabi(&out, 3.0, -0.77).unwrap();
        assert!((back.overlap(&psi).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dispersive_map_applies_branch_phases() {
        let space = HilbertSpace::new(&[("qutrit", 3), ("c2", 4), ("c1p", 4)]).unwrap();
        let lam_g: BTreeMap<String, f64> = [("c2".to_string(), 5.0)].into();
        let lam_e: BTreeMap<String, f64> = [("c1p".to_string(), 7.0)].into();
        let t = 0.3;
        // Ground branch with 2 photons in c2: phase e^{i*5*t*2}.
        let psi = StateVector::basis(space.clone(), &[0, 2, 1]).unwrap();
        let out = evolve_dispersive_map(&psi, &lam_g, &lam_e, t).unwrap();
        let amp = out.amplitudes()[space.flat_index(&[0, 2, 1])];
        assert!((amp - C64::from_polar(1.0, 5.0 * t * 2.0)).norm() < 1e-12);
        // Excited branch with 3 photons in c1p: phase e^{i*7*t*3}.
        let psi = StateVector::basis(space.clone(), &[1, 1, 3]).unwrap();
        let out = evolve_dispersive_map(&psi, &lam_g, &lam_e, t).unwrap();
        let amp = out.amplitudes()[space.flat_index(&[1, 1, 3])];
        assert!((amp - C64::from_polar(1.0, 7.0 * t * 3.0)).norm() < 1e-12);
        // Second excited level is rejected.
        let psi = StateVector::basis(space, &[2, 0, 0]).unwrap();
        assert!(evolve_dispersive_map(&psi, &lam_g, &lam_e, t).is_err());
    }

    #[test]
    fn conditional_drive_swaps_vacuum_excitation() {
        let space = HilbertSpace::new(&[("qutrit", 3), ("c1p", 6)]).unwrap();
        let psi = StateVector::basis(space.clone(), &[1, 0]).unwrap();
        let (w, om) = (2.0e6, 3.0e6);
        let t = 0.5 * PI / om;
        let out = evolve_conditional_drive_map(&psi, w, om, t, PI).unwrap();
        // |e,0> -> i e^{i w t} |g,0> at a half rotation with phase pi.
        let want = C64::new(0.0, 1.0) * C64::from_polar(1.0, w * t);
        let got = out.amplitudes()[space.flat_index(&[0, 0])];
        assert!((got - want).norm() < 1e-12, "got {got}, want {want}");
    }

    #[test]
    fn conditional_drive_rotates_coherent_branch() {
        let dim = 40;
        let alpha = C64::new(3.72, 0.0); // mean photon number ~13.8
        let qg = StateVector::basis(HilbertSpace::single("qutrit", 3).unwrap(), &[0]).unwrap();
        let cav = coherent_state(alpha, dim).unwrap().relabel("mode", "c1p").unwrap();
        let psi = qg.tensor(&cav).unwrap();
        let (w, om) = (2.0e6, 3.0e6);
        let t = 0.5 * PI / om;
        let out = evolve_conditional_drive_map(&psi, w, om, t, PI).unwrap();
        // Target: e^{i w t} |g> |alpha e^{i 2 w t}>, exact up to the vacuum
        // component of the coherent state (weight e^{-|alpha|^2}).
        let rotated = coherent_state(alpha * C64::from_polar(1.0, 2.0 * w * t), dim)
            .unwrap()
            .relabel("mode", "c1p")
            .unwrap();
        let target = qg.tensor(&rotated).unwrap().scale(C64::from_polar(1.0, w * t));
        let fid = out.overlap(&target).unwrap().norm();
        assert!(fid > 1.0 - 1e-5, "overlap {fid}");
        assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn conditional_drive_inverse_roundtrips() {
        let space = HilbertSpace::new(&[("qutrit", 3), ("c1p", 8)]).unwrap();
        let e0 = StateVector::basis(space.clone(), &[1, 0]).unwrap();
        let g3 = StateVector::basis(space.clone(), &[0, 3]).unwrap();
        let psi = e0
            .scale(C64::new(0.8, 0.0))
            .add(&g3.scale(C64::new(0.0, -0.6)))
            .unwrap();
        let (w, om, t, phi) = (1.3e6, 2.1e6, 3.3e-7, 1.1);
        let fwd = evolve_conditional_drive_map(&psi, w, om, t, phi).unwrap();
        let back = evolve_conditional_drive_map_inverse(&fwd, w, om, t, phi).unwrap();
        let ov = back.overlap(&psi).unwrap();
        assert!((ov - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn conditional_drive_rejects_excited_branch_photons() {
        let space = HilbertSpace::new(&[("qutrit", 3), ("c1p", 6)]).unwrap();
        let bad = StateVector::basis(space.clone(), &[1, 2]).unwrap();
        assert!(evolve_conditional_drive_map(&bad, 1.0, 1.0, 1.0, 0.0).is_err());
        let f = StateVector::basis(space, &[2, 0]).unwrap();
        assert!(evolve_conditional_drive_map(&f, 1.0, 1.0, 1.0, 0.0).is_err());
    }
}
