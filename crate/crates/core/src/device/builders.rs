//! Interaction-picture Hamiltonian and collapse-operator construction for
//! every regime the protocol uses: the resonant swap, the multi-cavity
//! dispersive stage (idealized and with unwanted couplings plus crosstalk),
//! the conditional drive stage (idealized, effective, and with unwanted
//! couplings), and the dissipation channels.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::device::hamiltonian::TimeDependentHamiltonian;
use crate::device::params::{cs_label, sps_label, DeviceParams};
use crate::error::{CoreError, Result};
use crate::hilbert::operator::{
    annihilation, embed, embed_product, qutrit_sigma_z, qutrit_transition, Level, Operator,
};
use crate::hilbert::space::HilbertSpace;
use crate::sparse::CsrMatrix;

fn mode_annihilation(space: &Arc<HilbertSpace>, label: &str) -> Result<Operator> {
    let dim = space.dim_of(label)?;
    embed(&annihilation(dim)?, space, label)
}

fn qutrit_raise(space: &Arc<HilbertSpace>, from: Level, to: Level) -> Result<Operator> {
    embed(&qutrit_transition(from, to), space, "qutrit")
}

/// a_label σ_{to,from}⁺ embedded in one pass.
fn coupling_op(
    space: &Arc<HilbertSpace>,
    label: &str,
    from: Level,
    to: Level,
    strength: f64,
) -> Result<Operator> {
    let dim = space.dim_of(label)?;
    let a = annihilation(dim)?;
    let sp = qutrit_transition(from, to);
    Ok(embed_product(&[(&sp, "qutrit"), (&a, label)], space)?
        .scale(C64::new(strength, 0.0)))
}

/// Resonant swap Hamiltonian: g_r (a_1 σ_eg⁺ + h.c.), static.
pub fn build_h1(p: &DeviceParams, space: &Arc<HilbertSpace>) -> Result<TimeDependentHamiltonian> {
    let mut h = TimeDependentHamiltonian::new(space.clone());
    let term = coupling_op(space, "c1", Level::G, Level::E, p.g_r)?;
    h.add_static(term.add(&term.dagger())?)?;
    Ok(h)
}

/// Idealized dispersive-stage Hamiltonian: the wanted oscillating couplings
/// Σ_j g_j(e^{iΔ_j t} a_j σ_fg⁺ + h.c.) + Σ_j' μ_j'(e^{iΔ_j' t} b_j' σ_fe⁺ + h.c.).
pub fn build_h2(p: &DeviceParams, space: &Arc<HilbertSpace>) -> Result<TimeDependentHamiltonian> {
    if p.n < 2 {
        return Err(CoreError::Unsupported(
            "the dispersive stage needs at least two qubit pairs".into(),
        ));
    }
    let mut h = TimeDependentHamiltonian::new(space.clone());
    for j in 2..=p.n {
        let label = sps_label(j);
        let g = *p.g.get(&label).ok_or_else(|| {
            CoreError::Parameter(format!("missing coupling g for {label}"))
        })?;
        if g == 0.0 {
            continue;
        }
        let delta = p.delta_sps(&label)?;
        if delta.abs() < 1e-3 * g {
            return Err(CoreError::Parameter(format!(
                "cavity {label} detuning collides with the resonant regime"
            )));
        }
        h.add_term(coupling_op(space, &label, Level::G, Level::F, g)?, delta)?;
    }
    for j in 1..=p.n {
        let label = cs_label(j);
        let mu = *p.mu.get(&label).ok_or_else(|| {
            CoreError::Parameter(format!("missing coupling mu for {label}"))
        })?;
        if mu == 0.0 {
            continue;
        }
        let delta = p.delta_cs(&label)?;
        if delta.abs() < 1e-3 * mu {
            return Err(CoreError::Parameter(format!(
                "cavity {label} detuning collides with the resonant regime"
            )));
        }
        h.add_term(coupling_op(space, &label, Level::E, Level::F, mu)?, delta)?;
    }
    Ok(h)
}

/// Static effective dispersive Hamiltonian. With `include_f_terms` false:
/// -Σ_j λ_j σ_g n̂_j - Σ_j' λ_j' σ_e n̂_j' (f level assumed unpopulated).
/// With it true, the full form including the f-level shifts
/// +Σ_j (g_j²/Δ_j) σ_f a_j a_j† + Σ_j' (μ²/Δ') σ_f b b†.
pub fn build_h_eff_dispersive(
    p: &DeviceParams,
    space: &Arc<HilbertSpace>,
    include_f_terms: bool,
) -> Result<TimeDependentHamiltonian> {
    let mut h = TimeDependentHamiltonian::new(space.clone());
    let sg = qutrit_transition(Level::G, Level::G);
    let se = qutrit_transition(Level::E, Level::E);
    let sf = qutrit_transition(Level::F, Level::F);
    let mut add_shift = |label: &str, lam: f64, proj: &Operator| -> Result<()> {
        let dim = space.dim_of(label)?;
        let a = annihilation(dim)?;
        let n = a.dagger().dot(&a)?;
        let term =
            embed_product(&[(proj, "qutrit"), (&n, label)], space)?.scale(C64::new(-lam, 0.0));
        h.add_static(term)?;
        if include_f_terms {
            let aad = a.dot(&a.dagger())?;
            let fterm = embed_product(&[(&sf, "qutrit"), (&aad, label)], space)?
                .scale(C64::new(lam, 0.0));
            h.add_static(fterm)?;
        }
        Ok(())
    };
    for (label, &g) in &p.g {
        let lam = g * g / p.delta_sps(label)?;
        add_shift(label, lam, &sg)?;
    }
    for (label, &mu) in &p.mu {
        let lam = mu * mu / p.delta_cs(label)?;
        add_shift(label, lam, &se)?;
    }
    Ok(h)
}

/// Conditional-drive Hamiltonian:
/// g̃ e^{iΔ̃t} a_1' σ_eg⁺ + Ω_p e^{-i[(ω_p-ω_eg)t+φ]} σ_eg⁺ + h.c.
pub fn build_h3(p: &DeviceParams, space: &Arc<HilbertSpace>) -> Result<TimeDependentHamiltonian> {
    let mut h = TimeDependentHamiltonian::new(space.clone());
    if p.g_tilde > 0.0 {
        h.add_term(
            coupling_op(space, "c1p", Level::G, Level::E, p.g_tilde)?,
            p.delta_tilde(),
        )?;
    }
    if p.drive_rabi > 0.0 {
        let drive = qutrit_raise(space, Level::G, Level::E)?
            .scale(C64::from_polar(p.drive_rabi, -p.phi));
        h.add_term(drive, -(p.omega_p - p.omega_eg))?;
    }
    Ok(h)
}

/// Number-conditioned effective drive Hamiltonian in the Stark rotating
/// frame: Ω_p e^{-iφ} e^{i4ω̃ n̂ t} σ_eg⁺ + h.c., expressed as one oscillating
/// term per Fock level of cavity 1'.
pub fn build_h_eff_drive(
    p: &DeviceParams,
    space: &Arc<HilbertSpace>,
) -> Result<TimeDependentHamiltonian> {
    let mut h = TimeDependentHamiltonian::new(space.clone());
    let omega_tilde = p.g_tilde * p.g_tilde / (2.0 * p.delta_tilde());
    let dim = space.dim_of("c1p")?;
    let sp = qutrit_transition(Level::G, Level::E);
    for n in 0..dim {
        let mut proj = vec![C64::new(0.0, 0.0); dim];
        proj[n] = C64::new(1.0, 0.0);
        let pn = Operator::from_csr(
            HilbertSpace::single("mode", dim)?,
            CsrMatrix::diag(&proj),
        )?;
        let term = embed_product(&[(&sp, "qutrit"), (&pn, "c1p")], space)?
            .scale(C64::from_polar(p.drive_rabi, -p.phi));
        h.add_term(term, 4.0 * omega_tilde * n as f64)?;
    }
    Ok(h)
}

/// Effective drive Hamiltonian in the interaction picture of the
/// conditional-drive stage (before the Stark rotating frame):
/// 2ω̃(n̂_1' + 1/2)σ_z + (Ω_p e^{-i[(ω_p-ω_eg)t+φ]} σ_eg⁺ + h.c.).
/// For ω_p = ω_eg + g̃²/Δ̃ the drive term becomes static at the shipped point.
pub fn build_h_eff_drive_static(
    p: &DeviceParams,
    space: &Arc<HilbertSpace>,
) -> Result<TimeDependentHamiltonian> {
    let mut h = TimeDependentHamiltonian::new(space.clone());
    h.add_static(stark_frame_generator(p, space)?)?;
    if p.drive_rabi > 0.0 {
        let drive = qutrit_raise(space, Level::G, Level::E)?
            .scale(C64::from_polar(p.drive_rabi, -p.phi));
        h.add_term(drive, -(p.omega_p - p.omega_eg))?;
    }
    Ok(h)
}

/// The Stark-frame generator H₀ = 2ω̃ (n̂_1' + 1/2) σ_z.
pub fn stark_frame_generator(
    p: &DeviceParams,
    space: &Arc<HilbertSpace>,
) -> Result<Operator> {
    let omega_tilde = p.g_tilde * p.g_tilde / (2.0 * p.delta_tilde());
    let dim = space.dim_of("c1p")?;
    let entries: Vec<C64> = (0..dim)
        .map(|n| C64::new(2.0 * omega_tilde * (n as f64 + 0.5), 0.0))
        .collect();
    let nhalf = Operator::from_csr(
        HilbertSpace::single("mode", dim)?,
        CsrMatrix::diag(&entries),
    )?;
    embed_product(&[(&qutrit_sigma_z(), "qutrit"), (&nhalf, "c1p")], space)
}

/// Exact rotating-frame transform U(t) = e^{-i H₀ t} for the Stark frame;
/// diagonal, so built directly. `U(t)ψ_rotating` returns states from the
/// Stark frame to the conditional-drive interaction picture.
pub fn stark_frame_unitary(
    p: &DeviceParams,
    space: &Arc<HilbertSpace>,
    t: f64,
) -> Result<Operator> {
    let h0 = stark_frame_generator(p, space)?;
    let d = space.total_dim();
    let mut entries = vec![C64::new(0.0, 0.0); d];
    for (i, entry) in entries.iter_mut().enumerate() {
        let e = h0.matrix().get(i, i).re;
        *entry = C64::from_polar(1.0, -e * t);
    }
    Operator::from_csr(space.clone(), CsrMatrix::diag(&entries))
}

/// Dispersive-stage Hamiltonian with every unwanted qutrit-channel coupling:
/// nine oscillating coupling terms for the two-pair device, plus crosstalk.
pub fn build_h2_full(
    p: &DeviceParams,
    space: &Arc<HilbertSpace>,
) -> Result<TimeDependentHamiltonian> {
    if p.n != 2 {
        return Err(CoreError::Unsupported(
            "the full dispersive-stage model is defined for exactly two pairs".into(),
        ));
    }
    let mut h = build_h2(p, space)?;
    let u = &p.unwanted;
    let g2 = p.g["c2"];
    // SPS cavity c2: unwanted f-e and e-g channels.
    for (ratio, from, to, omega_q) in [
        (u.g_prime, Level::E, Level::F, p.omega_fe),
        (u.g_dprime, Level::G, Level::E, p.omega_eg),
    ] {
        let strength = ratio * g2;
        if strength > 0.0 {
            h.add_term(
                coupling_op(space, "c2", from, to, strength)?,
                omega_q - p.omega_of("c2")?,
            )?;
        }
    }
    // CS cavities: unwanted f-g and e-g channels.
    for label in ["c1p", "c2p"] {
        let mu = p.mu[label];
        for (ratio, from, to, omega_q) in [
            (u.mu_prime, Level::G, Level::F, p.omega_fg),
            (u.mu_dprime, Level::G, Level::E, p.omega_eg),
        ] {
            let strength = ratio * mu;
            if strength > 0.0 {
                h.add_term(
                    coupling_op(space, label, from, to, strength)?,
                    omega_q - p.omega_of(label)?,
                )?;
            }
        }
    }
    let xt = build_crosstalk(p, space)?;
    for term in xt.terms() {
        h.add_term(term.op.clone(), term.freq)?;
    }
    h.add_static(xt.static_part().clone())?;
    Ok(h)
}

/// Inter-cavity crosstalk Σ_{k<l} g_kl (e^{iΔ_kl t} a_k† a_l + h.c.), limited
/// to the cavities present in `space`.
pub fn build_crosstalk(
    p: &DeviceParams,
    space: &Arc<HilbertSpace>,
) -> Result<TimeDependentHamiltonian> {
    let mut h = TimeDependentHamiltonian::new(space.clone());
    for ((k, l), &g_kl) in &p.crosstalk {
        if g_kl == 0.0 {
            continue;
        }
        if space.position(k).is_err() || space.position(l).is_err() {
            continue;
        }
        let delta = p.delta_crosstalk(k, l)?;
        if delta == 0.0 {
            log::warn!("crosstalk pair ({k},{l}) is resonant (zero frequency difference)");
        }
        let ak = annihilation(space.dim_of(k)?)?;
        let al = annihilation(space.dim_of(l)?)?;
        let akd = ak.dagger();
        let term = embed_product(&[(&akd, k.as_str()), (&al, l.as_str())], space)?
            .scale(C64::new(g_kl, 0.0));
        h.add_term(term, delta)?;
    }
    Ok(h)
}

/// Conditional-drive Hamiltonian with unwanted channels: six oscillating
/// terms (three cavity couplings on e-g/f-g/f-e, three drive couplings).
pub fn build_h3_full(
    p: &DeviceParams,
    space: &Arc<HilbertSpace>,
) -> Result<TimeDependentHamiltonian> {
    let mut h = build_h3(p, space)?;
    let u = &p.unwanted;
    for (ratio, from, to, omega_q) in [
        (u.g_tilde_prime, Level::G, Level::F, p.omega_fg),
        (u.g_tilde_dprime, Level::E, Level::F, p.omega_fe),
    ] {
        let strength = ratio * p.g_tilde;
        if strength > 0.0 {
            h.add_term(
                coupling_op(space, "c1p", from, to, strength)?,
                omega_q - p.omega_c1p_shifted,
            )?;
        }
    }
    for (ratio, from, to, omega_q) in [
        (u.drive_prime, Level::G, Level::F, p.omega_fg),
        (u.drive_dprime, Level::E, Level::F, p.omega_fe),
    ] {
        let strength = ratio * p.drive_rabi;
        if strength > 0.0 {
            let drive = embed(&qutrit_transition(from, to), space, "qutrit")?
                .scale(C64::from_polar(strength, -p.phi));
            h.add_term(drive, -(p.omega_p - omega_q))?;
        }
    }
    Ok(h)
}

/// Dissipation channels: cavity decay, qutrit relaxation (e→g, f→e, f→g),
/// and pure dephasing of e and f. Channels with zero rate are omitted.
pub fn collapse_operators(
    p: &DeviceParams,
    space: &Arc<HilbertSpace>,
) -> Result<Vec<(Operator, f64)>> {
    let mut out = Vec::new();
    for label in space.labels() {
        if label == "qutrit" {
            continue;
        }
        let rate = p.kappa.get(label).copied().unwrap_or(0.0);
        if rate < 0.0 {
            return Err(CoreError::Parameter(format!("negative kappa for {label}")));
        }
        if rate > 0.0 {
            out.push((mode_annihilation(space, label)?, rate));
        }
    }
    let channels = [
        (p.gamma_eg, Level::E, Level::G),
        (p.gamma_fe, Level::F, Level::E),
        (p.gamma_fg, Level::F, Level::G),
    ];
    for (rate, from, to) in channels {
        if rate < 0.0 {
            return Err(CoreError::Parameter("negative relaxation rate".into()));
        }
        if rate > 0.0 {
            out.push((qutrit_raise(space, from, to)?, rate));
        }
    }
    for (rate, level) in [(p.gamma_e_phi, Level::E), (p.gamma_f_phi, Level::F)] {
        if rate < 0.0 {
            return Err(CoreError::Parameter("negative dephasing rate".into()));
        }
        if rate > 0.0 {
            out.push((qutrit_raise(space, level, level)?, rate));
        }
    }
    Ok(out)
}
