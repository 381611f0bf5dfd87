//! Construction of the protocol's Hilbert space and its reference states:
//! the initial entangled single-photon register, the transferred
//! coherent-state target, and the closed-form state after each ideal step.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::device::{cs_label, sps_label, DerivedParams, DeviceParams};
use crate::error::{CoreError, Result};
use crate::hilbert::space::HilbertSpace;
use crate::hilbert::state::{coherent_state_bounded, StateVector, DEFAULT_LEAKAGE_BOUND};

/// Subsystem ordering used everywhere: coupler first, then the n
/// single-photon cavities, then the n coherent-state cavities.
pub fn protocol_space(
    n: usize,
    sps_dim: usize,
    c1p_dim: usize,
    cs_dim: usize,
) -> Result<Arc<HilbertSpace>> {
    if n == 0 {
        return Err(CoreError::Parameter("n must be at least 1".into()));
    }
    let mut subsystems: Vec<(String, usize)> = vec![("qutrit".to_string(), 3)];
    for j in 1..=n {
        subsystems.push((sps_label(j), sps_dim));
    }
    for j in 1..=n {
        subsystems.push((cs_label(j), if j == 1 { c1p_dim } else { cs_dim }));
    }
    let view: Vec<(&str, usize)> = subsystems.iter().map(|(l, d)| (l.as_str(), *d)).collect();
    HilbertSpace::new(&view)
}

fn qutrit_level(level: usize) -> Result<StateVector> {
    StateVector::basis(HilbertSpace::single("qutrit", 3)?, &[level])
}

/// |0> or |1> (or a photon-number basis state) of one labeled cavity.
fn cavity_fock(space: &Arc<HilbertSpace>, label: &str, n: usize) -> Result<StateVector> {
    let dim = space.dim_of(label)?;
    StateVector::basis(HilbertSpace::single(label, dim)?, &[n])
}

/// (|0> +- |1>)/sqrt(2) of one labeled cavity.
fn cavity_pm(space: &Arc<HilbertSpace>, label: &str, sign: f64) -> Result<StateVector> {
    let zero = cavity_fock(space, label, 0)?;
    let one = cavity_fock(space, label, 1)?;
    let sum = zero.add(&one.scale(C64::new(sign, 0.0)))?;
    Ok(sum.scale(C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)))
}

/// Coherent |beta> of one labeled cavity, leakage recorded.
fn cavity_coherent(space: &Arc<HilbertSpace>, label: &str, beta: C64) -> Result<StateVector> {
    let dim = space.dim_of(label)?;
    let st = coherent_state_bounded(beta, dim, DEFAULT_LEAKAGE_BOUND)?;
    st.relabel("mode", label)
}

/// Assemble a full product state from per-subsystem factors given in the
/// space's own label order. Factors may cover several subsystems (e.g. an
/// entangled register) as long as their labels appear contiguously in order.
fn assemble(space: &Arc<HilbertSpace>, factors: &[StateVector]) -> Result<StateVector> {
    let mut it = factors.iter();
    let first = it
        .next()
        .ok_or_else(|| CoreError::Parameter("no factors".into()))?;
    let mut acc = first.clone();
    for f in it {
        acc = acc.tensor(f)?;
    }
    if acc.space().labels() != space.labels() {
        return Err(CoreError::SpaceMismatch(format!(
            "assembled state has labels {:?}, expected {:?}",
            acc.space().labels(),
            space.labels()
        )));
    }
    if acc.space() != space {
        return Err(CoreError::SpaceMismatch(
            "assembled state dimensions differ from the target space".into(),
        ));
    }
    Ok(acc)
}

struct BranchSpec<'a> {
    coeff: C64,
    qutrit: usize,
    /// Photon number per single-photon cavity, or +-1 for (|0>+-|1>)/sqrt(2).
    sps: Vec<SpsFactor>,
    cs: Vec<C64>,
    p: &'a DeviceParams,
}

#[derive(Clone, Copy)]
enum SpsFactor {
    Fock(usize),
    Plus,
    Minus,
}

/// Sum of fully specified branches, normalized.
fn branch_sum(space: &Arc<HilbertSpace>, branches: &[BranchSpec]) -> Result<StateVector> {
    let mut acc: Option<StateVector> = None;
    let mut leakage = 0.0f64;
    for b in branches {
        let n = b.p.n;
        let mut factors = vec![qutrit_level(b.qutrit)?];
        for j in 1..=n {
            let label = sps_label(j);
            factors.push(match b.sps[j - 1] {
                SpsFactor::Fock(k) => cavity_fock(space, &label, k)?,
                SpsFactor::Plus => cavity_pm(space, &label, 1.0)?,
                SpsFactor::Minus => cavity_pm(space, &label, -1.0)?,
            });
        }
        for j in 1..=n {
            let st = cavity_coherent(space, &cs_label(j), b.cs[j - 1])?;
            leakage = leakage.max(st.truncation_leakage());
            factors.push(st);
        }
        let term = assemble(space, &factors)?.scale(b.coeff);
        acc = Some(match acc {
            None => term,
            Some(s) => s.add(&term)?,
        });
    }
    let mut st = acc.ok_or_else(|| CoreError::Parameter("no branches".into()))?;
    st.normalize()?;
    st.set_truncation_leakage(leakage);
    Ok(st)
}

/// (c|0...0> + d|1...1>) over the single-photon register, tensored with
/// coherent |alpha> in every coherent-state cavity and the coupler ground
/// level.
pub fn initial_state(p: &DeviceParams, space: &Arc<HilbertSpace>) -> Result<StateVector> {
    p.validate()?;
    let n = p.n;
    branch_sum(
        space,
        &[
            BranchSpec {
                coeff: p.c_amp,
                qutrit: 0,
                sps: vec![SpsFactor::Fock(0); n],
                cs: vec![p.alpha; n],
                p,
            },
            BranchSpec {
                coeff: p.d_amp,
                qutrit: 0,
                sps: vec![SpsFactor::Fock(1); n],
                cs: vec![p.alpha; n],
                p,
            },
        ],
    )
}

/// The transferred state: coupler ground, single-photon register in
/// |0>|->...|->, and the coherent-state register carrying
/// c|alpha...> + d|-alpha...>, normalized with the coherent overlap included.
pub fn target_state(p: &DeviceParams, space: &Arc<HilbertSpace>) -> Result<StateVector> {
    p.validate()?;
    let n = p.n;
    let mut sps = vec![SpsFactor::Fock(0)];
    sps.extend(std::iter::repeat(SpsFactor::Minus).take(n - 1));
    branch_sum(
        space,
        &[
            BranchSpec {
                coeff: p.c_amp,
                qutrit: 0,
                sps: sps.clone(),
                cs: vec![p.alpha; n],
                p,
            },
            BranchSpec {
                coeff: p.d_amp,
                qutrit: 0,
                sps,
                cs: vec![-p.alpha; n],
                p,
            },
        ],
    )
}

/// Closed-form state after each of the six ideal steps, in order. The
/// conditional-drive entry accounts for the exact conditional-phase rotation
/// of the displaced branch at the configured drive duration.
pub fn ideal_intermediates(
    p: &DeviceParams,
    space: &Arc<HilbertSpace>,
) -> Result<Vec<StateVector>> {
    let n = p.n;
    let derived = DerivedParams::from_params(p)?;
    let minus_i = C64::new(0.0, -1.0);
    let mut sps0_plus = vec![SpsFactor::Fock(0)];
    sps0_plus.extend(std::iter::repeat(SpsFactor::Plus).take(n - 1));
    let mut sps1_minus = vec![SpsFactor::Fock(1)];
    sps1_minus.extend(std::iter::repeat(SpsFactor::Minus).take(n - 1));
    let mut sps0_minus = vec![SpsFactor::Fock(0)];
    sps0_minus.extend(std::iter::repeat(SpsFactor::Minus).take(n - 1));

    let alpha_all = vec![p.alpha; n];
    let minus_alpha_all = vec![-p.alpha; n];
    let mut cs_two_alpha = vec![2.0 * p.alpha];
    cs_two_alpha.extend(std::iter::repeat(p.alpha).take(n - 1));
    let mut cs_zero_first = vec![C64::new(0.0, 0.0)];
    cs_zero_first.extend(std::iter::repeat(-p.alpha).take(n - 1));

    // After the plus/minus preparation.
    let s1 = branch_sum(
        space,
        &[
            BranchSpec {
                coeff: p.c_amp,
                qutrit: 0,
                sps: sps0_plus.clone(),
                cs: alpha_all.clone(),
                p,
            },
            BranchSpec {
                coeff: p.d_amp,
                qutrit: 0,
                sps: sps1_minus.clone(),
                cs: alpha_all.clone(),
                p,
            },
        ],
    )?;
    // After the resonant swap: the single photon moved into the coupler.
    let mut sps0_plusfirst = vec![SpsFactor::Fock(0)];
    sps0_plusfirst.extend(std::iter::repeat(SpsFactor::Plus).take(n - 1));
    let s2 = branch_sum(
        space,
        &[
            BranchSpec {
                coeff: p.c_amp,
                qutrit: 0,
                sps: sps0_plusfirst,
                cs: alpha_all.clone(),
                p,
            },
            BranchSpec {
                coeff: minus_i * p.d_amp,
                qutrit: 1,
                sps: sps0_minus.clone(),
                cs: alpha_all.clone(),
                p,
            },
        ],
    )?;
    // After the dispersive phase: |+> -> |->, coherent branch -> |-alpha>.
    let s3 = branch_sum(
        space,
        &[
            BranchSpec {
                coeff: p.c_amp,
                qutrit: 0,
                sps: sps0_minus.clone(),
                cs: alpha_all.clone(),
                p,
            },
            BranchSpec {
                coeff: minus_i * p.d_amp,
                qutrit: 1,
                sps: sps0_minus.clone(),
                cs: minus_alpha_all.clone(),
                p,
            },
        ],
    )?;
    // After the displacement by +alpha on cavity 1'.
    let s4 = branch_sum(
        space,
        &[
            BranchSpec {
                coeff: p.c_amp,
                qutrit: 0,
                sps: sps0_minus.clone(),
                cs: cs_two_alpha.clone(),
                p,
            },
            BranchSpec {
                coeff: minus_i * p.d_amp,
                qutrit: 1,
                sps: sps0_minus.clone(),
                cs: cs_zero_first.clone(),
                p,
            },
        ],
    )?;
    // After the conditional drive: the excitation returns to the ground
    // level with phase i, and the displaced branch rotates by the
    // conditional phase (identity when the phase-return condition holds).
    let t5 = 0.5 * std::f64::consts::PI / p.drive_rabi;
    let rot = C64::from_polar(1.0, 2.0 * derived.omega_tilde * t5);
    let mut cs_two_alpha_rot = vec![2.0 * p.alpha * rot];
    cs_two_alpha_rot.extend(std::iter::repeat(p.alpha).take(n - 1));
    let s5 = branch_sum(
        space,
        &[
            BranchSpec {
                coeff: p.c_amp,
                qutrit: 0,
                sps: sps0_minus.clone(),
                cs: cs_two_alpha_rot,
                p,
            },
            BranchSpec {
                coeff: p.d_amp,
                qutrit: 0,
                sps: sps0_minus.clone(),
                cs: cs_zero_first,
                p,
            },
        ],
    )?;
    let s6 = target_state(p, space)?;
    Ok(vec![s1, s2, s3, s4, s5, s6])
}
