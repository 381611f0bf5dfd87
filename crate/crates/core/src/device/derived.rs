//! Quantities derived from the device parameters: dispersive shifts, the
//! conditional-drive Stark scale, matching residuals, validity-condition
//! margins, timing, and cavity quality factors.

use std::collections::BTreeMap;

use crate::device::params::DeviceParams;
use crate::error::Result;

/// Pure, deterministic derivations from DeviceParams.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedParams {
    /// Dispersive shift lambda_j = g_j^2 / Delta_j per SPS cavity (signed).
    pub lambda: BTreeMap<String, f64>,
    /// Dispersive shift lambda_j' = mu_j'^2 / Delta_j' per CS cavity (signed).
    pub lambda_p: BTreeMap<String, f64>,
    /// Conditional-drive Stark scale omega_tilde = g_tilde^2 / (2 Delta_tilde).
    pub omega_tilde: f64,
    /// Mean photon number of the displaced branch, 4|alpha|^2.
    pub nbar: f64,
    /// Drive Rabi frequency demanded by the phase-return condition for the
    /// configured m.
    pub drive_rabi_required: f64,
    /// Total protocol time including dead times.
    pub t_op: f64,
}

impl DerivedParams {
    pub fn from_params(p: &DeviceParams) -> Result<DerivedParams> {
        let mut lambda = BTreeMap::new();
        for (label, &g) in &p.g {
            lambda.insert(label.clone(), g * g / p.delta_sps(label)?);
        }
        let mut lambda_p = BTreeMap::new();
        for (label, &mu) in &p.mu {
            lambda_p.insert(label.clone(), mu * mu / p.delta_cs(label)?);
        }
        let omega_tilde = p.g_tilde * p.g_tilde / (2.0 * p.delta_tilde());
        let nbar = 4.0 * p.alpha.norm_sqr();
        let drive_rabi_required = p.drive_rabi_required(p.m);
        let lambda_common = common_lambda(&lambda, &lambda_p);
        let dispersive_time = if lambda_common > 0.0 {
            std::f64::consts::PI / lambda_common
        } else {
            0.0
        };
        let swap_time = if p.g_r > 0.0 {
            std::f64::consts::PI / (2.0 * p.g_r)
        } else {
            0.0
        };
        let drive_time = if p.drive_rabi > 0.0 {
            std::f64::consts::PI / (2.0 * p.drive_rabi)
        } else {
            0.0
        };
        let dt = &p.dead_times;
        let t_op = dt.tau_p
            + swap_time
            + dispersive_time
            + 2.0 * dt.tau_alpha
            + drive_time
            + 4.0 * dt.tau_d
            + 2.0 * dt.tau_c;
        Ok(DerivedParams {
            lambda,
            lambda_p,
            omega_tilde,
            nbar,
            drive_rabi_required,
            t_op,
        })
    }

    /// Magnitude of the common dispersive shift (mean of |lambda| entries).
    pub fn lambda_common(&self) -> f64 {
        common_lambda(&self.lambda, &self.lambda_p)
    }

    /// Duration of the dispersive-phase step, pi / lambda.
    pub fn dispersive_time(&self) -> f64 {
        std::f64::consts::PI / self.lambda_common()
    }
}

fn common_lambda(lambda: &BTreeMap<String, f64>, lambda_p: &BTreeMap<String, f64>) -> f64 {
    let vals: Vec<f64> = lambda
        .values()
        .chain(lambda_p.values())
        .map(|v| v.abs())
        .collect();
    if vals.is_empty() {
        return 0.0;
    }
    vals.iter().sum::<f64>() / vals.len() as f64
}

/// One validity-condition margin.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioEntry {
    pub name: String,
    pub ratio: f64,
    pub pass: bool,
}

/// Report of large-detuning and drive-hierarchy margins.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersiveReport {
    pub threshold: f64,
    pub entries: Vec<RatioEntry>,
}

impl DispersiveReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn flagged(&self) -> Vec<&RatioEntry> {
        self.entries.iter().filter(|e| !e.pass).collect()
    }
}

/// Compute every dispersive-regime and drive-hierarchy ratio and flag those
/// below `threshold` (default 10). A report, not a gate.
pub fn validate_dispersive(p: &DeviceParams, threshold: f64) -> Result<DispersiveReport> {
    let mut entries = Vec::new();
    let mut push = |name: String, ratio: f64| {
        entries.push(RatioEntry {
            pass: ratio >= threshold,
            name,
            ratio,
        });
    };
    for (label, &g) in &p.g {
        let d = p.delta_sps(label)?;
        push(
            format!("|Delta_{label}|/g_{label}"),
            if g > 0.0 { d.abs() / g } else { f64::INFINITY },
        );
    }
    for (label, &mu) in &p.mu {
        let d = p.delta_cs(label)?;
        push(
            format!("|Delta_{label}|/mu_{label}"),
            if mu > 0.0 { d.abs() / mu } else { f64::INFINITY },
        );
    }
    // Cross-Kerr conditions: pairwise detuning sums against combined couplings.
    for (lj, &g) in &p.g {
        for (lk, &mu) in &p.mu {
            let dj = p.delta_sps(lj)?;
            let dk = p.delta_cs(lk)?;
            let denom = (g * g + mu * mu).sqrt();
            push(
                format!("|1/Delta_{lj}+1/Delta_{lk}|^-1/sqrt(g^2+mu^2) [{lj},{lk}]"),
                if denom > 0.0 && (1.0 / dj + 1.0 / dk).abs() > 0.0 {
                    (1.0 / (1.0 / dj + 1.0 / dk)).abs() / denom
                } else {
                    f64::INFINITY
                },
            );
        }
    }
    let dt = p.delta_tilde().abs();
    push(
        "|Delta_tilde|/g_tilde".into(),
        if p.g_tilde > 0.0 { dt / p.g_tilde } else { f64::INFINITY },
    );
    push(
        "|Delta_tilde|/Omega_p".into(),
        if p.drive_rabi > 0.0 { dt / p.drive_rabi } else { f64::INFINITY },
    );
    let derived = DerivedParams::from_params(p)?;
    push(
        "4|omega_tilde| nbar/Omega_p".into(),
        if p.drive_rabi > 0.0 {
            4.0 * derived.omega_tilde.abs() * derived.nbar / p.drive_rabi
        } else {
            f64::INFINITY
        },
    );
    Ok(DispersiveReport { threshold, entries })
}

/// Result of the dispersive-shift matching check.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingReport {
    pub matched: bool,
    pub lambda_common: f64,
    /// Relative residual per cavity label.
    pub residuals: BTreeMap<String, f64>,
}

/// True iff every |lambda_j| and |lambda_j'| agrees with the common value
/// within relative tolerance 1e-6.
pub fn check_matching(p: &DeviceParams) -> Result<MatchingReport> {
    let derived = DerivedParams::from_params(p)?;
    let common = derived.lambda_common();
    let mut residuals = BTreeMap::new();
    let mut matched = true;
    for (label, &v) in derived.lambda.iter().chain(derived.lambda_p.iter()) {
        let res = if common > 0.0 {
            (v.abs() - common).abs() / common
        } else {
            0.0
        };
        if res > 1e-6 {
            matched = false;
        }
        residuals.insert(label.clone(), res);
    }
    Ok(MatchingReport {
        matched,
        lambda_common: common,
        residuals,
    })
}

/// Q = omega_c / kappa per cavity; infinite for kappa = 0.
pub fn quality_factors(p: &DeviceParams) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for label in p.cavity_labels() {
        let omega = p.omega_of(&label)?;
        let kappa = p.kappa.get(&label).copied().unwrap_or(0.0);
        let q = if kappa > 0.0 { omega / kappa } else { f64::INFINITY };
        out.insert(label, q);
    }
    Ok(out)
}
