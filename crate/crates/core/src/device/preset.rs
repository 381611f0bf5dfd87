//! Flat key-value preset files describing a device operating point.
//!
//! Format: one `key = value` pair per line, `#` comments, dotted keys
//! mirroring the parameter structure, and unit-suffixed numeric keys
//! (`_mhz`, `_ghz`, `_us`). Frequencies are ordinary (value/2pi) and are
//! converted to angular rad/s at this boundary.
//!
//! Keys (optional unless noted):
//!   n                                   required, integer >= 1
//!   qutrit.omega_eg_ghz                 required (also _fe_, _fg_)
//!   cavity.<label>.omega_ghz            required for c1..cn, c1p..cnp
//!   cavity.c1p.omega_shifted_ghz        required
//!   coupling.g_r_mhz                    required
//!   coupling.g.<label>_mhz              required for c2..cn
//!   coupling.mu.<label>_mhz             default g_2/sqrt(2)
//!   coupling.g_tilde_mhz                required
//!   drive.m                             default 2
//!   drive.rabi_mhz                      default g_tilde^2/(4 m Delta_tilde)
//!   drive.omega_p_ghz                   default omega_eg + g_tilde^2/Delta_tilde
//!   drive.phi                           radians, default pi
//!   unwanted.<channel>_ratio            defaults from the dipole rule
//!   crosstalk.frac                      default 0.01 (of the largest coupling)
//!   crosstalk.<k>_<l>_mhz               per-pair override
//!   loss.kappa_inv_us                   default infinite (no decay)
//!   loss.kappa_inv.<label>_us           per-cavity override
//!   loss.t_us                           qutrit coherence scale T
//!   loss.gamma_<ch>_inv_us              per-channel override (eg/fe/fg/e_phi/f_phi)
//!   state.alpha                         default 1.86
//!   state.c_amp, state.d_amp            default 1/sqrt(2) each
//!   timing.tau_p_us etc.                default 0

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::device::params::{cs_label, ghz, mhz, sps_label, us, DeviceParams, UnwantedRatios};
use crate::error::{CoreError, Result};

/// Parse preset text into an ordered key -> (value, line) map.
pub fn parse_preset_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(CoreError::Parse {
            line: i + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(CoreError::Parse {
                line: i + 1,
                message: "empty key or value".into(),
            });
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(CoreError::Parse {
                line: i + 1,
                message: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(map)
}

/// Apply `--set key=value` style overrides on top of a parsed preset.
/// Every key must be a recognized schema path.
pub fn apply_overrides(
    map: &mut BTreeMap<String, String>,
    overrides: &[(String, String)],
) -> Result<()> {
    for (k, v) in overrides {
        map.insert(k.clone(), v.clone());
    }
    Ok(())
}

struct Resolver {
    map: BTreeMap<String, String>,
    used: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

impl Resolver {
    fn get(&self, key: &str) -> Option<&str> {
        let v = self.map.get(key).map(|s| s.as_str());
        if v.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        v
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| CoreError::Parameter(format!("key `{key}`: bad number `{v}`"))),
        }
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.number(key)?
            .ok_or_else(|| CoreError::Parameter(format!("missing required key `{key}`")))
    }

    fn integer(&self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|_| CoreError::Parameter(format!("key `{key}`: bad integer `{v}`"))),
        }
    }

    fn unused_keys(&self) -> Vec<String> {
        let used = self.used.borrow();
        self.map
            .keys()
            .filter(|k| !used.contains(*k))
            .cloned()
            .collect()
    }
}

/// Resolve a parsed (and possibly overridden) preset map into DeviceParams.
pub fn resolve_preset(map: BTreeMap<String, String>) -> Result<DeviceParams> {
    let r = Resolver {
        map,
        used: Default::default(),
    };
    let n = r
        .integer("n")?
        .ok_or_else(|| CoreError::Parameter("missing required key `n`".into()))? as usize;
    if n < 1 {
        return Err(CoreError::Parameter("n must be >= 1".into()));
    }
    let omega_eg = ghz(r.required("qutrit.omega_eg_ghz")?);
    let omega_fe = ghz(r.required("qutrit.omega_fe_ghz")?);
    let omega_fg = ghz(r.required("qutrit.omega_fg_ghz")?);

    let mut omega_c = BTreeMap::new();
    let mut labels: Vec<String> = (1..=n).map(sps_label).collect();
    labels.extend((1..=n).map(cs_label));
    for label in &labels {
        let key = format!("cavity.{label}.omega_ghz");
        omega_c.insert(label.clone(), ghz(r.required(&key)?));
    }
    let omega_c1p_shifted = ghz(r.required("cavity.c1p.omega_shifted_ghz")?);

    let g_r = mhz(r.required("coupling.g_r_mhz")?);
    let g_tilde = mhz(r.required("coupling.g_tilde_mhz")?);
    let mut g = BTreeMap::new();
    for j in 2..=n {
        let label = sps_label(j);
        g.insert(label.clone(), mhz(r.required(&format!("coupling.g.{label}_mhz"))?));
    }
    let g2_default = g.values().next().copied().unwrap_or(g_tilde);
    let mut mu = BTreeMap::new();
    for j in 1..=n {
        let label = cs_label(j);
        let v = r.number(&format!("coupling.mu.{label}_mhz"))?;
        let v = match v {
            Some(f) => mhz(f),
            None => g2_default / 2f64.sqrt(),
        };
        mu.insert(label, v);
    }

    let m = r.integer("drive.m")?.unwrap_or(2) as u32;
    if m < 1 {
        return Err(CoreError::Parameter("drive.m must be >= 1".into()));
    }
    let delta_tilde = omega_eg - omega_c1p_shifted;
    let drive_rabi = match r.number("drive.rabi_mhz")? {
        Some(f) => mhz(f),
        None => g_tilde * g_tilde / (4.0 * m as f64 * delta_tilde),
    };
    let omega_p = match r.number("drive.omega_p_ghz")? {
        Some(f) => ghz(f),
        None => omega_eg + g_tilde * g_tilde / delta_tilde,
    };
    let phi = r.number("drive.phi")?.unwrap_or(std::f64::consts::PI);

    let d = UnwantedRatios::default();
    let unwanted = UnwantedRatios {
        g_prime: r.number("unwanted.g_prime_ratio")?.unwrap_or(d.g_prime),
        g_dprime: r.number("unwanted.g_dprime_ratio")?.unwrap_or(d.g_dprime),
        mu_prime: r.number("unwanted.mu_prime_ratio")?.unwrap_or(d.mu_prime),
        mu_dprime: r.number("unwanted.mu_dprime_ratio")?.unwrap_or(d.mu_dprime),
        g_tilde_prime: r
            .number("unwanted.g_tilde_prime_ratio")?
            .unwrap_or(d.g_tilde_prime),
        g_tilde_dprime: r
            .number("unwanted.g_tilde_dprime_ratio")?
            .unwrap_or(d.g_tilde_dprime),
        drive_prime: r.number("unwanted.drive_prime_ratio")?.unwrap_or(d.drive_prime),
        drive_dprime: r
            .number("unwanted.drive_dprime_ratio")?
            .unwrap_or(d.drive_dprime),
    };

    let alpha = C64::new(r.number("state.alpha")?.unwrap_or(1.86), 0.0);
    let c_amp = C64::new(
        r.number("state.c_amp")?
            .unwrap_or(std::f64::consts::FRAC_1_SQRT_2),
        0.0,
    );
    let d_amp = C64::new(
        r.number("state.d_amp")?
            .unwrap_or(std::f64::consts::FRAC_1_SQRT_2),
        0.0,
    );

    let mut params = DeviceParams {
        n,
        omega_eg,
        omega_fe,
        omega_fg,
        omega_c,
        g_r,
        g,
        mu,
        g_tilde,
        omega_c1p_shifted,
        drive_rabi,
        phi,
        omega_p,
        m,
        unwanted,
        crosstalk: BTreeMap::new(),
        kappa: BTreeMap::new(),
        gamma_eg: 0.0,
        gamma_fe: 0.0,
        gamma_fg: 0.0,
        gamma_e_phi: 0.0,
        gamma_f_phi: 0.0,
        alpha,
        c_amp,
        d_amp,
        dead_times: Default::default(),
    };

    // Crosstalk: fraction-of-max default, per-pair overrides.
    let frac = r.number("crosstalk.frac")?.unwrap_or(0.01);
    let gmax = params
        .g
        .values()
        .chain(params.mu.values())
        .fold(0.0f64, |a, &b| a.max(b));
    for i in 0..labels.len() {
        for j in (i + 1)..labels.len() {
            let key = format!("crosstalk.{}_{}_mhz", labels[i], labels[j]);
            let v = match r.number(&key)? {
                Some(f) => mhz(f),
                None => frac * gmax,
            };
            params
                .crosstalk
                .insert((labels[i].clone(), labels[j].clone()), v);
        }
    }

    // Dissipation.
    let kappa_all = r.number("loss.kappa_inv_us")?;
    for label in &labels {
        let per = r.number(&format!("loss.kappa_inv.{label}_us"))?;
        let inv_us = per.or(kappa_all);
        let rate = match inv_us {
            Some(v) if v > 0.0 => 1.0 / us(v),
            Some(_) => {
                return Err(CoreError::Parameter(format!(
                    "loss.kappa_inv for {label} must be positive"
                )))
            }
            None => 0.0,
        };
        params.kappa.insert(label.clone(), rate);
    }
    if let Some(t) = r.number("loss.t_us")? {
        if t <= 0.0 {
            return Err(CoreError::Parameter("loss.t_us must be positive".into()));
        }
        params.set_t_scale(us(t));
    }
    for (key, field) in [
        ("loss.gamma_eg_inv_us", 0usize),
        ("loss.gamma_fe_inv_us", 1),
        ("loss.gamma_fg_inv_us", 2),
        ("loss.gamma_e_phi_inv_us", 3),
        ("loss.gamma_f_phi_inv_us", 4),
    ] {
        if let Some(v) = r.number(key)? {
            if v <= 0.0 {
                return Err(CoreError::Parameter(format!("{key} must be positive")));
            }
            let rate = 1.0 / us(v);
            match field {
                0 => params.gamma_eg = rate,
                1 => params.gamma_fe = rate,
                2 => params.gamma_fg = rate,
                3 => params.gamma_e_phi = rate,
                _ => params.gamma_f_phi = rate,
            }
        }
    }

    // Timing.
    params.dead_times.tau_p = us(r.number("timing.tau_p_us")?.unwrap_or(0.0));
    params.dead_times.tau_alpha = us(r.number("timing.tau_alpha_us")?.unwrap_or(0.0));
    params.dead_times.tau_d = us(r.number("timing.tau_d_us")?.unwrap_or(0.0));
    params.dead_times.tau_c = us(r.number("timing.tau_c_us")?.unwrap_or(0.0));

    let unused = r.unused_keys();
    if !unused.is_empty() {
        return Err(CoreError::Parameter(format!(
            "unrecognized preset keys: {}",
            unused.join(", ")
        )));
    }

    params.validate()?;
    Ok(params)
}

pub fn load_preset_file(path: &std::path::Path) -> Result<DeviceParams> {
    let text = std::fs::read_to_string(path).map_err(|e| CoreError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    resolve_preset(parse_preset_text(&text)?)
}

pub fn load_preset_with_overrides(
    path: &std::path::Path,
    overrides: &[(String, String)],
) -> Result<DeviceParams> {
    let text = std::fs::read_to_string(path).map_err(|e| CoreError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut map = parse_preset_text(&text)?;
    apply_overrides(&mut map, overrides)?;
    resolve_preset(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::params::to_mhz;
    use approx::assert_abs_diff_eq;

    const MINIMAL: &str = "\
# minimal two-pair preset
n = 2
qutrit.omega_eg_ghz = 8.0
qutrit.omega_fe_ghz = 12.0
qutrit.omega_fg_ghz = 20.0
cavity.c1.omega_ghz = 5.0
cavity.c2.omega_ghz = 20.25
cavity.c1p.omega_ghz = 12.125
cavity.c2p.omega_ghz = 11.875
cavity.c1p.omega_shifted_ghz = 7.84
coupling.g_r_mhz = 50.0
coupling.g.c2_mhz = 12.03
coupling.g_tilde_mhz = 24.1
loss.kappa_inv_us = 100
loss.t_us = 15
";

    #[test]
    fn minimal_preset_matches_paper_point() {
        let p = resolve_preset(parse_preset_text(MINIMAL).unwrap()).unwrap();
        let want = DeviceParams::paper_point();
        assert_abs_diff_eq!(p.g_tilde, want.g_tilde, epsilon = 1e-3);
        assert_abs_diff_eq!(p.drive_rabi, want.drive_rabi, epsilon = 1e-6);
        assert_abs_diff_eq!(p.mu["c1p"], want.mu["c1p"], epsilon = 1e-6);
        assert_abs_diff_eq!(p.gamma_fg, want.gamma_fg, epsilon = 1e-9);
        assert_eq!(p.crosstalk.len(), 6);
    }

    #[test]
    fn overrides_take_effect() {
        let mut map = parse_preset_text(MINIMAL).unwrap();
        apply_overrides(
            &mut map,
            &[("coupling.g.c2_mhz".into(), "10.0".into())],
        )
        .unwrap();
        let p = resolve_preset(map).unwrap();
        assert_abs_diff_eq!(to_mhz(p.g["c2"]), 10.0, epsilon = 1e-12);
        // mu default co-derives from g2
        assert_abs_diff_eq!(to_mhz(p.mu["c1p"]), 10.0 / 2f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn unknown_key_rejected() {
        let mut map = parse_preset_text(MINIMAL).unwrap();
        map.insert("coupling.typo_mhz".into(), "1.0".into());
        assert!(resolve_preset(map).is_err());
    }

    #[test]
    fn parse_error_carries_line() {
        let err = parse_preset_text("n = 2\nbad line\n").unwrap_err();
        match err {
            CoreError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
