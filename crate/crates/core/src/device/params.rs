//! Physical parameter records for the two-register transfer device: a flux
//! qutrit (levels g, e, f) coupled to n single-photon-state (SPS) cavities
//! c1..cn and n coherent-state (CS) cavities c1p..cnp.
//!
//! All frequencies are stored as angular (rad/s); preset files and CLI
//! overrides accept ordinary frequencies with `_mhz`/`_ghz` suffixes and are
//! converted once at the boundary. Times are seconds (`_us` suffix at the
//! boundary).

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Ordinary frequency in MHz -> angular rad/s.
pub fn mhz(f: f64) -> f64 {
    TWO_PI * f * 1e6
}

/// Ordinary frequency in GHz -> angular rad/s.
pub fn ghz(f: f64) -> f64 {
    TWO_PI * f * 1e9
}

/// Microseconds -> seconds.
pub fn us(t: f64) -> f64 {
    t * 1e-6
}

/// Angular rad/s -> ordinary MHz (for printing, value/2π convention).
pub fn to_mhz(omega: f64) -> f64 {
    omega / (TWO_PI * 1e6)
}

pub fn to_ghz(omega: f64) -> f64 {
    omega / (TWO_PI * 1e9)
}

/// SPS cavity labels c1..cn.
pub fn sps_label(j: usize) -> String {
    format!("c{j}")
}

/// CS cavity labels c1p..cnp.
pub fn cs_label(j: usize) -> String {
    format!("c{j}p")
}

/// Ratios of the unwanted qutrit-transition couplings to their wanted
/// counterparts, following the dipole-matrix-element rule (the f-g and f-e
/// channels are comparable, the e-g channel is ~4x weaker).
#[derive(Debug, Clone, PartialEq)]
pub struct UnwantedRatios {
    /// SPS cavity coupling to f-e (vs wanted f-g coupling g_j).
    pub g_prime: f64,
    /// SPS cavity coupling to e-g.
    pub g_dprime: f64,
    /// CS cavity coupling to f-g (vs wanted f-e coupling mu_j').
    pub mu_prime: f64,
    /// CS cavity coupling to e-g.
    pub mu_dprime: f64,
    /// Shifted cavity-1' coupling to f-g (vs wanted e-g coupling g_tilde).
    pub g_tilde_prime: f64,
    /// Shifted cavity-1' coupling to f-e.
    pub g_tilde_dprime: f64,
    /// Drive coupling to f-g (vs wanted e-g Rabi frequency).
    pub drive_prime: f64,
    /// Drive coupling to f-e.
    pub drive_dprime: f64,
}

impl Default for UnwantedRatios {
    fn default() -> Self {
        UnwantedRatios {
            g_prime: 1.0,
            g_dprime: 0.25,
            mu_prime: 1.0,
            mu_dprime: 0.25,
            g_tilde_prime: 4.0,
            g_tilde_dprime: 4.0,
            drive_prime: 4.0,
            drive_dprime: 4.0,
        }
    }
}

/// Dead times in the protocol schedule (seconds).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DeadTimes {
    /// Step (i) single-mode rotation duration.
    pub tau_p: f64,
    /// Duration of each displacement step (iv) and (vi).
    pub tau_alpha: f64,
    /// Per-event qutrit level-spacing tuning time (4 events).
    pub tau_d: f64,
    /// Per-event cavity-1' frequency tuning time (2 events).
    pub tau_c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceParams {
    /// Number of SPS/CS qubit pairs.
    pub n: usize,
    // Qutrit transition frequencies (rad/s).
    pub omega_eg: f64,
    pub omega_fe: f64,
    pub omega_fg: f64,
    /// Cavity frequencies by label (rad/s).
    pub omega_c: BTreeMap<String, f64>,
    /// Resonant cavity-1 coupling (rad/s).
    pub g_r: f64,
    /// SPS cavity couplings g_j (labels c2..cn).
    pub g: BTreeMap<String, f64>,
    /// CS cavity couplings mu_j' (labels c1p..cnp).
    pub mu: BTreeMap<String, f64>,
    /// Cavity-1' coupling during the conditional-drive step.
    pub g_tilde: f64,
    /// Cavity-1' frequency while tuned for the conditional-drive step.
    pub omega_c1p_shifted: f64,
    /// Classical drive Rabi frequency Omega_p (rad/s).
    pub drive_rabi: f64,
    /// Drive phase phi.
    pub phi: f64,
    /// Drive frequency omega_p (rad/s).
    pub omega_p: f64,
    /// Integer m fixing the conditional-drive phase-return condition.
    pub m: u32,
    pub unwanted: UnwantedRatios,
    /// Inter-cavity crosstalk couplings g_kl (rad/s), keyed by label pair
    /// (lexicographically ordered by protocol position).
    pub crosstalk: BTreeMap<(String, String), f64>,
    /// Cavity decay rates (1/s) by label.
    pub kappa: BTreeMap<String, f64>,
    // Qutrit relaxation and pure-dephasing rates (1/s).
    pub gamma_eg: f64,
    pub gamma_fe: f64,
    pub gamma_fg: f64,
    pub gamma_e_phi: f64,
    pub gamma_f_phi: f64,
    /// Coherent amplitude of the CS qubits.
    pub alpha: C64,
    /// Amplitudes of the transferred logical state, |c|^2 + |d|^2 = 1.
    pub c_amp: C64,
    pub d_amp: C64,
    pub dead_times: DeadTimes,
}

impl DeviceParams {
    /// Ordered cavity labels c1..cn, c1p..cnp.
    pub fn cavity_labels(&self) -> Vec<String> {
        let mut out: Vec<String> = (1..=self.n).map(sps_label).collect();
        out.extend((1..=self.n).map(cs_label));
        out
    }

    pub fn omega_of(&self, label: &str) -> Result<f64> {
        self.omega_c
            .get(label)
            .copied()
            .ok_or_else(|| CoreError::UnknownLabel(label.to_string()))
    }

    /// Detuning of SPS cavity j from the f-g transition.
    pub fn delta_sps(&self, label: &str) -> Result<f64> {
        Ok(self.omega_fg - self.omega_of(label)?)
    }

    /// Detuning of CS cavity j' from the f-e transition.
    pub fn delta_cs(&self, label: &str) -> Result<f64> {
        Ok(self.omega_fe - self.omega_of(label)?)
    }

    /// Detuning of the shifted cavity 1' from the e-g transition.
    pub fn delta_tilde(&self) -> f64 {
        self.omega_eg - self.omega_c1p_shifted
    }

    /// Crosstalk detuning between two cavities.
    pub fn delta_crosstalk(&self, k: &str, l: &str) -> Result<f64> {
        Ok(self.omega_of(k)? - self.omega_of(l)?)
    }

    /// Drive Rabi frequency required by the phase-return condition:
    /// Omega_p = g_tilde^2 / (4 m Delta_tilde).
    pub fn drive_rabi_required(&self, m: u32) -> f64 {
        self.g_tilde * self.g_tilde / (4.0 * m as f64 * self.delta_tilde())
    }

    /// Set the qutrit coherence scale T (seconds): relaxation lifetimes
    /// (4T, 2T, T) for e-g, f-e, f-g and dephasing lifetime T for both levels.
    pub fn set_t_scale(&mut self, t: f64) {
        self.gamma_eg = 1.0 / (4.0 * t);
        self.gamma_fe = 1.0 / (2.0 * t);
        self.gamma_fg = 1.0 / t;
        self.gamma_e_phi = 1.0 / t;
        self.gamma_f_phi = 1.0 / t;
    }

    /// Set every cavity decay rate to `kappa`.
    pub fn set_kappa_all(&mut self, kappa: f64) {
        for label in self.cavity_labels() {
            self.kappa.insert(label, kappa);
        }
    }

    /// Set all dissipation channels to zero (closed-system limit).
    pub fn set_lossless(&mut self) {
        self.set_kappa_all(0.0);
        self.gamma_eg = 0.0;
        self.gamma_fe = 0.0;
        self.gamma_fg = 0.0;
        self.gamma_e_phi = 0.0;
        self.gamma_f_phi = 0.0;
    }

    /// Set g_2..g_n to `g` and co-scale all mu to g/sqrt(2), preserving the
    /// coupling-matching rule of the shipped operating point.
    pub fn set_g2_coscaled(&mut self, g: f64) {
        for v in self.g.values_mut() {
            *v = g;
        }
        let mu = g / 2f64.sqrt();
        for v in self.mu.values_mut() {
            *v = mu;
        }
        self.refresh_crosstalk_default();
    }

    /// Default crosstalk: 0.01 x the largest wanted coupling, on all pairs.
    pub fn refresh_crosstalk_default(&mut self) {
        let gmax = self
            .g
            .values()
            .chain(self.mu.values())
            .fold(0.0f64, |a, &b| a.max(b));
        let labels = self.cavity_labels();
        self.crosstalk.clear();
        for i in 0..labels.len() {
            for j in (i + 1)..labels.len() {
                self.crosstalk
                    .insert((labels[i].clone(), labels[j].clone()), 0.01 * gmax);
            }
        }
    }

    /// Invariant checks: amplitude normalization, nonnegative rates, and the
    /// off-resonance guard |Delta| >= 1e-3 g for every dispersive coupling.
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(CoreError::Parameter("n must be >= 1".into()));
        }
        let norm = self.c_amp.norm_sqr() + self.d_amp.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(CoreError::Parameter(format!(
                "|c|^2 + |d|^2 = {norm} deviates from 1"
            )));
        }
        for label in self.cavity_labels() {
            self.omega_of(&label)?;
        }
        for (label, &rate) in &self.kappa {
            if rate < 0.0 {
                return Err(CoreError::Parameter(format!(
                    "negative decay rate for {label}"
                )));
            }
        }
        for (name, rate) in [
            ("gamma_eg", self.gamma_eg),
            ("gamma_fe", self.gamma_fe),
            ("gamma_fg", self.gamma_fg),
            ("gamma_e_phi", self.gamma_e_phi),
            ("gamma_f_phi", self.gamma_f_phi),
        ] {
            if rate < 0.0 {
                return Err(CoreError::Parameter(format!("negative rate {name}")));
            }
        }
        for (name, v) in [
            ("g_r", self.g_r),
            ("g_tilde", self.g_tilde),
            ("drive_rabi", self.drive_rabi),
        ] {
            if v < 0.0 {
                return Err(CoreError::Parameter(format!("negative coupling {name}")));
            }
        }
        for (label, &g) in &self.g {
            let d = self.delta_sps(label)?;
            if d.abs() < 1e-3 * g {
                return Err(CoreError::Parameter(format!(
                    "cavity {label} is effectively resonant (|Delta| < 1e-3 g)"
                )));
            }
        }
        for (label, &m) in &self.mu {
            let d = self.delta_cs(label)?;
            if d.abs() < 1e-3 * m {
                return Err(CoreError::Parameter(format!(
                    "cavity {label} is effectively resonant (|Delta'| < 1e-3 mu)"
                )));
            }
        }
        if self.g_tilde > 0.0 && self.delta_tilde().abs() < 1e-3 * self.g_tilde {
            return Err(CoreError::Parameter(
                "shifted cavity 1' is effectively resonant".into(),
            ));
        }
        Ok(())
    }

    /// The published two-pair operating point.
    ///
    /// The drive Rabi frequency is resolved from the phase-return condition
    /// with m = 2, giving Omega_p/2pi = 0.4538 MHz (quoted rounded as 0.454).
    /// The resonant swap coupling g_r is not fixed by the reference analysis;
    /// 2pi x 50 MHz keeps the swap fast against all decoherence scales.
    pub fn paper_point() -> DeviceParams {
        let mut omega_c = BTreeMap::new();
        omega_c.insert("c1".into(), ghz(5.0));
        omega_c.insert("c2".into(), ghz(20.25));
        omega_c.insert("c1p".into(), ghz(12.125));
        omega_c.insert("c2p".into(), ghz(11.875));
        let g2 = mhz(12.03);
        let mut g = BTreeMap::new();
        g.insert("c2".into(), g2);
        let mut mu = BTreeMap::new();
        mu.insert("c1p".into(), g2 / 2f64.sqrt());
        mu.insert("c2p".into(), g2 / 2f64.sqrt());
        let omega_eg = ghz(8.0);
        let omega_c1p_shifted = ghz(7.84);
        let g_tilde = mhz(24.1);
        let delta_tilde = omega_eg - omega_c1p_shifted;
        let m = 2u32;
        let drive_rabi = g_tilde * g_tilde / (4.0 * m as f64 * delta_tilde);
        let omega_p = omega_eg + g_tilde * g_tilde / delta_tilde;
        let mut p = DeviceParams {
            n: 2,
            omega_eg,
            omega_fe: ghz(12.0),
            omega_fg: ghz(20.0),
            omega_c,
            g_r: mhz(50.0),
            g,
            mu,
            g_tilde,
            omega_c1p_shifted,
            drive_rabi,
            phi: std::f64::consts::PI,
            omega_p,
            m,
            unwanted: UnwantedRatios::default(),
            crosstalk: BTreeMap::new(),
            kappa: BTreeMap::new(),
            gamma_eg: 0.0,
            gamma_fe: 0.0,
            gamma_fg: 0.0,
            gamma_e_phi: 0.0,
            gamma_f_phi: 0.0,
            alpha: C64::new(1.86, 0.0),
            c_amp: C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            d_amp: C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            dead_times: DeadTimes::default(),
        };
        p.refresh_crosstalk_default();
        p.set_kappa_all(1.0 / us(100.0));
        p.set_t_scale(us(15.0));
        p
    }
}
