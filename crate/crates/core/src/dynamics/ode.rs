//! Complex ODE integration: an adaptive Dormand–Prince 5(4) embedded pair
//! and a classic fixed-step 4th-order method, generic over vector-like and
//! matrix-like states.

use ndarray as nd;
use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};

/// Minimal vector-space interface the integrators need.
pub trait OdeState: Clone {
    fn zeros_like(&self) -> Self;
    fn fill_zero(&mut self);
    /// self += c * other
    fn axpy(&mut self, c: f64, other: &Self);
    fn component_count(&self) -> usize;
    /// Weighted RMS error norm of `err` against atol + rtol*max(|self|,|other|).
    fn error_norm(&self, other: &Self, err: &Self, atol: f64, rtol: f64) -> f64;
}

impl OdeState for nd::Array1<C64> {
    fn zeros_like(&self) -> Self {
        nd::Array1::zeros(self.len())
    }

    fn fill_zero(&mut self) {
        self.fill(C64::new(0.0, 0.0));
    }

    fn axpy(&mut self, c: f64, other: &Self) {
        self.zip_mut_with(other, |a, &b| *a += b * c);
    }

    fn component_count(&self) -> usize {
        self.len()
    }

    fn error_norm(&self, other: &Self, err: &Self, atol: f64, rtol: f64) -> f64 {
        let mut acc = 0.0f64;
        for i in 0..self.len() {
            let scale = atol + rtol * self[i].norm().max(other[i].norm());
            let e = err[i].norm() / scale;
            acc += e * e;
        }
        (acc / self.len() as f64).sqrt()
    }
}

impl OdeState for nd::Array2<C64> {
    fn zeros_like(&self) -> Self {
        nd::Array2::zeros(self.raw_dim())
    }

    fn fill_zero(&mut self) {
        self.fill(C64::new(0.0, 0.0));
    }

    fn axpy(&mut self, c: f64, other: &Self) {
        self.zip_mut_with(other, |a, &b| *a += b * c);
    }

    fn component_count(&self) -> usize {
        self.len()
    }

    fn error_norm(&self, other: &Self, err: &Self, atol: f64, rtol: f64) -> f64 {
        let (s, o, e) = (
            self.as_slice().expect("contiguous"),
            other.as_slice().expect("contiguous"),
            err.as_slice().expect("contiguous"),
        );
        let mut acc = 0.0f64;
        for i in 0..s.len() {
            let scale = atol + rtol * s[i].norm().max(o[i].norm());
            let x = e[i].norm() / scale;
            acc += x * x;
        }
        (acc / s.len() as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Adaptive Dormand–Prince 5(4).
    Adaptive,
    /// Classic 4th-order with a fixed step count over the interval.
    FixedStep(usize),
}

/// Propagation settings. Times in seconds.
#[derive(Debug, Clone)]
pub struct PropagationConfig {
    pub t_final: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Hard ceiling on the step size (anti-aliasing bound for oscillating
    /// coefficients); `None` = unbounded.
    pub max_step: Option<f64>,
    pub method: Method,
    /// Additional interior times at which the state is reported.
    pub sample_times: Vec<f64>,
}

impl PropagationConfig {
    pub fn new(t_final: f64) -> PropagationConfig {
        PropagationConfig {
            t_final,
            rtol: 1e-8,
            atol: 1e-10,
            max_step: None,
            method: Method::Adaptive,
            sample_times: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0) {
            return Err(CoreError::Parameter("t_final must be positive".into()));
        }
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(CoreError::Parameter("tolerances must be positive".into()));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return Err(CoreError::Parameter("max_step must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Integration statistics and optional per-step observer hooks.
#[derive(Debug, Clone, Default)]
pub struct OdeStats {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub rhs_evals: usize,
}

// Dormand–Prince coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
// 5th-order solution weights equal the last A row; the embedded 4th-order
// weights are below.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate dy/dt = f(t, y) from t0 over `config`. `rhs` must *accumulate*
/// into a pre-zeroed output. `on_step` is invoked after each accepted step
/// with (t, y); it may adjust the state in place (e.g. re-symmetrization)
/// and returns `false` to stop integration early, in which case the state at
/// that step is returned.
pub fn integrate<S, F, G>(
    y0: &S,
    t0: f64,
    config: &PropagationConfig,
    mut rhs: F,
    mut on_step: G,
) -> Result<(S, OdeStats)>
where
    S: OdeState,
    F: FnMut(f64, &S, &mut S),
    G: FnMut(f64, &mut S) -> bool,
{
    config.validate()?;
    let t_end = t0 + config.t_final;
    match config.method {
        Method::FixedStep(n) => {
            let n = n.max(1);
            let mut y = y0.clone();
            let h = config.t_final / n as f64;
            let mut stats = OdeStats::default();
            let mut k1 = y0.zeros_like();
            let mut k2 = y0.zeros_like();
            let mut k3 = y0.zeros_like();
            let mut k4 = y0.zeros_like();
            let mut tmp = y0.zeros_like();
            for i in 0..n {
                let t = t0 + i as f64 * h;
                k1.fill_zero();
                rhs(t, &y, &mut k1);
                tmp.clone_from(&y);
                tmp.axpy(h / 2.0, &k1);
                k2.fill_zero();
                rhs(t + h / 2.0, &tmp, &mut k2);
                tmp.clone_from(&y);
                tmp.axpy(h / 2.0, &k2);
                k3.fill_zero();
                rhs(t + h / 2.0, &tmp, &mut k3);
                tmp.clone_from(&y);
                tmp.axpy(h, &k3);
                k4.fill_zero();
                rhs(t + h, &tmp, &mut k4);
                y.axpy(h / 6.0, &k1);
                y.axpy(h / 3.0, &k2);
                y.axpy(h / 3.0, &k3);
                y.axpy(h / 6.0, &k4);
                stats.steps_accepted += 1;
                stats.rhs_evals += 4;
                if !on_step(t + h, &mut y) {
                    return Ok((y, stats));
                }
            }
            Ok((y, stats))
        }
        Method::Adaptive => {
            let mut stats = OdeStats::default();
            let mut t = t0;
            let mut y = y0.clone();
            let mut k: Vec<S> = (0..7).map(|_| y0.zeros_like()).collect();
            let mut ytmp = y0.zeros_like();
            let mut y5 = y0.zeros_like();
            let mut err = y0.zeros_like();
            let hmax = config.max_step.unwrap_or(config.t_final);
            let mut h = (config.t_final / 100.0).min(hmax);
            // FSAL: k[0] holds f(t, y).
            k[0].fill_zero();
            rhs(t, &y, &mut k[0]);
            stats.rhs_evals += 1;
            let mut first_same_as_last = true;
            while t < t_end - 1e-15 * t_end.abs().max(1.0) {
                if t + h > t_end {
                    h = t_end - t;
                }
                if !first_same_as_last {
                    k[0].fill_zero();
                    rhs(t, &y, &mut k[0]);
                    stats.rhs_evals += 1;
                }
                for stage in 1..=6 {
                    ytmp.clone_from(&y);
                    for (j, kj) in k.iter().take(stage).enumerate() {
                        let a = A[stage - 1][j];
                        if a != 0.0 {
                            ytmp.axpy(h * a, kj);
                        }
                    }
                    k[stage].fill_zero();
                    rhs(t + C[stage - 1] * h, &ytmp, &mut k[stage]);
                    stats.rhs_evals += 1;
                }
                // 5th-order solution (stage-6 ytmp already equals it).
                y5.clone_from(&y);
                for (j, kj) in k.iter().take(6).enumerate() {
                    let a = A[5][j];
                    if a != 0.0 {
                        y5.axpy(h * a, kj);
                    }
                }
                // Embedded 4th-order difference.
                err.fill_zero();
                for (j, kj) in k.iter().enumerate() {
                    let w = (if j < 6 { A[5][j] } else { 0.0 }) - B4[j];
                    if w != 0.0 {
                        err.axpy(h * w, kj);
                    }
                }
                let enorm = y.error_norm(&y5, &err, config.atol, config.rtol);
                if enorm <= 1.0 {
                    t += h;
                    std::mem::swap(&mut y, &mut y5);
                    // FSAL: k[6] = f(t+h, y_new)
                    k.swap(0, 6);
                    first_same_as_last = true;
                    stats.steps_accepted += 1;
                    if !on_step(t, &mut y) {
                        return Ok((y, stats));
                    }
                } else {
                    stats.steps_rejected += 1;
                    first_same_as_last = false;
                    if stats.steps_rejected > 100_000 {
                        return Err(CoreError::IntegratorFailure(
                            "too many rejected steps".into(),
                        ));
                    }
                }
                let factor = if enorm > 0.0 {
                    (0.9 * enorm.powf(-0.2)).clamp(0.2, 5.0)
                } else {
                    5.0
                };
                h = (h * factor).min(hmax);
                if h < 1e-18 * config.t_final {
                    return Err(CoreError::IntegratorFailure(
                        "step size underflow".into(),
                    ));
                }
            }
            Ok((y, stats))
        }
    }
}

/// Integrate while stopping exactly at each requested sample time, invoking
/// `on_sample` there (including t_final as the last sample). `on_step` runs
/// after every accepted step, as in [`integrate`]; returning `false` aborts
/// the whole integration.
pub fn integrate_with_samples<S, F, G, H>(
    y0: &S,
    t0: f64,
    config: &PropagationConfig,
    mut rhs: F,
    mut on_step: G,
    mut on_sample: H,
) -> Result<(S, OdeStats)>
where
    S: OdeState,
    F: FnMut(f64, &S, &mut S),
    G: FnMut(f64, &mut S) -> bool,
    H: FnMut(f64, &S),
{
    let mut times: Vec<f64> = config
        .sample_times
        .iter()
        .copied()
        .filter(|&t| t > t0 && t < t0 + config.t_final)
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.push(t0 + config.t_final);
    let mut y = y0.clone();
    let mut stats = OdeStats::default();
    let mut t_prev = t0;
    let mut stopped = false;
    for &t_target in &times {
        let seg = PropagationConfig {
            t_final: t_target - t_prev,
            sample_times: Vec::new(),
            method: match config.method {
                Method::FixedStep(n) => {
                    let frac = (t_target - t_prev) / config.t_final;
                    Method::FixedStep(((n as f64 * frac).ceil() as usize).max(1))
                }
                m => m,
            },
            ..config.clone()
        };
        let (ynew, s) = integrate(&y, t_prev, &seg, &mut rhs, |t, s| {
            let go = on_step(t, s);
            stopped |= !go;
            go
        })?;
        y = ynew;
        stats.steps_accepted += s.steps_accepted;
        stats.steps_rejected += s.steps_rejected;
        stats.rhs_evals += s.rhs_evals;
        if stopped {
            break;
        }
        on_sample(t_target, &y);
        t_prev = t_target;
    }
    Ok((y, stats))
}
