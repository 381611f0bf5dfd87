//! Monte-Carlo wave-function (quantum-jump) unraveling of the Lindblad
//! equation, with shared caching of the deterministic no-jump path so that an
//! ensemble of identical inputs costs one deterministic integration plus one
//! re-integration per jumping trajectory.

use ndarray as nd;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::device::TimeDependentHamiltonian;
use crate::dynamics::lindblad::{prepare_channels, Channel};
use crate::dynamics::ode::{integrate, OdeStats, PropagationConfig};
use crate::dynamics::schrodinger::default_max_step;
use crate::error::{CoreError, Result};
use crate::hilbert::density::DensityMatrix;
use crate::hilbert::operator::Operator;
use crate::hilbert::state::StateVector;

#[derive(Debug, Clone)]
pub struct TrajectoryConfig {
    pub n_trajectories: usize,
    pub seed: u64,
    /// Jump times are refined to this fraction of the total duration.
    pub jump_rel_tol: f64,
    /// Maximum number of cached checkpoints along the no-jump path.
    pub max_checkpoints: usize,
}

impl TrajectoryConfig {
    pub fn new(n_trajectories: usize, seed: u64) -> TrajectoryConfig {
        TrajectoryConfig {
            n_trajectories,
            seed,
            jump_rel_tol: 1e-10,
            max_checkpoints: 128,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryResult {
    /// Ensemble-averaged density matrix.
    pub rho: DensityMatrix,
    /// Distinct final states with multiplicities (sums to n_trajectories).
    pub members: Vec<(u32, StateVector)>,
    pub total_jumps: usize,
    pub stats: OdeStats,
}

impl TrajectoryResult {
    /// Ensemble mean of a Hermitian observable together with the standard
    /// error of that mean across trajectories.
    pub fn expectation_with_stderr(&self, op: &Operator) -> Result<(f64, f64)> {
        let mut n_tot = 0.0f64;
        let mut mean = 0.0f64;
        let mut m2 = 0.0f64;
        for (mult, psi) in &self.members {
            let v = psi.expectation(op)?.re;
            let w = *mult as f64;
            n_tot += w;
            let delta = v - mean;
            mean += w * delta / n_tot;
            m2 += w * delta * (v - mean);
        }
        if n_tot < 2.0 {
            return Ok((mean, f64::NAN));
        }
        let var = m2 / (n_tot - 1.0);
        Ok((mean, (var / n_tot).sqrt()))
    }
}

fn norm2(y: &nd::Array1<C64>) -> f64 {
    y.iter().map(|c| c.norm_sqr()).sum()
}

struct McwfEngine<'a> {
    h: &'a TimeDependentHamiltonian,
    channels: Vec<Channel>,
    cfg: PropagationConfig,
    jump_rel_tol: f64,
    duration: f64,
    stats: OdeStats,
}

impl<'a> McwfEngine<'a> {
    fn new(
        h: &'a TimeDependentHamiltonian,
        collapse: &[(Operator, f64)],
        config: &PropagationConfig,
    ) -> Result<McwfEngine<'a>> {
        let channels = prepare_channels(h, collapse)?;
        let mut cfg = config.clone();
        if cfg.max_step.is_none() {
            cfg.max_step = default_max_step(h.max_freq());
        }
        cfg.sample_times = Vec::new();
        Ok(McwfEngine {
            h,
            channels,
            duration: cfg.t_final,
            cfg,
            jump_rel_tol: 1e-10,
            stats: OdeStats::default(),
        })
    }

    /// Deterministic no-jump integration from (t0, y0) to t1; returns the
    /// unnormalized state.
    fn integrate_segment(
        &mut self,
        y0: &nd::Array1<C64>,
        t0: f64,
        t1: f64,
    ) -> Result<nd::Array1<C64>> {
        if t1 - t0 <= 0.0 {
            return Ok(y0.clone());
        }
        let cfg = PropagationConfig {
            t_final: t1 - t0,
            ..self.cfg.clone()
        };
        let (y, stats) = {
            let h = self.h;
            let channels = &self.channels;
            integrate(
                y0,
                t0,
                &cfg,
                |t, y: &nd::Array1<C64>, out: &mut nd::Array1<C64>| {
                    let ys = y.as_slice().expect("contiguous");
                    let os = out.as_slice_mut().expect("contiguous");
                    h.apply_rhs(t, ys, os);
                    for ch in channels {
                        if ch.rate > 0.0 {
                            ch.ldagl.matvec_acc(C64::new(-0.5 * ch.rate, 0.0), ys, os);
                        }
                    }
                },
                |_, _| true,
            )?
        };
        self.accumulate(&stats);
        Ok(y)
    }

    fn accumulate(&mut self, s: &OdeStats) {
        self.stats.steps_accepted += s.steps_accepted;
        self.stats.steps_rejected += s.steps_rejected;
        self.stats.rhs_evals += s.rhs_evals;
    }

    /// Integrate until the squared norm crosses below `threshold` or `t1` is
    /// reached. Returns (state, Some(bracket)) where the bracket is
    /// (t_lo, y_lo, t_hi) around the crossing, or None if no crossing.
    #[allow(clippy::type_complexity)]
    fn integrate_until_crossing(
        &mut self,
        y0: &nd::Array1<C64>,
        t0: f64,
        t1: f64,
        threshold: f64,
    ) -> Result<(nd::Array1<C64>, Option<(f64, nd::Array1<C64>, f64)>)> {
        if t1 - t0 <= 0.0 {
            return Ok((y0.clone(), None));
        }
        let cfg = PropagationConfig {
            t_final: t1 - t0,
            ..self.cfg.clone()
        };
        let mut bracket: Option<(f64, nd::Array1<C64>, f64)> = None;
        let mut prev_t = t0;
        let mut prev_y = y0.clone();
        let h = self.h;
        let channels = &self.channels;
        let (y, stats) = integrate(
            y0,
            t0,
            &cfg,
            |t, y: &nd::Array1<C64>, out: &mut nd::Array1<C64>| {
                let ys = y.as_slice().expect("contiguous");
                let os = out.as_slice_mut().expect("contiguous");
                h.apply_rhs(t, ys, os);
                for ch in channels {
                    if ch.rate > 0.0 {
                        ch.ldagl.matvec_acc(C64::new(-0.5 * ch.rate, 0.0), ys, os);
                    }
                }
            },
            |t, y: &mut nd::Array1<C64>| {
                if norm2(y) < threshold {
                    bracket = Some((prev_t, prev_y.clone(), t));
                    false
                } else {
                    prev_t = t;
                    prev_y.clone_from(y);
                    true
                }
            },
        )?;
        self.accumulate(&stats);
        Ok((y, bracket))
    }

    /// Refine a jump time within (t_lo, t_hi) by bisection, re-integrating
    /// short segments from the cached bracket state. Returns (t_jump, state
    /// just before the jump, unnormalized).
    fn refine_jump(
        &mut self,
        mut t_lo: f64,
        mut y_lo: nd::Array1<C64>,
        mut t_hi: f64,
        threshold: f64,
    ) -> Result<(f64, nd::Array1<C64>)> {
        let tol = self.jump_rel_tol * self.duration;
        let mut guard = 0;
        while t_hi - t_lo > tol && guard < 200 {
            guard += 1;
            let tm = 0.5 * (t_lo + t_hi);
            let ym = self.integrate_segment(&y_lo, t_lo, tm)?;
            if norm2(&ym) < threshold {
                t_hi = tm;
            } else {
                t_lo = tm;
                y_lo = ym;
            }
        }
        Ok((t_lo, y_lo))
    }

    /// Apply a quantum jump at time t: pick a channel with probability
    /// proportional to rate_k ||L_k psi||^2 and project.
    fn apply_jump(
        &self,
        y: &nd::Array1<C64>,
        rng: &mut ChaCha8Rng,
    ) -> Result<nd::Array1<C64>> {
        let ys = y.as_slice().expect("contiguous");
        let mut weights = Vec::with_capacity(self.channels.len());
        let mut total = 0.0;
        let mut projected: Vec<nd::Array1<C64>> = Vec::with_capacity(self.channels.len());
        for ch in &self.channels {
            if ch.rate == 0.0 {
                weights.push(0.0);
                projected.push(nd::Array1::zeros(0));
                continue;
            }
            let mut ly = nd::Array1::<C64>::zeros(y.len());
            ch.l
                .matvec_acc(C64::new(1.0, 0.0), ys, ly.as_slice_mut().unwrap());
            let w = ch.rate * norm2(&ly);
            weights.push(w);
            total += w;
            projected.push(ly);
        }
        if total <= 0.0 {
            return Err(CoreError::IntegratorFailure(
                "jump triggered but all channel weights vanish".into(),
            ));
        }
        let mut u = rng.gen::<f64>() * total;
        for (k, w) in weights.iter().enumerate() {
            u -= w;
            if u <= 0.0 && *w > 0.0 {
                let n = norm2(&projected[k]).sqrt();
                return Ok(projected[k].mapv(|c| c / n));
            }
        }
        // Floating point fallthrough: take the last non-zero channel.
        let k = weights
            .iter()
            .rposition(|&w| w > 0.0)
            .expect("total > 0 implies a non-zero weight");
        let n = norm2(&projected[k]).sqrt();
        Ok(projected[k].mapv(|c| c / n))
    }

    /// Evolve one trajectory from (t0, y0 normalized) to the final time with
    /// jump threshold `r` already drawn. Returns (normalized final state,
    /// number of jumps).
    fn run_trajectory(
        &mut self,
        mut y: nd::Array1<C64>,
        mut t: f64,
        mut r: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<(nd::Array1<C64>, usize)> {
        let t_end = self.duration;
        let mut jumps = 0usize;
        loop {
            // The running norm^2 at t is norm2(y) * (survival already
            // consumed); we work with the absolute norm of the unnormalized
            // segment state, so rescale the threshold each segment.
            let (y_end, bracket) = self.integrate_until_crossing(&y, t, t_end, r)?;
            match bracket {
                None => {
                    let n = norm2(&y_end).sqrt();
                    return Ok((y_end.mapv(|c| c / n), jumps));
                }
                Some((t_lo, y_lo, t_hi)) => {
                    let (t_jump, y_pre) = self.refine_jump(t_lo, y_lo, t_hi, r)?;
                    y = self.apply_jump(&y_pre, rng)?;
                    t = t_jump;
                    jumps += 1;
                    r = draw_threshold(rng);
                    if jumps > 10_000 {
                        return Err(CoreError::IntegratorFailure(
                            "runaway jump count".into(),
                        ));
                    }
                }
            }
        }
    }
}

fn draw_threshold(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let r: f64 = rng.gen();
        if r > 0.0 {
            return r;
        }
    }
}

/// Thinning checkpoint store for the no-jump path.
struct CheckpointTrail {
    times: Vec<f64>,
    states: Vec<nd::Array1<C64>>,
    stride: usize,
    counter: usize,
    cap: usize,
}

impl CheckpointTrail {
    fn new(t0: f64, y0: nd::Array1<C64>, cap: usize) -> CheckpointTrail {
        CheckpointTrail {
            times: vec![t0],
            states: vec![y0],
            stride: 1,
            counter: 0,
            cap: cap.max(4),
        }
    }

    fn push(&mut self, t: f64, y: &nd::Array1<C64>) {
        self.counter += 1;
        if self.counter % self.stride != 0 {
            return;
        }
        self.times.push(t);
        self.states.push(y.clone());
        if self.times.len() > self.cap {
            // Drop every other interior checkpoint and double the stride.
            let mut keep_t = Vec::with_capacity(self.cap / 2 + 1);
            let mut keep_s = Vec::with_capacity(self.cap / 2 + 1);
            for i in 0..self.times.len() {
                if i % 2 == 0 {
                    keep_t.push(self.times[i]);
                    keep_s.push(self.states[i].clone());
                }
            }
            self.times = keep_t;
            self.states = keep_s;
            self.stride *= 2;
        }
    }

    /// Latest checkpoint whose squared norm is still at or above `r`
    /// (the no-jump norm decays monotonically).
    fn restart_point(&self, r: f64) -> (f64, &nd::Array1<C64>) {
        let mut idx = 0;
        for i in 0..self.times.len() {
            if norm2(&self.states[i]) >= r {
                idx = i;
            } else {
                break;
            }
        }
        (self.times[idx], &self.states[idx])
    }
}

/// Evolve a weighted ensemble of pure states through the same lossy channel,
/// caching the deterministic no-jump path per distinct input. Returns the
/// deduplicated output ensemble and the total number of jumps.
pub fn evolve_ensemble_mcwf(
    h: &TimeDependentHamiltonian,
    collapse: &[(Operator, f64)],
    inputs: &[(u32, StateVector)],
    config: &PropagationConfig,
    traj: &TrajectoryConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<(u32, StateVector)>, usize, OdeStats)> {
    let mut engine = McwfEngine::new(h, collapse, config)?;
    engine.jump_rel_tol = traj.jump_rel_tol;
    let space = h.space().clone();
    let mut out: Vec<(u32, StateVector)> = Vec::new();
    let mut total_jumps = 0usize;
    for (mult, psi) in inputs {
        if psi.space() != &space {
            return Err(CoreError::SpaceMismatch(
                "ensemble member on a different space than the Hamiltonian".into(),
            ));
        }
        psi.check_normalized()?;
        // One deterministic no-jump integration with checkpoints.
        let mut trail = CheckpointTrail::new(0.0, psi.amplitudes().clone(), traj.max_checkpoints);
        let cfg = PropagationConfig {
            t_final: engine.duration,
            ..engine.cfg.clone()
        };
        let (y_nj, stats) = {
            let channels = &engine.channels;
            integrate(
                psi.amplitudes(),
                0.0,
                &cfg,
                |t, y: &nd::Array1<C64>, out: &mut nd::Array1<C64>| {
                    let ys = y.as_slice().expect("contiguous");
                    let os = out.as_slice_mut().expect("contiguous");
                    h.apply_rhs(t, ys, os);
                    for ch in channels {
                        if ch.rate > 0.0 {
                            ch.ldagl.matvec_acc(C64::new(-0.5 * ch.rate, 0.0), ys, os);
                        }
                    }
                },
                |t, y: &mut nd::Array1<C64>| {
                    trail.push(t, y);
                    true
                },
            )?
        };
        engine.accumulate(&stats);
        let p_nojump = norm2(&y_nj);
        let n = p_nojump.sqrt();
        let psi_nj = StateVector::from_amplitudes(space.clone(), y_nj.mapv(|c| c / n))?;
        let mut survivors = 0u32;
        for _ in 0..*mult {
            let r = draw_threshold(rng);
            if r < p_nojump {
                survivors += 1;
            } else {
                // This trajectory jumps; restart from the latest usable
                // checkpoint and evolve with the drawn threshold.
                let (t_c, y_c) = trail.restart_point(r);
                let (t_c, y_c) = (t_c, y_c.clone());
                let (y_fin, jumps) = engine.run_trajectory(y_c, t_c, r, rng)?;
                total_jumps += jumps;
                out.push((1, StateVector::from_amplitudes(space.clone(), y_fin)?));
            }
        }
        if survivors > 0 {
            out.push((survivors, psi_nj));
        }
    }
    Ok((out, total_jumps, engine.stats))
}

/// Unravel the Lindblad dynamics of a single initial state into
/// `traj.n_trajectories` quantum trajectories and average them.
pub fn propagate_trajectories(
    h: &TimeDependentHamiltonian,
    collapse: &[(Operator, f64)],
    psi0: &StateVector,
    config: &PropagationConfig,
    traj: &TrajectoryConfig,
) -> Result<TrajectoryResult> {
    if traj.n_trajectories == 0 {
        return Err(CoreError::Parameter(
            "n_trajectories must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(traj.seed);
    let inputs = vec![(traj.n_trajectories as u32, psi0.clone())];
    let (members, total_jumps, stats) =
        evolve_ensemble_mcwf(h, collapse, &inputs, config, traj, &mut rng)?;
    let w = 1.0 / traj.n_trajectories as f64;
    let weighted: Vec<(f64, StateVector)> = members
        .iter()
        .map(|(m, s)| (*m as f64 * w, s.clone()))
        .collect();
    let rho = DensityMatrix::from_ensemble(&weighted)?;
    Ok(TrajectoryResult {
        rho,
        members,
        total_jumps,
        stats,
    })
}
