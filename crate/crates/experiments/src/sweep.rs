//! Parameter sweeps: transfer fidelity versus coupling strength or cavity
//! lifetime, with deterministic per-point seeding, resumable output, and an
//! interior-peak estimate.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use cst_core::device::{mhz, us, DeviceParams};
use cst_core::protocol::NumericOptions;
use cst_core::{CoreError, Result};

use crate::emit::{fnv1a64, parse_csv, write_csv, write_text};
use crate::point::transfer_point;
use crate::tier::Tier;

/// Environment variable selecting the worker-thread count for sweep points.
pub const WORKERS_ENV: &str = "CST_WORKERS";

/// Rows whose numerical-health diagnostics exceed these bounds are flagged.
pub const TRACE_ERR_FLAG: f64 = 1e-5;
pub const LEAKAGE_FLAG: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Coupling strength of the single-photon cavities, co-scaling the
    /// coherent-cavity couplings; parameter column in MHz (ordinary
    /// frequency).
    G2,
    /// Uniform cavity lifetime 1/kappa; parameter column in microseconds.
    Kappa,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::G2 => "g2",
            SweepAxis::Kappa => "kappa",
        }
    }

    pub fn parse(s: &str) -> Option<SweepAxis> {
        match s {
            "g2" => Some(SweepAxis::G2),
            "kappa" => Some(SweepAxis::Kappa),
            _ => None,
        }
    }

    /// Apply one sweep value (in this axis's display units) to a parameter
    /// set.
    pub fn apply(&self, p: &mut DeviceParams, value: f64) {
        match self {
            SweepAxis::G2 => p.set_g2_coscaled(mhz(value)),
            SweepAxis::Kappa => p.set_kappa_all(1.0 / us(value)),
        }
    }
}

/// Default coupling-sweep grid: 21 points across 4..24 MHz.
pub fn default_g2_values_mhz() -> Vec<f64> {
    (0..21).map(|k| 4.0 + k as f64).collect()
}

/// Default lifetime-sweep grid (microseconds).
pub fn default_kappa_inv_values_us() -> Vec<f64> {
    vec![50.0, 100.0, 150.0]
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub tier: Tier,
    pub seed: u64,
    /// Template solver options; the seed is re-derived per point.
    pub numeric: NumericOptions,
    /// Directory for the CSV, manifest, and plot script; `None` keeps the
    /// sweep in memory only.
    pub out_dir: Option<PathBuf>,
    /// Record real wall-clock times (breaks byte-determinism of the CSV).
    pub timings: bool,
}

impl SweepConfig {
    pub fn new(tier: Tier, seed: u64) -> SweepConfig {
        SweepConfig {
            tier,
            seed,
            numeric: NumericOptions::lossy(tier.default_trajectories(), seed),
            out_dir: None,
            timings: false,
        }
    }

    fn point_seed(&self, index: usize) -> u64 {
        self.seed ^ index as u64
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub param: f64,
    pub fidelity: f64,
    pub trace_err: f64,
    pub leakage: f64,
    pub f_pop_max: f64,
    pub wall_s: f64,
    pub status: String,
}

impl SweepRow {
    fn pending(param: f64) -> SweepRow {
        SweepRow {
            param,
            fidelity: 0.0,
            trace_err: 0.0,
            leakage: 0.0,
            f_pop_max: 0.0,
            wall_s: 0.0,
            status: "pending".into(),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.status == "ok" || self.status == "flagged"
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PeakEstimate {
    pub param: f64,
    pub fidelity: f64,
    /// True when the maximum sits strictly inside the sweep range.
    pub interior: bool,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    pub peak: Option<PeakEstimate>,
}

/// Vertex of the parabola through the best point and its neighbors; falls
/// back to the raw argmax at range edges.
pub fn estimate_peak(rows: &[SweepRow]) -> Option<PeakEstimate> {
    let complete: Vec<&SweepRow> = rows.iter().filter(|r| r.is_complete()).collect();
    if complete.is_empty() {
        return None;
    }
    let (imax, best) = complete
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.fidelity.partial_cmp(&b.1.fidelity).unwrap())?;
    if imax == 0 || imax + 1 == complete.len() {
        return Some(PeakEstimate {
            param: best.param,
            fidelity: best.fidelity,
            interior: false,
        });
    }
    let (x0, y0) = (complete[imax - 1].param, complete[imax - 1].fidelity);
    let (x1, y1) = (best.param, best.fidelity);
    let (x2, y2) = (complete[imax + 1].param, complete[imax + 1].fidelity);
    // Lagrange quadratic vertex.
    let d0 = (x1 - x0) * (y1 - y2);
    let d2 = (x1 - x2) * (y1 - y0);
    let denom = d0 - d2;
    if denom.abs() < 1e-300 {
        return Some(PeakEstimate {
            param: x1,
            fidelity: y1,
            interior: true,
        });
    }
    let xv = x1 - 0.5 * ((x1 - x0) * d0 - (x1 - x2) * d2) / denom;
    // Evaluate the parabola at the vertex.
    let l0 = (xv - x1) * (xv - x2) / ((x0 - x1) * (x0 - x2));
    let l1 = (xv - x0) * (xv - x2) / ((x1 - x0) * (x1 - x2));
    let l2 = (xv - x0) * (xv - x1) / ((x2 - x0) * (x2 - x1));
    Some(PeakEstimate {
        param: xv,
        fidelity: y0 * l0 + y1 * l1 + y2 * l2,
        interior: true,
    })
}

fn fingerprint(p: &DeviceParams) -> u64 {
    fnv1a64(format!("{p:?}").as_bytes())
}

fn manifest_text(
    p: &DeviceParams,
    axis: SweepAxis,
    values: &[f64],
    cfg: &SweepConfig,
) -> String {
    let vals: Vec<String> = values.iter().map(|v| format!("{v:.6}")).collect();
    format!(
        "tool=cst {version}\naxis={axis}\ntier={tier}\nseed={seed}\ntrajectories={traj}\n\
         lossless={lossless}\nparams_fp={fp:016x}\nvalues={vals}\n",
        version = env!("CARGO_PKG_VERSION"),
        axis = axis.name(),
        tier = cfg.tier.name(),
        seed = cfg.seed,
        traj = cfg.numeric.n_trajectories,
        lossless = cfg.numeric.lossless,
        fp = fingerprint(p),
        vals = vals.join(","),
    )
}

fn csv_path(dir: &Path, axis: SweepAxis) -> PathBuf {
    dir.join(format!("sweep_{}.csv", axis.name()))
}

fn manifest_path(dir: &Path, axis: SweepAxis) -> PathBuf {
    dir.join(format!("sweep_{}.manifest", axis.name()))
}

/// Load rows from a previous interrupted run if its manifest matches this
/// configuration exactly.
fn resume_rows(
    dir: &Path,
    axis: SweepAxis,
    expected_manifest: &str,
    values: &[f64],
) -> Option<Vec<SweepRow>> {
    let manifest = std::fs::read_to_string(manifest_path(dir, axis)).ok()?;
    if manifest != expected_manifest {
        return None;
    }
    let text = std::fs::read_to_string(csv_path(dir, axis)).ok()?;
    let rows = parse_csv(&text).ok()?;
    if rows.len() != values.len() {
        return None;
    }
    for (row, v) in rows.iter().zip(values) {
        if format!("{:.6}", row.param) != format!("{v:.6}") {
            return None;
        }
    }
    Some(rows)
}

fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

fn run_point(
    base: &DeviceParams,
    axis: SweepAxis,
    value: f64,
    index: usize,
    cfg: &SweepConfig,
) -> Result<SweepRow> {
    let mut p = base.clone();
    cfg.tier.apply(&mut p);
    axis.apply(&mut p, value);
    let space = cfg.tier.space(p.n)?;
    let mut opts = cfg.numeric.clone();
    opts.seed = cfg.point_seed(index);
    let started = std::time::Instant::now();
    let diag = transfer_point(&p, &space, &opts)?;
    let wall_s = if cfg.timings {
        started.elapsed().as_secs_f64()
    } else {
        0.0
    };
    let flagged = diag.trace_err >= TRACE_ERR_FLAG || diag.leakage >= LEAKAGE_FLAG;
    Ok(SweepRow {
        param: value,
        fidelity: diag.fidelity,
        trace_err: diag.trace_err,
        leakage: diag.leakage,
        f_pop_max: diag.f_pop_max,
        wall_s,
        status: if flagged { "flagged" } else { "ok" }.into(),
    })
}

/// Run a sweep over `values` (display units of the axis). Completed points
/// from a matching interrupted run are reused; rows are persisted after
/// every completed point when an output directory is configured. A failing
/// point aborts the sweep after persisting the partial result.
pub fn run_sweep(
    base: &DeviceParams,
    axis: SweepAxis,
    values: &[f64],
    cfg: &SweepConfig,
) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(CoreError::Parameter("sweep needs at least one value".into()));
    }
    if values.iter().any(|&v| !(v > 0.0)) {
        return Err(CoreError::Parameter(
            "sweep values must be positive".into(),
        ));
    }
    let manifest = manifest_text(base, axis, values, cfg);
    let mut rows: Vec<SweepRow> = cfg
        .out_dir
        .as_deref()
        .and_then(|dir| resume_rows(dir, axis, &manifest, values))
        .unwrap_or_else(|| values.iter().map(|&v| SweepRow::pending(v)).collect());
    if let Some(dir) = cfg.out_dir.as_deref() {
        write_text(&manifest_path(dir, axis), &manifest)?;
        write_csv(&csv_path(dir, axis), &rows)?;
    }
    let todo: Vec<usize> = (0..values.len())
        .filter(|&k| !rows[k].is_complete())
        .collect();
    let workers = worker_count().min(todo.len().max(1));
    let shared = Mutex::new((&mut rows, cfg.out_dir.as_deref()));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let first_error: Mutex<Option<CoreError>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let slot = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if slot >= todo.len() || first_error.lock().unwrap().is_some() {
                    return;
                }
                let k = todo[slot];
                match run_point(base, axis, values[k], k, cfg) {
                    Ok(row) => {
                        let mut guard = shared.lock().unwrap();
                        guard.0[k] = row;
                        if let Some(dir) = guard.1 {
                            // Best-effort checkpoint; the final write reports
                            // errors.
                            let _ = write_csv(&csv_path(dir, axis), guard.0);
                        }
                    }
                    Err(e) => {
                        let mut slot = first_error.lock().unwrap();
                        if slot.is_none() {
                            *slot = Some(e);
                        }
                    }
                }
            });
        }
    });
    if let Some(dir) = cfg.out_dir.as_deref() {
        write_csv(&csv_path(dir, axis), &rows)?;
    }
    if let Some(e) = first_error.into_inner().unwrap() {
        return Err(e);
    }
    let peak = estimate_peak(&rows);
    Ok(SweepResult { axis, rows, peak })
}
