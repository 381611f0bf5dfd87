//! Command-line front end: `validate` (parameter report and hard checks),
//! `run` (protocol execution in four modes), and `sweep` (fidelity versus
//! coupling strength or cavity lifetime).
//!
//! Exit codes: 0 success, 1 configuration error, 2 validation failure,
//! 3 simulation failure.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cst_core::device::{
    check_matching, load_preset_with_overrides, quality_factors, to_mhz, validate_dispersive,
    DerivedParams, DeviceParams,
};
use cst_core::protocol::{
    plan, run_ideal, run_numeric, run_reverse, DriveModel, NumericOptions, RunOutput,
};
use cst_core::CoreError;
use cst_experiments::{
    default_g2_values_mhz, default_kappa_inv_values_us, run_sweep, SweepAxis, SweepConfig, Tier,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SIMULATION: i32 = 3;

#[derive(Parser)]
#[command(
    name = "cst",
    version,
    about = "Simulator for transferring entangled states from single-photon onto coherent-state qubits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RunMode {
    /// Closed-form step maps.
    Ideal,
    /// Numeric integration without dissipation.
    Lossless,
    /// Numeric integration with dissipation (trajectory ensemble).
    Lossy,
    /// Ideal forward run followed by the exact inverse sequence.
    Reverse,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TierArg {
    A,
    B,
}

impl TierArg {
    fn tier(self) -> Tier {
        match self {
            TierArg::A => Tier::A,
            TierArg::B => Tier::B,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AxisArg {
    G2,
    Kappa,
}

impl AxisArg {
    fn axis(self) -> SweepAxis {
        match self {
            AxisArg::G2 => SweepAxis::G2,
            AxisArg::Kappa => SweepAxis::Kappa,
        }
    }
}

#[derive(Args)]
struct PresetArgs {
    /// Preset file describing the device operating point.
    #[arg(long)]
    preset: PathBuf,
    /// Override a preset key, e.g. --set loss.t_us=30 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl PresetArgs {
    fn load(&self) -> Result<DeviceParams, CoreError> {
        let mut overrides = Vec::new();
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| {
                CoreError::Parameter(format!("--set expects KEY=VALUE, got `{kv}`"))
            })?;
            overrides.push((k.trim().to_string(), v.trim().to_string()));
        }
        load_preset_with_overrides(&self.preset, &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a preset: derived quantities, matching, margins, timing.
    Validate {
        #[command(flatten)]
        preset: PresetArgs,
    },
    /// Execute the transfer protocol and report fidelities.
    Run {
        #[command(flatten)]
        preset: PresetArgs,
        #[arg(long, value_enum)]
        mode: RunMode,
        #[arg(long, value_enum, default_value = "b")]
        tier: TierArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Trajectory count for lossy runs (default: tier preset).
        #[arg(long)]
        trajectories: Option<usize>,
        /// Directory for the step log.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use the device-level drive model for the conditional-drive stage.
        #[arg(long)]
        full_drive: bool,
        /// Replace the device-level dispersive stage by the effective shift
        /// Hamiltonian (faster, less faithful).
        #[arg(long)]
        effective_dispersive: bool,
    },
    /// Sweep fidelity along one parameter axis and emit a CSV.
    Sweep {
        #[command(flatten)]
        preset: PresetArgs,
        #[arg(long, value_enum)]
        axis: AxisArg,
        /// Comma-separated sweep values (MHz for g2, us for kappa).
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long, value_enum, default_value = "a")]
        tier: TierArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        trajectories: Option<usize>,
        /// Output directory for CSV, manifest, and plot script.
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Qutrit coherence scale T in microseconds (shorthand for
        /// --set loss.t_us=...).
        #[arg(long = "t-us")]
        t_us: Option<f64>,
        /// Record real wall-clock times (breaks CSV byte-determinism).
        #[arg(long)]
        timings: bool,
        /// Run without dissipation (diagnostic).
        #[arg(long)]
        lossless: bool,
        #[arg(long)]
        effective_dispersive: bool,
    },
}

fn exit_code_for(e: &CoreError, during_simulation: bool) -> i32 {
    match e {
        CoreError::Parse { .. }
        | CoreError::Io { .. }
        | CoreError::Parameter(_)
        | CoreError::UnknownLabel(_)
        | CoreError::Unsupported(_) => EXIT_CONFIG,
        CoreError::IntegratorFailure(_) | CoreError::InvalidState(_) => EXIT_SIMULATION,
        _ => {
            if during_simulation {
                EXIT_SIMULATION
            } else {
                EXIT_VALIDATION
            }
        }
    }
}

fn fmt_inf(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.3e}")
    } else {
        "inf".into()
    }
}

fn cmd_validate(p: &DeviceParams, out: &mut impl std::io::Write) -> Result<i32, CoreError> {
    let derived = DerivedParams::from_params(p)?;
    writeln!(out, "pairs (n)              : {}", p.n).ok();
    for (label, lam) in derived.lambda.iter().chain(derived.lambda_p.iter()) {
        writeln!(out, "lambda_{label}/2pi        : {:+.4} MHz", to_mhz(*lam)).ok();
    }
    writeln!(
        out,
        "lambda_common/2pi      : {:.4} MHz",
        to_mhz(derived.lambda_common())
    )
    .ok();
    writeln!(
        out,
        "omega_tilde/2pi        : {:.4} MHz",
        to_mhz(derived.omega_tilde)
    )
    .ok();
    writeln!(out, "nbar (displaced branch): {:.3}", derived.nbar).ok();
    writeln!(
        out,
        "Omega_p/2pi            : {:.4} MHz (required for m={}: {:.4} MHz)",
        to_mhz(p.drive_rabi),
        p.m,
        to_mhz(derived.drive_rabi_required)
    )
    .ok();
    let drive_consistent =
        (p.drive_rabi - derived.drive_rabi_required).abs() <= 1e-6 * derived.drive_rabi_required;
    writeln!(
        out,
        "drive-rate consistency : {}",
        if drive_consistent { "pass" } else { "FAIL" }
    )
    .ok();
    let matching = check_matching(p)?;
    let worst = matching
        .residuals
        .values()
        .cloned()
        .fold(0.0f64, f64::max);
    writeln!(
        out,
        "shift matching         : {} (worst residual {:.2e})",
        if matching.matched { "pass" } else { "FAIL" },
        worst
    )
    .ok();
    let margins = validate_dispersive(p, 10.0)?;
    writeln!(out, "margins (threshold {:.0}):", margins.threshold).ok();
    for e in &margins.entries {
        writeln!(
            out,
            "  {:<55} {:>10.2} {}",
            e.name,
            e.ratio,
            if e.pass { "" } else { "  [low]" }
        )
        .ok();
    }
    for (label, q) in quality_factors(p)? {
        writeln!(out, "Q_{label:<4}                 : {}", fmt_inf(q)).ok();
    }
    let plan_result = plan(p);
    match &plan_result {
        Ok(schedule) => {
            for step in &schedule.steps {
                writeln!(
                    out,
                    "step {:<18}: {:.4} us",
                    step.kind.name(),
                    step.duration * 1e6
                )
                .ok();
            }
            writeln!(out, "t_op                   : {:.4} us", schedule.total_time * 1e6).ok();
        }
        Err(e) => {
            writeln!(out, "plan                   : FAIL ({e})").ok();
        }
    }
    let hard_pass = drive_consistent && matching.matched && plan_result.is_ok();
    writeln!(
        out,
        "hard checks            : {}",
        if hard_pass { "pass" } else { "FAIL" }
    )
    .ok();
    Ok(if hard_pass { EXIT_OK } else { EXIT_VALIDATION })
}

fn write_run_log(
    out_dir: Option<&PathBuf>,
    mode: &str,
    output: &RunOutput,
) -> Result<(), CoreError> {
    if let Some(dir) = out_dir {
        let path = dir.join(format!("run_{mode}.log"));
        cst_experiments::emit::write_text(&path, &output.step_log())?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    p: &DeviceParams,
    mode: RunMode,
    tier: Tier,
    seed: u64,
    trajectories: Option<usize>,
    out_dir: Option<&PathBuf>,
    full_drive: bool,
    effective_dispersive: bool,
    out: &mut impl std::io::Write,
) -> Result<i32, CoreError> {
    let mut params = p.clone();
    tier.apply(&mut params);
    let space = tier.space(params.n)?;
    let (label, output) = match mode {
        RunMode::Ideal => ("ideal", run_ideal(&params, &space)?),
        RunMode::Reverse => {
            let forward = run_ideal(&params, &space)?;
            let back = run_reverse(&params, &space, &forward.final_state)?;
            writeln!(out, "forward F = {:.6}", forward.final_fidelity).ok();
            ("reverse", back)
        }
        RunMode::Lossless | RunMode::Lossy => {
            let mut opts = if mode == RunMode::Lossless {
                NumericOptions::lossless()
            } else {
                NumericOptions::lossy(
                    trajectories.unwrap_or_else(|| tier.default_trajectories()),
                    seed,
                )
            };
            opts.seed = seed;
            if full_drive {
                opts.drive_model = DriveModel::FullH3;
            }
            if effective_dispersive || params.n != 2 {
                opts.dispersive_full = false;
            }
            let label = if mode == RunMode::Lossless {
                "lossless"
            } else {
                "lossy"
            };
            (label, run_numeric(&params, &space, &opts)?)
        }
    };
    write_run_log(out_dir, label, &output)?;
    for o in &output.outcomes {
        writeln!(
            out,
            "step {:<18}: F = {:.6}  f-pop = {:.2e}",
            o.kind.name(),
            o.fidelity,
            o.f_population
        )
        .ok();
    }
    writeln!(out, "F = {:.6}", output.final_fidelity).ok();
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    p: &DeviceParams,
    axis: SweepAxis,
    values: Vec<f64>,
    tier: Tier,
    seed: u64,
    trajectories: Option<usize>,
    out_dir: PathBuf,
    timings: bool,
    lossless: bool,
    effective_dispersive: bool,
    out: &mut impl std::io::Write,
) -> Result<i32, CoreError> {
    let values = if values.is_empty() {
        match axis {
            SweepAxis::G2 => default_g2_values_mhz(),
            SweepAxis::Kappa => default_kappa_inv_values_us(),
        }
    } else {
        values
    };
    let mut cfg = SweepConfig::new(tier, seed);
    if let Some(n) = trajectories {
        cfg.numeric.n_trajectories = n;
    }
    if lossless {
        cfg.numeric.lossless = true;
    }
    if effective_dispersive || p.n != 2 {
        cfg.numeric.dispersive_full = false;
    }
    cfg.out_dir = Some(out_dir.clone());
    cfg.timings = timings;
    let result = run_sweep(p, axis, &values, &cfg)?;
    let script = cst_experiments::emit::plot_script(axis, &format!("sweep_{}.csv", axis.name()));
    cst_experiments::emit::write_text(&out_dir.join(format!("plot_{}.py", axis.name())), &script)?;
    for row in &result.rows {
        writeln!(
            out,
            "{:>10.4}  F = {:.6}  [{}]",
            row.param, row.fidelity, row.status
        )
        .ok();
    }
    if let Some(peak) = result.peak {
        writeln!(
            out,
            "peak: param = {:.4}, F = {:.6}{}",
            peak.param,
            peak.fidelity,
            if peak.interior { " (interior)" } else { " (range edge)" }
        )
        .ok();
    }
    writeln!(out, "wrote {}", out_dir.join(format!("sweep_{}.csv", axis.name())).display()).ok();
    Ok(EXIT_OK)
}

/// Parse `args` and execute; returns the process exit code. Output goes to
/// `out`, errors to stderr.
pub fn run_cli<I, T>(args: I, out: &mut impl std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // clap handles --help/--version as "errors" with success status.
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Validate { preset } => match preset.load() {
            Ok(p) => match cmd_validate(&p, out) {
                Ok(code) => code,
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code_for(&e, false)
                }
            },
            Err(e) => {
                eprintln!("error: {e}");
                exit_code_for(&e, false)
            }
        },
        Command::Run {
            preset,
            mode,
            tier,
            seed,
            trajectories,
            out: out_dir,
            full_drive,
            effective_dispersive,
        } => match preset.load() {
            Ok(p) => match cmd_run(
                &p,
                mode,
                tier.tier(),
                seed,
                trajectories,
                out_dir.as_ref(),
                full_drive,
                effective_dispersive,
                out,
            ) {
                Ok(code) => code,
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code_for(&e, true)
                }
            },
            Err(e) => {
                eprintln!("error: {e}");
                exit_code_for(&e, false)
            }
        },
        Command::Sweep {
            preset,
            axis,
            values,
            tier,
            seed,
            trajectories,
            out: out_dir,
            t_us,
            timings,
            lossless,
            effective_dispersive,
        } => {
            let mut preset = preset;
            if let Some(t) = t_us {
                preset.set.push(format!("loss.t_us={t}"));
            }
            match preset.load() {
                Ok(p) => match cmd_sweep(
                    &p,
                    axis.axis(),
                    values,
                    tier.tier(),
                    seed,
                    trajectories,
                    out_dir,
                    timings,
                    lossless,
                    effective_dispersive,
                    out,
                ) {
                    Ok(code) => code,
                    Err(e) => {
                        eprintln!("error: {e}");
                        exit_code_for(&e, true)
                    }
                },
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code_for(&e, false)
                }
            }
        }
    }
}
