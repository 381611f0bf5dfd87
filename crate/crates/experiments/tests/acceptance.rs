//! Acceptance gate: one test per release criterion, each printing a single
//! PASS/FAIL line. Run with `--nocapture` to see the lines for passing tests.

use std::sync::Arc;
use std::time::Instant;

use cst_experiments::{run_sweep, transfer_point, SweepAxis, SweepConfig, Tier};

use cst_core::device::{
    build_h1, build_h2, build_h3, ghz, load_preset_file, mhz, us,
    DeviceParams, TimeDependentHamiltonian,
};
use cst_core::dynamics::{
    default_max_step, evolve_conditional_drive_map, evolve_dispersive_map, evolve_rabi,
    propagate_lindblad, propagate_schrodinger, PropagationConfig,
};
use cst_core::hilbert::{
    annihilation, coherent_state, embed, number, pure_fidelity, DensityMatrix, HilbertSpace,
    Operator, StateVector,
};
use cst_core::protocol::{plan, protocol_space, run_ideal, run_reverse, NumericOptions};
use cst_core::sparse::CsrMatrix;
use cst_core::Result;
use ndarray as nd;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: usize, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {criterion}: {tag} - {detail}");
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn preset_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets/paper_sec4")
}

/// Propagation settings used throughout: default tolerances plus the
/// anti-aliasing step bound for the Hamiltonian's fastest term.
fn config_for(h: &TimeDependentHamiltonian, t: f64) -> PropagationConfig {
    let mut cfg = PropagationConfig::new(t);
    cfg.max_step = default_max_step(h.max_freq());
    cfg
}

/// Criterion 1: the numerical propagator under the resonant-swap Hamiltonian
/// reproduces the closed-form vacuum Rabi rotation.
#[test]
fn criterion_1_resonant_swap_matches_closed_form() {
    let start = Instant::now();
    let mut p = DeviceParams::paper_point();
    p.set_lossless();
    let space = protocol_space(2, 3, 4, 4).unwrap();
    let g0 = StateVector::basis(space.clone(), &[0, 0, 0, 0, 0]).unwrap();
    let g1 = StateVector::basis(space.clone(), &[0, 1, 0, 0, 0]).unwrap();
    let psi0 = g0
        .add(&g1)
        .unwrap()
        .scale(c64(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    let t = std::f64::consts::PI / (2.0 * p.g_r);
    let h = build_h1(&p, &space).unwrap();
    let numeric = propagate_schrodinger(&h, &psi0, &config_for(&h, t))
        .unwrap()
        .state;
    let closed = evolve_rabi(&psi0, p.g_r, t).unwrap();
    let f = pure_fidelity(&closed, &numeric).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    report(
        1,
        f >= 1.0 - 1e-8 && elapsed < 1.0,
        &format!("swap fidelity to closed form {f:.10} in {elapsed:.2} s"),
    );
}

/// Shared state for criterion 2: the branch superposition entering the
/// conditional-phase stage, on a (coupler, c2, c1p, c2p) space.
fn dispersive_probe(space: &Arc<HilbertSpace>, alpha: C64) -> StateVector {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let qutrit = |lvl: usize| {
        StateVector::basis(HilbertSpace::single("qutrit", 3).unwrap(), &[lvl]).unwrap()
    };
    let fock = |label: &str, n: usize| {
        let dim = space.dim_of(label).unwrap();
        StateVector::basis(HilbertSpace::single(label, dim).unwrap(), &[n]).unwrap()
    };
    let pm = |label: &str, sign: f64| {
        fock(label, 0)
            .add(&fock(label, 1).scale(c64(sign, 0.0)))
            .unwrap()
            .scale(c64(r, 0.0))
    };
    let coh = |label: &str| {
        coherent_state(alpha, space.dim_of(label).unwrap())
            .unwrap()
            .relabel("mode", label)
            .unwrap()
    };
    let g_branch = qutrit(0)
        .tensor(&pm("c2", 1.0))
        .unwrap()
        .tensor(&coh("c1p"))
        .unwrap()
        .tensor(&coh("c2p"))
        .unwrap();
    let e_branch = qutrit(1)
        .tensor(&pm("c2", -1.0))
        .unwrap()
        .tensor(&coh("c1p"))
        .unwrap()
        .tensor(&coh("c2p"))
        .unwrap();
    g_branch
        .scale(c64(r, 0.0))
        .add(&e_branch.scale(c64(0.0, -r)))
        .unwrap()
}

/// Criterion 2: the conditional-phase stage under the full coupling
/// Hamiltonian agrees with the closed-form phase map in the far-detuned
/// regime, and the agreement degrades monotonically as the detuning-to-
/// coupling ratio shrinks from ~20 to ~5.
#[test]
fn criterion_2_dispersive_limit_holds_and_degrades() {
    let alpha = c64(1.2, 0.0);
    let space = HilbertSpace::new(&[("qutrit", 3), ("c2", 3), ("c1p", 16), ("c2p", 12)]).unwrap();
    let psi0 = dispersive_probe(&space, alpha);
    let scales = [1.0, 0.72, 0.48, 0.34, 0.24];
    let mut fids = Vec::new();
    for &rs in &scales {
        let mut p = DeviceParams::paper_point();
        p.set_lossless();
        p.alpha = alpha;
        p.unwanted = Default::default();
        // zero the unwanted channels and crosstalk; keep only wanted couplings
        p.unwanted.g_prime = 0.0;
        p.unwanted.g_dprime = 0.0;
        p.unwanted.mu_prime = 0.0;
        p.unwanted.mu_dprime = 0.0;
        p.crosstalk.clear();
        // scale every detuning by rs while keeping the couplings fixed
        p.omega_c
            .insert("c2".to_string(), p.omega_fg + ghz(0.25) * rs);
        p.omega_c
            .insert("c1p".to_string(), p.omega_fe + mhz(125.0) * rs);
        p.omega_c
            .insert("c2p".to_string(), p.omega_fe - mhz(125.0) * rs);
        let lam2 = p.g["c2"].powi(2) / p.delta_sps("c2").unwrap();
        let lam1p = p.mu["c1p"].powi(2) / p.delta_cs("c1p").unwrap();
        let lam2p = p.mu["c2p"].powi(2) / p.delta_cs("c2p").unwrap();
        let t = std::f64::consts::PI / lam2.abs();
        let h = build_h2(&p, &space).unwrap();
        let numeric = propagate_schrodinger(&h, &psi0, &config_for(&h, t))
            .unwrap()
            .state;
        let lambda_g = [("c2".to_string(), lam2)].into_iter().collect();
        let lambda_e = [
            ("c1p".to_string(), lam1p),
            ("c2p".to_string(), lam2p),
        ]
        .into_iter()
        .collect();
        let mapped = evolve_dispersive_map(&psi0, &lambda_g, &lambda_e, t).unwrap();
        fids.push(pure_fidelity(&mapped, &numeric).unwrap());
    }
    let monotone = fids.windows(2).all(|w| w[1] < w[0]);
    report(
        2,
        fids[0] >= 0.99 && monotone,
        &format!("fidelity ladder over shrinking detuning ratios: {fids:?}"),
    );
}

/// Criterion 3: the conditional drive under the device-level two-term
/// Hamiltonian (cavity coupling + classical drive). The vacuum block must
/// complete its excitation return; the displaced branch must survive the
/// full drive hold. The displaced branch is known to fall far short at this
/// operating point: the drive hierarchy ratio is only ~2.5 at the tier-A
/// photon number, so the phase-return idealization breaks down and the
/// criterion fails.
#[test]
fn criterion_3_conditional_drive_under_device_hamiltonian() {
    let mut p = DeviceParams::paper_point();
    p.set_lossless();
    p.alpha = c64(1.2, 0.0);
    // published (rounded) drive amplitude rather than the exact derived one
    p.drive_rabi = mhz(0.454);
    let space = HilbertSpace::new(&[("qutrit", 3), ("c1p", 18)]).unwrap();
    let t = std::f64::consts::PI / (2.0 * p.drive_rabi);
    let h = build_h3(&p, &space).unwrap();
    let omega_tilde = p.g_tilde * p.g_tilde / (2.0 * p.delta_tilde());

    let run = |psi0: &StateVector| -> (StateVector, StateVector) {
        let numeric = propagate_schrodinger(&h, psi0, &config_for(&h, t))
            .unwrap()
            .state;
        let mapped =
            evolve_conditional_drive_map(psi0, omega_tilde, p.drive_rabi, t, p.phi).unwrap();
        (numeric, mapped)
    };

    // excitation return: |e, vacuum> -> coupler ground level (the residual
    // ~2% outside |g, 0> is coherent dressing by the cavity coupling)
    let e0 = StateVector::basis(space.clone(), &[1, 0]).unwrap();
    let (num_e, _) = run(&e0);
    let g0 = StateVector::basis(space.clone(), &[0, 0]).unwrap();
    let pop_g0 = num_e.overlap(&g0).unwrap().norm_sqr();
    let pop: f64 = num_e.amplitudes().iter().take(18).map(|z| z.norm_sqr()).sum();

    // displaced-branch hold: |g, 2 alpha> must come back to itself
    let coh = coherent_state(2.0 * p.alpha, 18).unwrap().relabel("mode", "c1p").unwrap();
    let gq = StateVector::basis(HilbertSpace::single("qutrit", 3).unwrap(), &[0]).unwrap();
    let g2a = gq.tensor(&coh).unwrap();
    let (num_g, map_g) = run(&g2a);
    let f_hold = pure_fidelity(&map_g, &num_g).unwrap();

    report(
        3,
        pop >= 0.99 && f_hold >= 0.98,
        &format!(
            "excitation-transfer population {pop:.4} (|g,0> share {pop_g0:.4}), displaced-branch hold fidelity {f_hold:.4}"
        ),
    );
}

/// Criterion 4: the closed-form end-to-end run on the shipped two-pair preset
/// reaches the entangled coherent-state target, round-trips under the
/// reversed schedule, and the schedule totals ~1.41 us with zero dead times.
#[test]
fn criterion_4_ideal_end_to_end_and_schedule() {
    let p = load_preset_file(&preset_path()).unwrap();
    let space = protocol_space(2, 3, 38, 17).unwrap();
    let fwd = run_ideal(&p, &space).unwrap();
    let rev = run_reverse(&p, &space, &fwd.final_state).unwrap();
    let sched = plan(&p).unwrap();
    let t_op_us = sched.total_time * 1e6;
    let ok = fwd.final_fidelity >= 0.999
        && rev.final_fidelity >= 0.999
        && (t_op_us - 1.41).abs() <= 0.05 * 1.41;
    report(
        4,
        ok,
        &format!(
            "forward fidelity {:.6}, reverse fidelity {:.6}, t_op {t_op_us:.4} us",
            fwd.final_fidelity, rev.final_fidelity
        ),
    );
}

fn dense_kron(a: &nd::Array2<C64>, b: &nd::Array2<C64>) -> nd::Array2<C64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = nd::Array2::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Criterion 5: the density-matrix solver against two oracles — the analytic
/// photon-number decay of a damped cavity, and a brute-force matrix
/// exponential of the vectorized generator on a tiny system.
#[test]
fn criterion_5_master_equation_oracles() {
    // (a) damped cavity: <n(t)> = <n(0)> e^{-kappa t}
    let dim = 20;
    let space = HilbertSpace::single("mode", dim).unwrap();
    let kappa = 1.0 / us(100.0);
    let psi0 = coherent_state(c64(1.2, 0.0), dim).unwrap();
    let rho0 = DensityMatrix::from_pure(&psi0);
    let h = TimeDependentHamiltonian::new(space.clone());
    let a_op = annihilation(dim).unwrap();
    let n_op = number(dim).unwrap();
    let mut cfg = PropagationConfig::new(us(30.0));
    cfg.sample_times = vec![us(5.0), us(10.0), us(20.0)];
    let res = propagate_lindblad(&h, &[(a_op, kappa)], &rho0, &cfg).unwrap();
    let n0 = rho0.expectation(&n_op).unwrap().re;
    let mut worst_rel = 0.0f64;
    let mut check = |t: f64, rho: &DensityMatrix| {
        let got = rho.expectation(&n_op).unwrap().re;
        let want = n0 * (-kappa * t).exp();
        worst_rel = worst_rel.max((got - want).abs() / want);
    };
    for (t, rho) in &res.samples {
        check(*t, rho);
    }
    check(cfg.t_final, &res.rho);

    // (b) two coupled lossy two-level modes against expm of the vectorized
    // generator
    let pair = HilbertSpace::new(&[("a", 2), ("b", 2)]).unwrap();
    let a2 = annihilation(2).unwrap();
    let aa = embed(&a2, &pair, "a").unwrap();
    let ab = embed(&a2, &pair, "b").unwrap();
    let coupling = aa
        .dagger()
        .dot(&ab)
        .unwrap()
        .scale(c64(mhz(3.0), 0.0));
    let hmat = coupling
        .add(&coupling.dagger())
        .unwrap()
        .add(&embed(&number(2).unwrap(), &pair, "a").unwrap().scale(c64(mhz(5.0), 0.0)))
        .unwrap();
    let mut h2 = TimeDependentHamiltonian::new(pair.clone());
    h2.add_static(hmat.clone()).unwrap();
    let na = embed(&number(2).unwrap(), &pair, "a").unwrap();
    let channels = vec![
        (aa.clone(), 1.0 / us(20.0)),
        (ab.clone(), 1.0 / us(35.0)),
        (na.clone(), 1.0 / us(15.0)),
    ];
    let up = StateVector::basis(pair.clone(), &[1, 1]).unwrap();
    let plus = StateVector::basis(pair.clone(), &[1, 0])
        .unwrap()
        .add(&StateVector::basis(pair.clone(), &[0, 1]).unwrap())
        .unwrap()
        .scale(c64(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    let mix = DensityMatrix::from_ensemble(&[(0.6, up), (0.4, plus)]).unwrap();
    let t = us(4.0);
    let mut cfg2 = PropagationConfig::new(t);
    cfg2.rtol = 1e-11;
    cfg2.atol = 1e-13;
    let res2 = propagate_lindblad(&h2, &channels, &mix, &cfg2).unwrap();

    let d = 4usize;
    let eye: nd::Array2<C64> = nd::Array2::eye(d);
    let hd = hmat.matrix().to_dense();
    let mut gen = dense_kron(&hd, &eye) - dense_kron(&eye, &hd.t().to_owned());
    gen.mapv_inplace(|z| z * c64(0.0, -1.0));
    for (l, rate) in &channels {
        let ld = l.matrix().to_dense();
        let lconj = ld.mapv(|z| z.conj());
        let ldagl = l.matrix().dagger().matmul(l.matrix()).to_dense();
        let jump = dense_kron(&ld, &lconj);
        let anti = dense_kron(&ldagl, &eye) + dense_kron(&eye, &ldagl.t().to_owned());
        gen = gen + jump.mapv(|z| z * c64(*rate, 0.0)) - anti.mapv(|z| z * c64(0.5 * rate, 0.0));
    }
    let u = cst_core::linalg::expm(&gen.mapv(|z| z * c64(t, 0.0)));
    // vec(rho) with row-major stacking matches the (L (x) conj(R)) convention
    let v0 = nd::Array1::from_iter(mix.matrix().iter().cloned());
    let v1 = u.dot(&v0);
    let oracle = nd::Array2::from_shape_vec((d, d), v1.to_vec()).unwrap();
    let diff = (&oracle - res2.rho.matrix())
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max);

    report(
        5,
        worst_rel <= 1e-6 && diff <= 1e-8,
        &format!("damped-cavity decay worst relative error {worst_rel:.2e}, vectorized-generator deviation {diff:.2e}"),
    );
}

/// Criterion 6 (surrogate tier): the lossy trajectory run at the shipped
/// operating point, scaled to the tier-A amplitude, lands in the expected
/// fidelity window and moves the right way when the coherence times move.
#[test]
fn criterion_6_tier_a_operating_point() {
    let base = load_preset_file(&preset_path()).unwrap();
    let space = Tier::A.space(2).unwrap();
    let run_at = |t_us: f64, kappa_inv_us: f64, trajectories: usize| -> f64 {
        let mut p = base.clone();
        Tier::A.apply(&mut p);
        p.set_t_scale(us(t_us));
        p.set_kappa_all(1.0 / us(kappa_inv_us));
        let opts = NumericOptions::lossy(trajectories, 1);
        transfer_point(&p, &space, &opts).unwrap().fidelity
    };
    let f = run_at(15.0, 100.0, 200);
    let f_slow_qutrit = run_at(30.0, 100.0, 120);
    let f_fast_cavity = run_at(15.0, 50.0, 120);
    let in_window = (0.88..=0.97).contains(&f);
    let trends = f_slow_qutrit >= f - 0.02 && f_fast_cavity <= f + 0.02;
    report(
        6,
        in_window && trends,
        &format!(
            "tier-A fidelity {f:.4} (window 0.88..0.97), T 15->30 us: {f_slow_qutrit:.4}, kappa^-1 100->50 us: {f_fast_cavity:.4}"
        ),
    );
}

/// Criterion 6, stretch tier: the full-amplitude operating point. Hours of
/// runtime; excluded from the default test pass.
#[test]
#[ignore = "stretch run: full-amplitude trajectory ensemble takes hours"]
fn criterion_6_tier_b_headline() {
    let mut p = load_preset_file(&preset_path()).unwrap();
    Tier::B.apply(&mut p);
    let space = Tier::B.space(2).unwrap();
    let opts = NumericOptions::lossy(500, 1);
    let f = transfer_point(&p, &space, &opts).unwrap().fidelity;
    report(
        6,
        f > 0.88,
        &format!("full-amplitude operating point fidelity {f:.4} (target > 0.90 +- 0.02)"),
    );
}

/// Criterion 7: sweep structure. The coupling sweep has an interior fidelity
/// maximum for each qutrit coherence time, and fidelity is nondecreasing in
/// the cavity lifetime with curves ordered by coherence time.
#[test]
fn criterion_7_sweep_structure() {
    let base = load_preset_file(&preset_path()).unwrap();
    let g2_values = [4.0, 7.33, 10.67, 14.0, 17.33, 20.67, 24.0];
    let kappa_values = [50.0, 100.0, 150.0];
    let t_scales = [10.0, 15.0, 30.0];

    let sweep = |axis: SweepAxis, values: &[f64], t_us: f64, trajectories: usize| {
        let mut p = base.clone();
        Tier::A.apply(&mut p);
        p.set_t_scale(us(t_us));
        let mut cfg = SweepConfig::new(Tier::A, 11);
        cfg.numeric = NumericOptions::lossy(trajectories, cfg.seed);
        run_sweep(&p, axis, values, &cfg).unwrap()
    };

    let mut interior_ok = true;
    let mut peaks = Vec::new();
    for &t_us in &t_scales {
        let res = sweep(SweepAxis::G2, &g2_values, t_us, 16);
        let peak = res.peak.expect("complete sweep must produce a peak");
        interior_ok &= peak.interior;
        peaks.push((t_us, peak.param, peak.fidelity));
    }

    let mut kappa_rows = Vec::new();
    for &t_us in &t_scales {
        let res = sweep(SweepAxis::Kappa, &kappa_values, t_us, 32);
        kappa_rows.push(res.rows.iter().map(|r| r.fidelity).collect::<Vec<_>>());
    }
    // nondecreasing in cavity lifetime (per curve, small statistical slack)
    let nondecreasing = kappa_rows
        .iter()
        .all(|row| row.windows(2).all(|w| w[1] >= w[0] - 0.01));
    // pointwise ordering by coherence time: longer T never loses
    let ordered = (0..kappa_values.len()).all(|k| {
        kappa_rows[1][k] >= kappa_rows[0][k] - 0.015 && kappa_rows[2][k] >= kappa_rows[1][k] - 0.015
    });

    report(
        7,
        interior_ok && nondecreasing && ordered,
        &format!(
            "coupling-sweep peaks (T us, peak MHz, F): {peaks:?}; lifetime-sweep curves {kappa_rows:?}"
        ),
    );
}

/// Criterion 8: randomized invariant spot-checks (norm, trace, Hermiticity,
/// positivity) over >= 200 small instances. The full generative suite lives
/// in the library's property tests; this is the self-contained gate.
#[test]
fn criterion_8_randomized_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut cases = 0usize;
    let mut failures = Vec::new();
    for case in 0..200 {
        let dim = rng.gen_range(2..=8usize);
        let space = HilbertSpace::single("mode", dim).unwrap();
        let rand_state = |rng: &mut ChaCha8Rng| -> Result<StateVector> {
            let amps: nd::Array1<C64> = (0..dim)
                .map(|_| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            StateVector::from_amplitudes(space.clone(), amps)?.normalized()
        };
        let psi = rand_state(&mut rng).unwrap();
        let phi = rand_state(&mut rng).unwrap();
        if (psi.norm() - 1.0).abs() > 1e-9 {
            failures.push(format!("case {case}: norm"));
        }
        let w = rng.gen_range(0.05..0.95);
        let rho = DensityMatrix::from_ensemble(&[(w, psi.clone()), (1.0 - w, phi.clone())]).unwrap();
        if (rho.trace().re - 1.0).abs() > 1e-9 {
            failures.push(format!("case {case}: trace"));
        }
        if rho.hermiticity_deviation() > 1e-10 {
            failures.push(format!("case {case}: hermiticity"));
        }
        if rho.eigenvalue_floor_estimate() < -1e-7 {
            failures.push(format!("case {case}: positivity"));
        }
        let f = cst_core::hilbert::fidelity(&psi, &rho).unwrap();
        if !(0.0..=1.0).contains(&f) {
            failures.push(format!("case {case}: fidelity range"));
        }
        let entries: Vec<C64> = (0..dim * dim)
            .map(|_| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let m = nd::Array2::from_shape_vec((dim, dim), entries).unwrap();
        let raw = Operator::from_csr(space.clone(), CsrMatrix::from_dense(&m.view(), 0.0)).unwrap();
        let herm = raw.add(&raw.dagger()).unwrap();
        if !herm.is_hermitian(1e-12) {
            failures.push(format!("case {case}: hermitization"));
        }
        cases += 1;
    }
    report(
        8,
        cases >= 200 && failures.is_empty(),
        &format!("{cases} randomized instances, failures: {failures:?}"),
    );
}

/// Criterion 9: a fixed seed makes consecutive sweep runs byte-identical.
#[test]
fn criterion_9_sweeps_are_deterministic() {
    let mut p = load_preset_file(&preset_path()).unwrap();
    Tier::A.apply(&mut p);
    let values = [8.0, 12.0, 16.0];
    let run_once = |dir: &std::path::Path| {
        let mut cfg = SweepConfig::new(Tier::A, 7);
        let mut opts = NumericOptions::lossy(8, cfg.seed);
        opts.dispersive_full = false;
        cfg.numeric = opts;
        cfg.out_dir = Some(dir.to_path_buf());
        run_sweep(&p, SweepAxis::G2, &values, &cfg).unwrap();
        std::fs::read(dir.join("sweep_g2.csv")).unwrap()
    };
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let bytes1 = run_once(d1.path());
    let bytes2 = run_once(d2.path());
    report(
        9,
        bytes1 == bytes2 && !bytes1.is_empty(),
        &format!(
            "two seeded sweep runs emitted {} identical bytes",
            bytes1.len()
        ),
    );
}
