//! Randomized invariant suite: structural properties of the tensor algebra,
//! state constructors, density matrices, Hamiltonians, and the step schedule,
//! checked on small random instances.

use std::sync::Arc;

use cst_core::device::{mhz, DeviceParams, DerivedParams, TimeDependentHamiltonian};
use cst_core::dynamics::{propagate_schrodinger, PropagationConfig};
use cst_core::hilbert::{
    annihilation, coherent_state_bounded, displacement, embed, fidelity, number, partial_trace,
    pure_fidelity, DensityMatrix, HilbertSpace, Operator, StateVector,
};
use cst_core::linalg::expm;
use cst_core::sparse::CsrMatrix;
use ndarray as nd;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Strategy: a complex number with |z| roughly bounded by `r`.
fn complex(r: f64) -> impl Strategy<Value = C64> {
    (-r..r, -r..r).prop_map(|(re, im)| C64::new(re, im))
}

/// Strategy: a normalized random state on a fresh single-mode space.
fn random_state(dim: usize) -> impl Strategy<Value = Vec<C64>> {
    proptest::collection::vec(complex(1.0), dim).prop_filter("nonzero vector", |v| {
        v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-6
    })
}

fn state_from(space: &Arc<HilbertSpace>, amps: &[C64]) -> StateVector {
    let arr = nd::Array1::from_vec(amps.to_vec());
    StateVector::from_amplitudes(space.clone(), arr)
        .unwrap()
        .normalized()
        .unwrap()
}

fn dense_op(space: &Arc<HilbertSpace>, entries: &[C64]) -> Operator {
    let d = space.total_dim();
    let m = nd::Array2::from_shape_vec((d, d), entries.to_vec()).unwrap();
    Operator::from_csr(space.clone(), CsrMatrix::from_dense(&m.view(), 0.0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// a^dag a - a a^dag = -I everywhere except the top Fock level, where the
    /// truncation breaks the ladder.
    #[test]
    fn ladder_commutator_is_minus_identity_below_cutoff(dim in 2usize..16) {
        let a = annihilation(dim).unwrap();
        let comm = a.dagger().commutator(&a).unwrap();
        let m = comm.matrix();
        for r in 0..dim {
            for c in 0..dim {
                let got = m.get(r, c);
                let want = if r == c && r < dim - 1 {
                    c64(-1.0, 0.0)
                } else if r == c {
                    // top level picks up +(dim-1) from the cut ladder
                    c64(dim as f64 - 1.0, 0.0)
                } else {
                    c64(0.0, 0.0)
                };
                prop_assert!((got - want).norm() < 1e-12, "entry ({r},{c}) = {got}");
            }
        }
    }

    /// Truncation leakage of a coherent state decreases monotonically in the
    /// cutoff dimension.
    #[test]
    fn coherent_leakage_decreases_with_dim(
        a in 0.05f64..2.0,
        theta in 0.0f64..std::f64::consts::TAU,
        dim in 4usize..20,
    ) {
        let alpha = C64::from_polar(a, theta);
        let small = coherent_state_bounded(alpha, dim, 1.0).unwrap();
        let large = coherent_state_bounded(alpha, dim + 4, 1.0).unwrap();
        prop_assert!(large.truncation_leakage() <= small.truncation_leakage() + 1e-15);
    }

    /// The displaced vacuum has Poisson photon statistics well below the
    /// truncation cutoff.
    #[test]
    fn displaced_vacuum_has_poisson_statistics(
        a in 0.1f64..1.5,
        theta in 0.0f64..std::f64::consts::TAU,
    ) {
        let dim = 24usize;
        let alpha = C64::from_polar(a, theta);
        let space = HilbertSpace::single("mode", dim).unwrap();
        let vac = StateVector::basis(space.clone(), &[0]).unwrap();
        let disp = displacement(alpha, dim).unwrap();
        let psi = vac.apply(&disp).unwrap();
        let nbar = a * a;
        let n_check = (dim as f64 - 5.0 * a).floor() as usize;
        let mut log_pn = -nbar; // ln P(0)
        for n in 0..n_check {
            if n > 0 {
                log_pn += nbar.ln() - (n as f64).ln();
            }
            let expected = log_pn.exp();
            let got = psi.amplitudes()[n].norm_sqr();
            prop_assert!((got - expected).abs() < 1e-6, "P({n}): {got} vs {expected}");
        }
    }

    /// D(alpha) D(-alpha) acts as the identity on states supported well below
    /// the cutoff.
    #[test]
    fn displacement_roundtrip_is_identity(
        a in 0.1f64..1.2,
        theta in 0.0f64..std::f64::consts::TAU,
        amps in random_state(8),
    ) {
        let dim = 30usize;
        let alpha = C64::from_polar(a, theta);
        let space = HilbertSpace::single("mode", dim).unwrap();
        let mut padded = vec![c64(0.0, 0.0); dim];
        padded[..8].copy_from_slice(&amps);
        let psi = state_from(&space, &padded);
        let fwd = displacement(alpha, dim).unwrap();
        let back = displacement(-alpha, dim).unwrap();
        let round = psi.apply(&fwd).unwrap().apply(&back).unwrap();
        let f = pure_fidelity(&psi, &round).unwrap();
        prop_assert!(f >= 1.0 - 1e-8, "round-trip fidelity {f}");
    }

    /// fidelity against a pure density matrix equals the overlap magnitude and
    /// stays inside [0, 1].
    #[test]
    fn fidelity_matches_overlap_for_pure_states(
        amps_a in random_state(6),
        amps_b in random_state(6),
    ) {
        let space = HilbertSpace::single("mode", 6).unwrap();
        let psi = state_from(&space, &amps_a);
        let phi = state_from(&space, &amps_b);
        let rho = DensityMatrix::from_pure(&phi);
        let f = fidelity(&psi, &rho).unwrap();
        let ov = psi.overlap(&phi).unwrap().norm();
        prop_assert!((f - ov).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((pure_fidelity(&psi, &phi).unwrap() - ov).abs() < 1e-12);
    }

    /// normalize always lands on unit norm, and overlap with itself is 1.
    #[test]
    fn normalization_gives_unit_norm(amps in random_state(9)) {
        let space = HilbertSpace::single("mode", 9).unwrap();
        let psi = state_from(&space, &amps);
        prop_assert!((psi.norm() - 1.0).abs() < 1e-9);
        prop_assert!((psi.overlap(&psi).unwrap().re - 1.0).abs() < 1e-9);
    }

    /// Embedding into a product space preserves the spectrum (each eigenvalue
    /// repeated D/d times) and embeddings of disjoint subsystems commute.
    #[test]
    fn embed_preserves_spectrum_and_disjoint_embeds_commute(
        da in 2usize..5,
        db in 2usize..5,
        entries_b in proptest::collection::vec(complex(1.0), 16),
    ) {
        let space = HilbertSpace::new(&[("a", da), ("b", db)]).unwrap();
        let na = embed(&number(da).unwrap(), &space, "a").unwrap();
        // number op is diagonal, so the embedded spectrum is its diagonal
        let mut eig: Vec<f64> = (0..da * db).map(|i| na.matrix().get(i, i).re).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut want: Vec<f64> = (0..da).flat_map(|n| vec![n as f64; db]).collect();
        want.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (g, w) in eig.iter().zip(&want) {
            prop_assert!((g - w).abs() < 1e-12);
        }

        let bspace = HilbertSpace::single("b", db).unwrap();
        let local = dense_op(&bspace, &entries_b[..db * db]);
        let nb = embed(&local, &space, "b").unwrap();
        let comm = na.commutator(&nb).unwrap();
        prop_assert!(comm.max_abs() < 1e-12, "disjoint embeds must commute");
    }

    /// Ensembles of pure states produce valid density matrices, and the mixed
    /// fidelity is the square root of the weighted overlap sum.
    #[test]
    fn ensemble_density_is_valid_and_fidelity_decomposes(
        amps_a in random_state(5),
        amps_b in random_state(5),
        amps_c in random_state(5),
        w in 0.05f64..0.95,
    ) {
        let space = HilbertSpace::single("mode", 5).unwrap();
        let pa = state_from(&space, &amps_a);
        let pb = state_from(&space, &amps_b);
        let probe = state_from(&space, &amps_c);
        let rho = DensityMatrix::from_ensemble(&[(w, pa.clone()), (1.0 - w, pb.clone())]).unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-9);
        prop_assert!(rho.hermiticity_deviation() < 1e-12);
        prop_assert!(rho.eigenvalue_floor_estimate() > -1e-9);
        let f = fidelity(&probe, &rho).unwrap();
        let direct = (w * probe.overlap(&pa).unwrap().norm_sqr()
            + (1.0 - w) * probe.overlap(&pb).unwrap().norm_sqr())
        .sqrt();
        prop_assert!((f - direct).abs() < 1e-9);
    }

    /// Partial trace preserves trace and Hermiticity, and recovers the factors
    /// of a product state.
    #[test]
    fn partial_trace_preserves_trace_and_factors_products(
        amps_a in random_state(3),
        amps_b in random_state(4),
    ) {
        let sa = HilbertSpace::single("a", 3).unwrap();
        let sb = HilbertSpace::single("b", 4).unwrap();
        let pa = state_from(&sa, &amps_a);
        let pb = state_from(&sb, &amps_b);
        let joint = pa.tensor(&pb).unwrap();
        let rho = DensityMatrix::from_pure(&joint);
        let ra = partial_trace(&rho, &["a"]).unwrap();
        prop_assert!((ra.trace().re - 1.0).abs() < 1e-9);
        prop_assert!(ra.hermiticity_deviation() < 1e-10);
        // product state: the reduced state is the pure factor
        let f = fidelity(&pa, &ra).unwrap();
        prop_assert!((f - 1.0).abs() < 1e-9, "reduced fidelity {f}");
        prop_assert!((ra.purity() - 1.0).abs() < 1e-9);
    }

    /// A Hamiltonian assembled from oscillating raising terms is Hermitian at
    /// every instant.
    #[test]
    fn hamiltonian_is_hermitian_at_all_times(
        entries in proptest::collection::vec(complex(1.0), 36),
        freq in -500.0f64..500.0,
        t in 0.0f64..10.0,
    ) {
        let space = HilbertSpace::single("mode", 6).unwrap();
        let mut h = TimeDependentHamiltonian::new(space.clone());
        h.add_term(dense_op(&space, &entries).scale(c64(mhz(1.0), 0.0)), mhz(freq))
            .unwrap();
        let n6 = number(6).unwrap().scale(c64(mhz(3.0), 0.0));
        h.add_static(n6).unwrap();
        let snapshot = h.evaluate(t * 1e-6);
        prop_assert!(snapshot.is_hermitian(1e-10 * snapshot.max_abs().max(1.0)));
        prop_assert!(h.hermiticity_deviation_at(t * 1e-6) < 1e-9);
    }

    /// The six-step schedule keeps its closed-form durations under coupling
    /// and amplitude changes: positive durations, pi/lambda dispersive hold,
    /// pi/(2 g_r) swap, pi/(2 Omega) drive, and an integer phase-return count.
    #[test]
    fn schedule_durations_follow_closed_forms(
        gscale in 0.4f64..2.0,
        a in 0.5f64..2.0,
    ) {
        let mut p = DeviceParams::paper_point();
        p.set_g2_coscaled(gscale * p.g["c2"]);
        p.alpha = c64(a, 0.0);
        let derived = DerivedParams::from_params(&p).unwrap();
        let plan = cst_core::protocol::plan(&p).unwrap();
        prop_assert_eq!(plan.steps.len(), 6);
        let mut sum = 0.0;
        for s in &plan.steps {
            prop_assert!(s.duration >= 0.0);
            sum += s.duration;
        }
        prop_assert!((plan.total_time - (sum + plan.dead_time)).abs() < 1e-12 * plan.total_time);
        let swap = &plan.steps[1];
        prop_assert!((swap.duration - std::f64::consts::PI / (2.0 * p.g_r)).abs() < 1e-18);
        let disp = &plan.steps[2];
        let want = std::f64::consts::PI / derived.lambda_common();
        prop_assert!((disp.duration - want).abs() < 1e-12 * want);
        let drive = &plan.steps[4];
        let want_d = std::f64::consts::PI / (2.0 * p.drive_rabi);
        prop_assert!((drive.duration - want_d).abs() < 1e-12 * want_d);
        // 2 w t must close an integer number of periods
        let periods = derived.omega_tilde * drive.duration / std::f64::consts::PI;
        prop_assert!((periods - periods.round()).abs() < 1e-6 * periods.abs().max(1.0));
        prop_assert_eq!(plan.phase_return_m, periods.round() as u32);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    /// Numerical propagation under a random static Hermitian generator is
    /// unitary and matches the matrix exponential.
    #[test]
    fn propagation_is_unitary_and_matches_exponential(
        entries in proptest::collection::vec(complex(1.0), 16),
        amps in random_state(4),
        t_us in 0.02f64..0.4,
    ) {
        let space = HilbertSpace::single("mode", 4).unwrap();
        let raw = dense_op(&space, &entries);
        let herm = raw
            .add(&raw.dagger())
            .unwrap()
            .scale(c64(0.5 * mhz(1.0), 0.0));
        let mut h = TimeDependentHamiltonian::new(space.clone());
        h.add_static(herm.clone()).unwrap();
        let psi0 = state_from(&space, &amps);
        let t = t_us * 1e-6;
        let res = propagate_schrodinger(&h, &psi0, &PropagationConfig::new(t)).unwrap();
        prop_assert!((res.state.norm() - 1.0).abs() < 1e-7, "norm drift");

        let gen = herm.matrix().to_dense().mapv(|z| z * c64(0.0, -t));
        let u = expm(&gen);
        let want_amps = u.dot(&psi0.amplitudes().view().insert_axis(nd::Axis(1)));
        let want = StateVector::from_amplitudes(
            space.clone(),
            want_amps.index_axis(nd::Axis(1), 0).to_owned(),
        )
        .unwrap();
        let f = pure_fidelity(&want, &res.state).unwrap();
        prop_assert!(f >= 1.0 - 1e-6, "fidelity to closed form {f}");
    }
}
