use eie_core::dynamics::{integrate, propagate_exact, steady_state, IntegrateOptions, Sampling, TimeUnit};
use eie_core::entanglement::concurrence_guard;
use eie_core::experiments::{emit_figure_data, run_scenario, Figure, FigureOptions, InitialPreset, ScenarioConfig};
use eie_core::master_equation::{assemble_liouvillian, compute_rates, unvectorize, vectorize, DipolarCoupling};
use eie_core::observables::{build_block_system, BLOCK_INDICES};
use eie_core::spin::{kron2, Operator};
use eie_core::{ObservableVector, PhysicalParams};
use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn partial_traces(rho: &Operator) -> (Matrix2<Complex64>, Matrix2<Complex64>) {
    let first = Matrix2::from_fn(|a, b| rho[(2 * a, 2 * b)] + rho[(2 * a + 1, 2 * b + 1)]);
    let second = Matrix2::from_fn(|a, b| rho[(a, b)] + rho[(2 + a, 2 + b)]);
    (first, second)
}

#[test]
fn local_environment_without_dipolar_coupling_factorizes() {
    let p = PhysicalParams {
        j: 1.3,
        delta_omega: 0.4,
        m0: 0.6,
        alpha: 0.0,
        dipolar: DipolarCoupling::Physical { omega_d: 0.0, omega0: 5.0, tau_c: 0.2, theta: 0.7, phi: 0.3 },
    };
    let l = assemble_liouvillian(&p).unwrap();
    let q = Matrix2::new(0.7, 0.2, 0.2, 0.3).map(Complex64::from) + Matrix2::new(0.0, 0.1, -0.1, 0.0).map(|x| Complex64::new(0.0, x));
    let rho0 = kron2(&q, &q);
    for t in [0.1, 1.0, 5.0] {
        let rho = unvectorize(&(l.propagator(t) * vectorize(&rho0)));
        let (a, b) = partial_traces(&rho);
        assert!((a - b).iter().all(|z| z.norm() < 1e-12), "marginals differ at t = {t}");
        assert!((rho - kron2(&a, &b)).iter().all(|z| z.norm() < 1e-12), "correlations built at t = {t}");
    }
}

#[test]
fn endpoint_reaches_steady_state() {
    for (alpha, k) in [(0.0, 0.0), (0.5, 1.0), (0.9, 10.0), (0.99, 0.01)] {
        let p = PhysicalParams::scaled(1.0, 0.9, alpha, k, k);
        let r = compute_rates(&p).unwrap();
        let ss = steady_state(&p, &r, &ObservableVector::zero()).unwrap();
        assert!(ss.residual < 1e-10);
        let t_end = 1e5 / (1.0 - alpha + k + 1.0);
        let opts = IntegrateOptions::new(t_end).with_sampling(Sampling::Log { count: 20, start: 1e-2 });
        let traj = integrate(&build_block_system(&p, &r), ObservableVector::zero(), &opts).unwrap();
        assert!(traj.last().unwrap().1.max_abs_diff(&ss.values) < 1e-6, "alpha {alpha}, kappa {k}");
    }
}

#[test]
fn coherence_blocks_decay_for_local_component() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = PhysicalParams::scaled(1.0, 0.9, 0.7, 0.3, 0.3);
    let blocks = build_block_system(&p, &compute_rates(&p).unwrap());
    let mut a = [0.0; 15];
    for idx in BLOCK_INDICES[2..].iter().flat_map(|b| b.iter()) {
        a[*idx] = rng.random_range(-0.1..0.1);
    }
    let traj = propagate_exact(&blocks, ObservableVector::from_array(a), &[200.0], TimeUnit::Scaled).unwrap();
    let end = traj.states[0].to_array();
    assert!(BLOCK_INDICES[2..].iter().flat_map(|b| b.iter()).all(|&i| end[i].abs() < 1e-12));
}

#[test]
fn dipolar_order_concurrence_vanishes_at_steady_state() {
    let mut cfg = ScenarioConfig::new(
        "anchor",
        PhysicalParams::scaled(1.0, 0.9, 0.9999, 0.01, 0.01),
        InitialPreset::DipolarOrder,
    );
    cfg.t_end = 1e7;
    let out = run_scenario(&cfg).unwrap();
    assert!(out.concurrence.iter().all(|c| c.value >= 0.0));
    assert!(out.concurrence.iter().any(|c| c.value > 0.3));
    assert_eq!(out.concurrence.last().unwrap().value, 0.0);
    assert_eq!(concurrence_guard(&out.steady_state.values).unwrap().value, 0.0);
}

#[test]
fn fig1_manifest_lists_every_curve() {
    let dir = tempfile::tempdir().unwrap();
    let opts = FigureOptions { sample_count: 40, ..FigureOptions::default() };
    let m = emit_figure_data(Figure::Fig1, dir.path(), &opts).unwrap();
    assert_eq!(m.curves.len(), 6 * 2 * 3);
    for obs in ["Mz", "Mc", "Mzz"] {
        assert_eq!(m.curves.iter().filter(|c| c.observable == obs).count(), 12);
    }
    assert!(m.curves.iter().all(|c| c.kappa1 == c.kappa2 && c.m0 == 0.9));
    assert!(m.assumptions.iter().any(|a| a.contains("maximally mixed")));
    for f in &m.files {
        assert!(dir.path().join("fig1").join(f).exists(), "{f}");
    }
}
