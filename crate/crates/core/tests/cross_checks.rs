use approx::assert_abs_diff_eq;
use fiberqed::couplings::{assemble, chain_guided_rates, CouplingKernels};
use fiberqed::fiber::{solve_he11, FiberMode, FiberSpec, GuidedRates, RateCalibration};
use fiberqed::geometry::{AtomChain, Dipole, DriveParams};
use fiberqed::lindblad::{build_liouvillian, steady_state, trace_distance};
use fiberqed::linalg::hermitian_eigenvalues;
use fiberqed::spectral::decay_spectrum;
use fiberqed::weak_drive::{channel_rates, steady_amplitudes};
use faer::Mat;
use num_complex::Complex64 as C64;

fn mode() -> FiberMode {
    solve_he11(&FiberSpec::new(0.22, 1.45).unwrap()).unwrap()
}

fn chain_kernels(sites: Vec<i64>, dipole: Dipole) -> (AtomChain, CouplingKernels, GuidedRates) {
    let mode = mode();
    let chain = AtomChain::new(0.8, sites, 0.1, dipole).unwrap();
    let rates = chain_guided_rates(&chain, &mode, RateCalibration::default()).unwrap();
    let kernels = assemble(&chain, &mode, rates).unwrap();
    (chain, kernels, rates)
}

#[test]
fn weak_drive_matches_master_equation() {
    let (chain, kernels, _) = chain_kernels(vec![0, 1, 2], Dipole::circular());
    for detuning in [-3.0, -1.0, 0.0, 0.5, 2.0] {
        let drive = DriveParams::new(1e-3, detuning, 1.37).unwrap();
        let c = steady_amplitudes(&kernels, &chain, &drive).unwrap();
        let linear = channel_rates(&kernels, &c);
        let ss = steady_state(&build_liouvillian(&kernels, &chain, &drive).unwrap()).unwrap();
        let full = ss.emission(&kernels);
        let rel = (linear.right - full.right).abs() / full.right;
        assert!(rel < 1e-3, "Δ = {detuning}: {} vs {}", linear.right, full.right);
        assert!((linear.left - full.left).abs() / full.left < 1e-3);
    }
}

#[test]
fn upstream_atom_ignores_cascade() {
    let mode = mode();
    let chain = AtomChain::regular(3, 0.8, 0.1, Dipole::circular()).unwrap();
    let rates = chain_guided_rates(&chain, &mode, RateCalibration::default()).unwrap();
    let rates = GuidedRates { left: 0.0, ..rates };
    let kernels = assemble(&chain, &mode, rates).unwrap().without_unguided_exchange();
    let drive = DriveParams::new(0.8, 0.3, 1.37).unwrap();
    let ss = steady_state(&build_liouvillian(&kernels, &chain, &drive).unwrap()).unwrap();

    let single = AtomChain::regular(1, 0.8, 0.1, Dipole::circular()).unwrap();
    let k1 = assemble(&single, &mode, rates).unwrap();
    let ss1 = steady_state(&build_liouvillian(&k1, &single, &drive).unwrap()).unwrap();

    let r = ss.reduced(0);
    let upstream = Mat::from_fn(2, 2, |a, b| r[a][b]);
    let r1 = ss1.reduced(0);
    let isolated = Mat::from_fn(2, 2, |a, b| r1[a][b]);
    assert!(trace_distance(&upstream, &isolated).unwrap() < 1e-8);
    // the last atom does feel the cascade
    let r_last = ss.reduced(2);
    let last = Mat::from_fn(2, 2, |a, b| r_last[a][b]);
    assert!(trace_distance(&last, &isolated).unwrap() > 1e-3);
}

#[test]
fn translation_leaves_spectra_and_observables_unchanged() {
    let (chain, kernels, _) = chain_kernels(vec![0, 1, 3], Dipole::circular());
    let (shifted, moved, _) = chain_kernels(vec![5, 6, 8], Dipole::circular());
    for (a, b) in [(kernels.v(), moved.v()), (kernels.g(), moved.g())] {
        let ea = hermitian_eigenvalues(&a).unwrap();
        let eb = hermitian_eigenvalues(&b).unwrap();
        for (x, y) in ea.iter().zip(&eb) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }
    let drive = DriveParams::new(1.0, 0.0, 1.37).unwrap();
    let e0 = steady_state(&build_liouvillian(&kernels, &chain, &drive).unwrap())
        .unwrap()
        .emission(&kernels);
    let e1 = steady_state(&build_liouvillian(&moved, &shifted, &drive).unwrap())
        .unwrap()
        .emission(&moved);
    assert_abs_diff_eq!(e0.right, e1.right, epsilon = 1e-10);
    assert_abs_diff_eq!(e0.beta(), e1.beta(), epsilon = 1e-10);
    assert_abs_diff_eq!(e0.chirality(), e1.chirality(), epsilon = 1e-10);
}

#[test]
fn conjugate_dipole_swaps_directions() {
    let (_, k, rates) = chain_kernels(vec![0, 1, 2, 4], Dipole::circular());
    let (_, kc, rates_c) = chain_kernels(vec![0, 1, 2, 4], Dipole::circular().conj());
    assert_abs_diff_eq!(rates.right, rates_c.left, epsilon = 1e-14);
    assert_abs_diff_eq!(rates.left, rates_c.right, epsilon = 1e-14);
    // mirror image: R block of one equals the conjugated L block of the other
    for i in 0..4 {
        for j in 0..4 {
            assert!((kc.g_r[(i, j)] - k.g_l[(i, j)].conj()).norm() < 1e-14);
            assert!((kc.v_r[(i, j)] - k.v_l[(i, j)].conj()).norm() < 1e-14);
            assert!((kc.g_l[(i, j)] - k.g_r[(i, j)].conj()).norm() < 1e-14);
        }
    }
    let s = decay_spectrum(&k).unwrap();
    let sc = decay_spectrum(&kc).unwrap();
    for (a, b) in s.gamma.iter().zip(&sc.gamma) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }
}

#[test]
fn steady_states_are_physical() {
    for sites in [vec![0, 1, 2, 3], vec![0, 2, 3, 4]] {
        let (chain, kernels, _) = chain_kernels(sites, Dipole::circular());
        for rabi in [0.05, 1.5] {
            let drive = DriveParams::new(rabi, 0.0, 1.37).unwrap();
            let ss = steady_state(&build_liouvillian(&kernels, &chain, &drive).unwrap()).unwrap();
            assert_abs_diff_eq!(ss.trace().re, 1.0, epsilon = 1e-10);
            assert!(ss.min_eigenvalue().unwrap() > -1e-8);
            let e = ss.emission(&kernels);
            assert!(e.right > -1e-10 && e.left > -1e-10 && e.unguided > -1e-10);
            assert!((0.0..=1.0).contains(&e.beta()));
            assert!((-1.0..=1.0).contains(&e.chirality()));
        }
    }
}

#[test]
fn global_drive_phase_is_irrelevant_in_weak_drive() {
    let (chain, kernels, _) = chain_kernels(vec![0, 1, 2, 3, 4], Dipole::circular());
    let drive = DriveParams::new(1.0, 0.4, 1.37).unwrap();
    let c = steady_amplitudes(&kernels, &chain, &drive).unwrap();
    let phase = C64::from_polar(1.0, 0.77);
    let rotated: Vec<C64> = c.iter().map(|x| x * phase).collect();
    let a = channel_rates(&kernels, &c);
    let b = channel_rates(&kernels, &rotated);
    assert_abs_diff_eq!(a.right, b.right, epsilon = 1e-12);
}
