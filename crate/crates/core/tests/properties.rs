use fiberqed::couplings::{assemble, chain_guided_rates};
use fiberqed::fiber::{solve_he11, FiberMode, FiberSpec, RateCalibration};
use fiberqed::geometry::{AtomChain, Dipole, DriveParams};
use fiberqed::lindblad::build_liouvillian;
use fiberqed::linalg::hermitian_eigenvalues;
use fiberqed::tomography::{legendre, right_jump_operator, DeformationTemplate};
use fiberqed::weak_drive::linspace;
use proptest::prelude::*;
use std::sync::OnceLock;

fn mode() -> &'static FiberMode {
    static MODE: OnceLock<FiberMode> = OnceLock::new();
    MODE.get_or_init(|| solve_he11(&FiberSpec::new(0.22, 1.45).unwrap()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dissipation_matrices_are_hermitian_psd(spacing in 0.1f64..2.0, atoms in 1usize..8) {
        let chain = AtomChain::regular(atoms, spacing, 0.1, Dipole::circular()).unwrap();
        let rates = chain_guided_rates(&chain, mode(), RateCalibration::default()).unwrap();
        let k = assemble(&chain, mode(), rates).unwrap();
        for g in [&k.g_r, &k.g_l, &k.g_u] {
            for i in 0..atoms {
                for j in 0..atoms {
                    prop_assert!((g[(i, j)] - g[(j, i)].conj()).norm() < 1e-12);
                }
            }
            let ev = hermitian_eigenvalues(g).unwrap();
            prop_assert!(ev.iter().all(|&e| e > -1e-10), "{ev:?}");
        }
    }

    #[test]
    fn legendre_of_shifted_parabola_is_exact(a in 0.05f64..1.0, mu in -1.0f64..1.0) {
        let s = linspace(-10.0, 10.0, 201);
        let theta: Vec<f64> = s.iter().map(|s| a * s * s + mu * s).collect();
        // keep x inside the slope range covered by the s grid
        let x = linspace(-mu - 10.0 * a, -mu + 10.0 * a, 41);
        let r = legendre(&s, &theta, &x).unwrap();
        for (xi, p) in x.iter().zip(&r.phi) {
            let exact = (xi + mu).powi(2) / (4.0 * a);
            prop_assert!((p - exact).abs() < 1e-6 * (1.0 + exact), "x = {xi}: {p} vs {exact}");
        }
    }

    #[test]
    fn tilted_generator_is_symmetric_under_angle_shift(alpha in 0.0f64..std::f64::consts::PI, s in -5.0f64..5.0, rabi in 0.0f64..2.0) {
        let chain = AtomChain::regular(2, 0.8, 0.1, Dipole::circular()).unwrap();
        let rates = chain_guided_rates(&chain, mode(), RateCalibration::default()).unwrap();
        let k = assemble(&chain, mode(), rates).unwrap();
        let l = build_liouvillian(&k, &chain, &DriveParams::new(rabi, 0.0, 1.37).unwrap()).unwrap();
        let j = right_jump_operator(&k, &chain, mode()).unwrap();
        let t = DeformationTemplate::new(&l, &j).unwrap();
        let a = t.values(alpha, s, 0.0);
        let b = t.values(alpha + std::f64::consts::PI, -s, 0.0);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }
}
