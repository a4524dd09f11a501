use approx::assert_abs_diff_eq;
use fiberqed::couplings::{assemble, chain_guided_rates};
use fiberqed::fiber::{solve_he11, FiberSpec, RateCalibration};
use fiberqed::geometry::{AtomChain, Dipole, DriveParams};
use fiberqed::lindblad::{build_liouvillian, steady_state, Liouvillian};
use fiberqed::sparse::to_dense;
use fiberqed::tomography::*;
use fiberqed::weak_drive::linspace;
use fiberqed::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn system(atoms: usize, rabi: f64) -> (Liouvillian, JumpOperator) {
    let mode = solve_he11(&FiberSpec::new(0.22, 1.45).unwrap()).unwrap();
    let chain = AtomChain::regular(atoms, 0.8, 0.1, Dipole::circular()).unwrap();
    let rates = chain_guided_rates(&chain, &mode, RateCalibration::default()).unwrap();
    let kernels = assemble(&chain, &mode, rates).unwrap();
    let drive = DriveParams::new(rabi, 0.0, 1.37).unwrap();
    let l = build_liouvillian(&kernels, &chain, &drive).unwrap();
    let j = right_jump_operator(&kernels, &chain, &mode).unwrap();
    (l, j)
}

/// Largest-real-part eigenvalue of the dense deformed generator.
fn dense_theta(template: &DeformationTemplate, alpha: f64, s: f64) -> f64 {
    let m = to_dense(template.generator(alpha, s).unwrap().matrix.as_ref());
    m.eigenvalues()
        .unwrap()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn zero_bias_returns_the_generator_itself() {
    let (l, j) = system(2, 0.7);
    let g = deform(&l, &j, 0.4, 0.0).unwrap();
    assert_eq!(to_dense(g.matrix.as_ref()), l.dense());
    let template = DeformationTemplate::new(&l, &j).unwrap();
    let a = to_dense(template.generator(0.4, 0.0).unwrap().matrix.as_ref());
    assert_eq!(a, l.dense());
}

#[test]
fn angle_shift_by_pi_flips_the_bias() {
    let (l, j) = system(2, 0.7);
    let t = DeformationTemplate::new(&l, &j).unwrap();
    let a = to_dense(t.generator(0.3, 1.7).unwrap().matrix.as_ref());
    let b = to_dense(t.generator(0.3 + std::f64::consts::PI, -1.7).unwrap().matrix.as_ref());
    let diff = (&a - &b).norm_max();
    assert!(diff < 1e-14, "{diff}");
}

#[test]
fn vacuum_scgf_is_pure_shot_noise() {
    let (l, j) = system(3, 0.0);
    let t = DeformationTemplate::new(&l, &j).unwrap();
    let grid = linspace(-12.0, 12.0, 121);
    for alpha in [0.0, 0.9, 2.5] {
        let c = scgf(&t, alpha, &grid, &EigenOptions::default()).unwrap();
        assert!(c.all_converged());
        for (s, th) in c.s.iter().zip(&c.theta) {
            assert_abs_diff_eq!(*th, s * s / 8.0, epsilon = 1e-10);
        }
    }
}

#[test]
fn iterative_scgf_matches_dense_spectrum() {
    let (l, j) = system(2, 1.5);
    let t = DeformationTemplate::new(&l, &j).unwrap();
    let grid = linspace(-6.0, 6.0, 61);
    for alpha in [0.0, 1.1] {
        let c = scgf(&t, alpha, &grid, &EigenOptions::default()).unwrap();
        assert!(c.all_converged());
        assert!(c.at_zero().unwrap().abs() < 1e-10);
        assert!(c.worst_convexity().0 > -1e-8);
        for k in (0..61).step_by(6) {
            let d = dense_theta(&t, alpha, grid[k]);
            assert_abs_diff_eq!(c.theta[k], d, epsilon = 1e-9);
        }
    }
}

#[test]
fn warm_and_cold_starts_agree() {
    let (l, j) = system(3, 1.5);
    let t = DeformationTemplate::new(&l, &j).unwrap();
    let grid = linspace(-12.0, 12.0, 121);
    let opts = EigenOptions::default();
    let c = scgf(&t, 0.6, &grid, &opts).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let k = rng.gen_range(0..grid.len());
        let start = scgf::start_vector(t.dim(), Some(rng.gen()));
        let cold = cold_start(&t, 0.6, grid[k], &start, &opts).unwrap();
        assert!(cold.converged, "s = {}: value {} residual {:e} vs warm {}", grid[k], cold.value, cold.residual, c.theta[k]);
        assert_abs_diff_eq!(cold.value, c.theta[k], epsilon = 1e-8);
    }
}

#[test]
fn curvature_at_origin_matches_dense_oracle() {
    // single atom, strong drive: θ″(0) is the photocurrent variance rate
    let (l, j) = system(1, 1.5);
    let t = DeformationTemplate::new(&l, &j).unwrap();
    let h = 0.05;
    let grid = linspace(-2.0 * h * 10.0, 2.0 * h * 10.0, 41);
    let c = scgf(&t, 0.0, &grid, &EigenOptions::default()).unwrap();
    let k0 = 20;
    let fd = (c.theta[k0 + 1] - 2.0 * c.theta[k0] + c.theta[k0 - 1]) / ((grid[1] - grid[0]).powi(2));
    let dh = grid[1] - grid[0];
    let dense = (dense_theta(&t, 0.0, dh) - 2.0 * dense_theta(&t, 0.0, 0.0) + dense_theta(&t, 0.0, -dh)) / (dh * dh);
    assert_abs_diff_eq!(fd, dense, epsilon = 1e-5);
    // strictly convex, above the shot-noise curvature 1/4 is not required but positive is
    assert!(fd > 0.0);
    // the slope at the origin is minus the homodyne mean
    let ss = steady_state(&l).unwrap();
    let mean = j.expectation(&ss.rho).re;
    let slope = (c.theta[k0 + 1] - c.theta[k0 - 1]) / (2.0 * dh);
    assert_abs_diff_eq!(slope, -mean, epsilon = 1e-4);
}

#[test]
fn vacuum_reconstruction_is_positive_gaussian() {
    let (l, j) = system(2, 0.0);
    let grids = TomographyGrids::default();
    let tomo = reconstruct(&l, &j, &grids, &EigenOptions::default(), &FbpOptions::default()).unwrap();
    for m in &tomo.sinogram.marginals {
        assert_abs_diff_eq!(m.norm(), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(m.variance(), 0.25, epsilon = 1e-4);
        assert!(m.density.iter().all(|&p| p >= 0.0));
    }
    let w = &tomo.wigner;
    assert_abs_diff_eq!(w.integral(), 1.0, epsilon = 1e-3);
    assert!(w.negativity < 1e-3, "{}", w.negativity);
    let (x, p, _) = w.peak();
    assert!(x.abs() <= w.step() && p.abs() <= w.step());
}

#[test]
fn gaussian_round_trip_and_displacement() {
    let angles = uniform_angles(64);
    let x = linspace(-3.5, 3.5, 257);
    let mean = [0.6, -0.45];
    let cov = [[0.25, 0.05], [0.05, 0.18]];
    let sino = gaussian_sinogram(mean, cov, &angles, &x).unwrap();
    for m in &sino.marginals {
        assert_abs_diff_eq!(m.norm(), 1.0, epsilon = 1e-6);
    }
    assert!(sino.consistency.max_residual < 1e-6);
    assert_abs_diff_eq!(sino.consistency.mean_x, 0.6, epsilon = 1e-6);
    let w = invert_radon(&sino, &FbpOptions::default()).unwrap();
    let (px, pp, _) = w.peak();
    assert!((px - mean[0]).abs() <= w.step() && (pp - mean[1]).abs() <= w.step());
    let back = forward_project(&w, &angles);
    let err = relative_l2(&sino.marginals, &back);
    assert!(err < 0.02, "{err}");
    assert!(w.negativity < 1e-3);
}

#[test]
fn too_few_angles_are_rejected() {
    let x = linspace(-3.0, 3.0, 65);
    let sino = gaussian_sinogram([0.0, 0.0], [[0.25, 0.0], [0.0, 0.25]], &uniform_angles(8), &x).unwrap();
    assert!(matches!(
        invert_radon(&sino, &FbpOptions::default()),
        Err(Error::InsufficientAngles { needed: 16, got: 8 })
    ));
}

#[test]
fn wider_window_lowers_negativity() {
    // a Gaussian mixture with a dip: reconstruction noise and ringing give δW > 0
    let angles = uniform_angles(64);
    let x = linspace(-3.5, 3.5, 257);
    let a = gaussian_sinogram([0.8, 0.0], [[0.06, 0.0], [0.0, 0.06]], &angles, &x).unwrap();
    let b = gaussian_sinogram([-0.8, 0.0], [[0.06, 0.0], [0.0, 0.06]], &angles, &x).unwrap();
    let mut sino = a.clone();
    for (m, other) in sino.marginals.iter_mut().zip(&b.marginals) {
        for (p, q) in m.density.iter_mut().zip(&other.density) {
            // negative weight on a narrow central feature
            *p = 0.5 * (*p + q);
        }
    }
    let dip = gaussian_sinogram([0.0, 0.0], [[0.03, 0.0], [0.0, 0.03]], &angles, &x).unwrap();
    for (m, d) in sino.marginals.iter_mut().zip(&dip.marginals) {
        for (p, q) in m.density.iter_mut().zip(&d.density) {
            *p = (*p - 0.05 * q) / 0.95;
        }
    }
    let mut last = f64::INFINITY;
    for cutoff in [1.0, 0.8, 0.5, 0.3] {
        let w = invert_radon(&sino, &FbpOptions { hann_cutoff: Some(cutoff) }).unwrap();
        assert!(w.negativity > 0.0);
        assert!(w.negativity <= last, "cutoff {cutoff}: {} > {last}", w.negativity);
        last = w.negativity;
    }
}
