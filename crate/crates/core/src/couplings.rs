//! Coherent (V) and dissipative (Γ) coupling matrices of the chain, split into
//! right-guided, left-guided and unguided contributions.
//!
//! Index convention: the master equation reads
//! `H_int = Σ_ij V_ij σ_i† σ_j` and `D[ρ] = Σ_ij Γ_ij (σ_i ρ σ_j† − ½{σ_j† σ_i, ρ})`,
//! so excitation hops from `j` to `i` with amplitude `K_ij = V_ij − (i/2) Γ_ji`.

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fiber::{single_atom_guided_rates, FiberMode, GuidedRates, RateCalibration};
use crate::geometry::{AtomChain, Dipole, GAMMA, WAVENUMBER};
use crate::linalg::{hermitian_eigenvalues, hermiticity_deviation, max_abs};

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingKernels {
    pub v_r: Mat<C64>,
    pub v_l: Mat<C64>,
    pub v_u: Mat<C64>,
    pub g_r: Mat<C64>,
    pub g_l: Mat<C64>,
    pub g_u: Mat<C64>,
}

impl CouplingKernels {
    pub fn len(&self) -> usize {
        self.v_r.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Total coherent coupling `V = V_R + V_L + V_u`.
    pub fn v(&self) -> Mat<C64> {
        &(&self.v_r + &self.v_l) + &self.v_u
    }

    /// Total dissipative coupling `Γ = Γ_R + Γ_L + Γ_u`.
    pub fn g(&self) -> Mat<C64> {
        &(&self.g_r + &self.g_l) + &self.g_u
    }

    /// Single-atom total decay rate `Γ_ii` (homogeneous chain).
    pub fn total_rate(&self) -> f64 {
        self.g_r[(0, 0)].re + self.g_l[(0, 0)].re + self.g_u[(0, 0)].re
    }

    /// Non-Hermitian hopping matrix `K_ij = V_ij − (i/2) Γ_ji`.
    pub fn hopping(&self) -> Mat<C64> {
        let v = self.v();
        let g = self.g();
        let half_i = C64::new(0.0, 0.5);
        Mat::from_fn(self.len(), self.len(), |i, j| v[(i, j)] - half_i * g[(j, i)])
    }

    /// Copy with the unguided off-diagonal couplings removed (independent
    /// radiative decay, no free-space dipole-dipole exchange).
    pub fn without_unguided_exchange(&self) -> Self {
        let n = self.len();
        Self {
            v_u: Mat::zeros(n, n),
            g_u: Mat::from_fn(n, n, |i, j| if i == j { self.g_u[(i, i)] } else { C64::new(0.0, 0.0) }),
            ..self.clone()
        }
    }

    /// Checks Hermiticity of all six blocks and positivity of the Γ blocks.
    pub fn validate(&self) -> Result<()> {
        let blocks: [(&'static str, &Mat<C64>, bool); 6] = [
            ("V_R", &self.v_r, false),
            ("V_L", &self.v_l, false),
            ("V_u", &self.v_u, false),
            ("G_R", &self.g_r, true),
            ("G_L", &self.g_l, true),
            ("G_u", &self.g_u, true),
        ];
        for (name, m, psd) in blocks {
            let deviation = hermiticity_deviation(m);
            if deviation > HERMITIAN_TOL * max_abs(m).max(1.0) {
                return Err(Error::HermiticityViolation { matrix: name, deviation });
            }
            if psd {
                let lowest = hermitian_eigenvalues(m)?.into_iter().fold(f64::INFINITY, f64::min);
                if lowest < -PSD_TOL {
                    return Err(Error::PsdViolation {
                        matrix: name,
                        eigenvalue: lowest,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Guided rates of one chain atom at `r = radius + h`, azimuth 0.
pub fn chain_guided_rates(chain: &AtomChain, mode: &FiberMode, calibration: RateCalibration) -> Result<GuidedRates> {
    let r = mode.spec().radius + chain.surface_distance();
    single_atom_guided_rates(mode, &chain.dipole(), r, 0.0, calibration)
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Right and left guided kernels `(V_R, G_R, V_L, G_L)`.
///
/// The coherent parts are the retarded closed forms of the 1D continuum:
/// an excitation only propagates downstream in each direction.
pub fn build_guided_kernels(
    positions: &[f64],
    beta: f64,
    rates: GuidedRates,
) -> (Mat<C64>, Mat<C64>, Mat<C64>, Mat<C64>) {
    let n = positions.len();
    let z = positions;
    let minus_half_i = C64::new(0.0, -0.5);
    let g_r = Mat::from_fn(n, n, |i, j| C64::from_polar(rates.right, beta * (z[j] - z[i])));
    let g_l = Mat::from_fn(n, n, |i, j| C64::from_polar(rates.left, -beta * (z[j] - z[i])));
    let v_r = Mat::from_fn(n, n, |i, j| {
        minus_half_i * rates.right * sgn(z[i] - z[j]) * C64::from_polar(1.0, beta * (z[i] - z[j]))
    });
    let v_l = Mat::from_fn(n, n, |i, j| {
        minus_half_i * rates.left * sgn(z[j] - z[i]) * C64::from_polar(1.0, -beta * (z[i] - z[j]))
    });
    (v_r, g_r, v_l, g_l)
}

/// Free-space dipole-dipole kernel `K(ξ) = V − (i/2)Γ` between two atoms on
/// the axis, for a dipole with axial weight `c = |d̂·ẑ|²`.
pub fn free_space_kernel(xi: f64, axial_weight: f64) -> C64 {
    let c = axial_weight;
    let i = C64::new(0.0, 1.0);
    let bracket = (1.0 - c) / xi + (1.0 - 3.0 * c) * (i / (xi * xi) - 1.0 / (xi * xi * xi));
    -0.75 * GAMMA * C64::from_polar(1.0, xi) * bracket
}

/// Unguided kernels `(V_u, G_u)` from the free-space Green tensor.
pub fn build_unguided_kernel(positions: &[f64], dipole: &Dipole) -> Result<(Mat<C64>, Mat<C64>)> {
    let n = positions.len();
    for i in 0..n {
        for j in i + 1..n {
            if positions[i] == positions[j] {
                return Err(Error::CoincidentAtoms(i, j));
            }
        }
    }
    let c = dipole.axial_weight();
    let kernel = |i: usize, j: usize| free_space_kernel(WAVENUMBER * (positions[i] - positions[j]).abs(), c);
    let v_u = Mat::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(0.0, 0.0)
        } else {
            C64::new(kernel(i, j).re, 0.0)
        }
    });
    let g_u = Mat::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(GAMMA, 0.0)
        } else {
            C64::new(-2.0 * kernel(i, j).im, 0.0)
        }
    });
    Ok((v_u, g_u))
}

/// Builds and validates all coupling blocks for `chain`.
pub fn assemble(chain: &AtomChain, mode: &FiberMode, rates: GuidedRates) -> Result<CouplingKernels> {
    let z = chain.positions();
    let (v_r, g_r, v_l, g_l) = build_guided_kernels(&z, mode.beta, rates);
    let (v_u, g_u) = build_unguided_kernel(&z, &chain.dipole())?;
    let kernels = CouplingKernels {
        v_r,
        v_l,
        v_u,
        g_r,
        g_l,
        g_u,
    };
    kernels.validate()?;
    Ok(kernels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::{solve_he11, FiberSpec};
    use approx::assert_abs_diff_eq;

    fn setup(atoms: usize) -> (AtomChain, FiberMode, GuidedRates) {
        let mode = solve_he11(&FiberSpec::new(0.22, 1.45).unwrap()).unwrap();
        let chain = AtomChain::regular(atoms, 0.8, 0.1, Dipole::circular()).unwrap();
        let rates = chain_guided_rates(&chain, &mode, RateCalibration::default()).unwrap();
        (chain, mode, rates)
    }

    #[test]
    fn single_atom_has_only_diagonal_rates() {
        let (chain, mode, rates) = setup(1);
        let k = assemble(&chain, &mode, rates).unwrap();
        assert_eq!(k.v()[(0, 0)], C64::new(0.0, 0.0));
        assert_abs_diff_eq!(k.g()[(0, 0)].re, rates.total() + GAMMA, epsilon = 1e-15);
        assert_abs_diff_eq!(k.total_rate(), 1.0 / 0.85, epsilon = 1e-12);
    }

    #[test]
    fn free_space_kernel_small_distance_limit() {
        for c in [0.0, 0.5, 1.0] {
            let g = -2.0 * free_space_kernel(1e-4, c).im;
            assert_abs_diff_eq!(g, GAMMA, epsilon = 1e-7);
        }
        // far field falls off as 1/ξ
        let far = -2.0 * free_space_kernel(1e4, 0.5).im;
        assert!(far.abs() < 1e-3);
    }

    #[test]
    fn circular_dipole_kernel_reduces_to_closed_form() {
        let i = C64::new(0.0, 1.0);
        for xi in [0.3, 1.0, 5.0, 17.0] {
            let direct = -3.0 / (8.0 * xi) * C64::from_polar(1.0, xi) * (1.0 - i / xi + 1.0 / (xi * xi));
            assert_abs_diff_eq!((free_space_kernel(xi, 0.5) - direct).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn bidirectional_reduction_is_real() {
        let z = [0.0, 0.37, 1.9, 2.2];
        let beta = 6.6;
        let rates = GuidedRates { right: 0.3, left: 0.3 };
        let (v_r, g_r, v_l, g_l) = build_guided_kernels(&z, beta, rates);
        for i in 0..4 {
            for j in 0..4 {
                let zij = z[i] - z[j];
                let g = g_r[(i, j)] + g_l[(i, j)];
                let v = v_r[(i, j)] + v_l[(i, j)];
                assert_abs_diff_eq!(g.re, 0.6 * (beta * zij).cos(), epsilon = 1e-12);
                assert_abs_diff_eq!(g.im, 0.0, epsilon = 1e-12);
                let expected = if i == j { 0.0 } else { 0.3 * (beta * zij.abs()).sin() };
                assert_abs_diff_eq!(v.re, expected, epsilon = 1e-12);
                assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cascaded_hopping_is_causal() {
        let (chain, mode, rates) = setup(5);
        let rates = GuidedRates { left: 0.0, ..rates };
        let k = assemble(&chain, &mode, rates).unwrap().without_unguided_exchange();
        let hop = k.hopping();
        for a in 0..5 {
            for b in a + 1..5 {
                // b lies downstream of a: no amplitude from b back to a
                assert!(hop[(a, b)].norm() < 1e-14, "K[{a},{b}] = {}", hop[(a, b)]);
                assert!(hop[(b, a)].norm() > 0.1);
            }
        }
    }

    #[test]
    fn guided_period_gives_full_connectivity() {
        let beta = 6.6;
        let lf = 2.0 * std::f64::consts::PI / beta;
        let rates = GuidedRates { right: 0.2, left: 0.05 };
        let (_, g_r, _, _) = build_guided_kernels(&[0.0, lf], beta, rates);
        assert_abs_diff_eq!((g_r[(0, 1)] - C64::new(0.2, 0.0)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn default_chain_is_homogeneous_and_valid() {
        let (chain, mode, rates) = setup(15);
        let k = assemble(&chain, &mode, rates).unwrap();
        let g = k.g();
        for i in 0..15 {
            assert_abs_diff_eq!(g[(i, i)].re, g[(0, 0)].re, epsilon = 1e-14);
            assert_abs_diff_eq!(k.g_u[(i, i)].re, GAMMA, epsilon = 1e-15);
            assert_abs_diff_eq!(k.g_r[(i, i)].re, rates.right, epsilon = 1e-15);
        }
        let lowest = hermitian_eigenvalues(&g).unwrap()[0];
        assert!(lowest > -1e-10);
    }

    #[test]
    fn coincident_atoms_are_rejected() {
        let err = build_unguided_kernel(&[0.0, 1.0, 1.0], &Dipole::circular());
        assert!(matches!(err, Err(Error::CoincidentAtoms(1, 2))));
    }

    #[test]
    fn corrupted_kernel_fails_validation() {
        let (chain, mode, rates) = setup(3);
        let mut k = assemble(&chain, &mode, rates).unwrap();
        k.v_u[(0, 1)] += C64::new(0.0, 1e-6);
        assert!(matches!(k.validate(), Err(Error::HermiticityViolation { matrix: "V_u", .. })));
        let mut k = assemble(&chain, &mode, rates).unwrap();
        k.g_r[(0, 0)] = C64::new(-1.0, 0.0);
        assert!(matches!(k.validate(), Err(Error::PsdViolation { matrix: "G_R", .. })));
    }
}
