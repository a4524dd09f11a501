//! Collective decay rates, interaction eigenvalues and the laser-imprinted
//! spin wave.

use faer::Mat;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::couplings::{assemble, CouplingKernels};
use crate::error::{Error, Result};
use crate::fiber::{FiberMode, GuidedRates};
use crate::geometry::{drive_phases, AtomChain, DriveParams, WAVENUMBER};
use crate::linalg::{hermitian_eigen, quadratic_form};

/// Relative gap below which two eigenvalues count as degenerate.
const TIE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveSpectrum {
    /// Collective decay rates, descending.
    pub gamma: Vec<f64>,
    /// Rows are the decay eigenmodes `D_nj`.
    pub decay_modes: Mat<C64>,
    /// Interaction eigenvalues, ascending.
    pub v: Vec<f64>,
    /// Rows are the interaction eigenmodes `C_nj`.
    pub interaction_modes: Mat<C64>,
}

impl CollectiveSpectrum {
    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn max_rate(&self) -> f64 {
        self.gamma[0]
    }

    /// `|Σ_j C_nj ψ_j|²` for every interaction eigenmode.
    pub fn interaction_weights(&self, psi: &[C64]) -> Vec<f64> {
        project(&self.interaction_modes, psi).into_iter().map(|c| c.norm_sqr()).collect()
    }
}

fn project(rows: &Mat<C64>, psi: &[C64]) -> Vec<C64> {
    (0..rows.nrows())
        .map(|n| (0..rows.ncols()).map(|j| rows[(n, j)] * psi[j]).sum())
        .collect()
}

/// Eigendecomposition with eigenvector rows ordered by `descending` or
/// ascending eigenvalue, ties resolved by overlap with `reference`.
fn ordered_modes(m: &Mat<C64>, descending: bool, reference: Option<&[C64]>) -> Result<(Vec<f64>, Mat<C64>)> {
    let n = m.nrows();
    let (values, vectors) = hermitian_eigen(m)?;
    let scale = values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let overlap = |col: usize| -> f64 {
        reference.map_or(0.0, |psi| {
            (0..n).map(|j| vectors[(j, col)].conj() * psi[j]).sum::<C64>().norm_sqr()
        })
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (va, vb) = (values[a], values[b]);
        if (va - vb).abs() <= TIE_TOL * scale {
            overlap(b).total_cmp(&overlap(a)).then(a.cmp(&b))
        } else if descending {
            vb.total_cmp(&va)
        } else {
            va.total_cmp(&vb)
        }
    });
    let mut rows = Mat::<C64>::zeros(n, n);
    for (row, &col) in order.iter().enumerate() {
        // phase convention: largest-magnitude component real and positive
        let peak = (0..n).map(|j| vectors[(j, col)].norm()).fold(0.0f64, f64::max);
        let pivot = (0..n)
            .find(|&j| vectors[(j, col)].norm() >= peak * (1.0 - 1e-12))
            .unwrap_or(0);
        let phase = vectors[(pivot, col)] / vectors[(pivot, col)].norm();
        for j in 0..n {
            rows[(row, j)] = (vectors[(j, col)] / phase).conj();
        }
    }
    Ok((order.iter().map(|&c| values[c]).collect(), rows))
}

/// Diagonalizes Γ and V of `kernels`.
pub fn decay_spectrum(kernels: &CouplingKernels) -> Result<CollectiveSpectrum> {
    collective_spectrum(kernels, None)
}

/// As [`decay_spectrum`], breaking eigenvalue ties by overlap with `psi`.
pub fn collective_spectrum(kernels: &CouplingKernels, psi: Option<&[C64]>) -> Result<CollectiveSpectrum> {
    let (gamma, decay_modes) = ordered_modes(&kernels.g(), true, psi)?;
    let (v, interaction_modes) = ordered_modes(&kernels.v(), false, psi)?;
    Ok(CollectiveSpectrum {
        gamma,
        decay_modes,
        v,
        interaction_modes,
    })
}

/// Normalized spin wave `ψ_j = exp(i k z_j cos φ)/√N`.
pub fn spin_wave(chain: &AtomChain, drive: &DriveParams) -> Vec<C64> {
    let norm = (chain.len() as f64).sqrt();
    drive_phases(chain, drive).into_iter().map(|u| u / norm).collect()
}

/// `Γ_ψ = Σ_n γ_n |Σ_j D_nj ψ_j|²`.
pub fn effective_decay_rate(spectrum: &CollectiveSpectrum, psi: &[C64]) -> Result<f64> {
    if psi.len() != spectrum.len() {
        return Err(Error::DimensionMismatch {
            expected: spectrum.len(),
            got: psi.len(),
        });
    }
    Ok(project(&spectrum.decay_modes, psi)
        .iter()
        .zip(&spectrum.gamma)
        .map(|(c, g)| g * c.norm_sqr())
        .sum())
}

/// `ψ† Γ ψ` evaluated directly from the kernels.
pub fn spin_wave_rate(kernels: &CouplingKernels, psi: &[C64]) -> f64 {
    quadratic_form(&kernels.g(), psi, psi).re
}

/// Lattice constants `a/λ = m / (cos φ + λ/λ_f)` for `m = 1..=m_max` inside
/// `(range.0, range.1]`.
pub fn matching_lattice_constants(mode: &FiberMode, laser_angle: f64, m_max: u32, range: (f64, f64)) -> Vec<f64> {
    let denom = laser_angle.cos() + mode.beta / WAVENUMBER;
    if denom <= 0.0 {
        return Vec::new();
    }
    (1..=m_max)
        .map(|m| m as f64 / denom)
        .filter(|&a| a > range.0 && a <= range.1)
        .collect()
}

pub const DEFAULT_MATCHING_ORDERS: u32 = 3;
pub const DEFAULT_MATCHING_RANGE: (f64, f64) = (0.1, 2.0);

/// One lattice constant of a spacing sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacingPoint {
    pub spacing: f64,
    pub gamma: Vec<f64>,
    pub spin_wave_rate: f64,
}

/// Collective spectrum and spin-wave rate of a gapless chain over `spacings`.
pub fn spacing_sweep(
    mode: &FiberMode,
    rates: GuidedRates,
    template: &AtomChain,
    drive: &DriveParams,
    spacings: &[f64],
) -> Result<Vec<SpacingPoint>> {
    spacings
        .par_iter()
        .map(|&a| {
            let chain = AtomChain::new(a, template.sites().to_vec(), template.surface_distance(), template.dipole())?;
            let kernels = assemble(&chain, mode, rates)?;
            let psi = spin_wave(&chain, drive);
            let spectrum = collective_spectrum(&kernels, Some(&psi))?;
            let rate = effective_decay_rate(&spectrum, &psi)?;
            Ok(SpacingPoint {
                spacing: a,
                gamma: spectrum.gamma,
                spin_wave_rate: rate,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::chain_guided_rates;
    use crate::fiber::{solve_he11, FiberSpec, RateCalibration};
    use crate::geometry::Dipole;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn default_setup(atoms: usize, spacing: f64) -> (FiberMode, AtomChain, CouplingKernels) {
        let mode = solve_he11(&FiberSpec::new(0.22, 1.45).unwrap()).unwrap();
        let chain = AtomChain::regular(atoms, spacing, 0.1, Dipole::circular()).unwrap();
        let rates = chain_guided_rates(&chain, &mode, RateCalibration::default()).unwrap();
        let kernels = assemble(&chain, &mode, rates).unwrap();
        (mode, chain, kernels)
    }

    #[test]
    fn single_atom_spectrum() {
        let (_, chain, kernels) = default_setup(1, 0.8);
        let s = decay_spectrum(&kernels).unwrap();
        assert_abs_diff_eq!(s.gamma[0], kernels.total_rate(), epsilon = 1e-14);
        assert_abs_diff_eq!(s.v[0], 0.0, epsilon = 1e-14);
        let drive = DriveParams::new(1.0, 0.0, 1.37).unwrap();
        let psi = spin_wave(&chain, &drive);
        assert_abs_diff_eq!(effective_decay_rate(&s, &psi).unwrap(), kernels.total_rate(), epsilon = 1e-14);
    }

    #[test]
    fn spectrum_diagonalizes_and_sums_to_trace() {
        let (_, _, kernels) = default_setup(15, 0.8);
        let s = decay_spectrum(&kernels).unwrap();
        let g = kernels.g();
        let n = 15;
        let total: f64 = s.gamma.iter().sum();
        assert_abs_diff_eq!(total, n as f64 * kernels.total_rate(), epsilon = 1e-10);
        for w in s.gamma.windows(2) {
            assert!(w[0] >= w[1]);
        }
        for w in s.v.windows(2) {
            assert!(w[0] <= w[1]);
        }
        // D G D† = diag(γ)
        for a in 0..n {
            for b in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        acc += s.decay_modes[(a, i)] * g[(i, j)] * s.decay_modes[(b, j)].conj();
                    }
                }
                let expected = if a == b { s.gamma[a] } else { 0.0 };
                assert_abs_diff_eq!(acc.re, expected, epsilon = 1e-10);
                assert_abs_diff_eq!(acc.im, 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn eigenvector_phase_convention() {
        let (_, _, kernels) = default_setup(6, 0.8);
        let s = decay_spectrum(&kernels).unwrap();
        for n in 0..6 {
            let row: Vec<C64> = (0..6).map(|j| s.decay_modes[(n, j)]).collect();
            let peak = row.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let pivot = row.iter().find(|c| c.norm() >= peak * (1.0 - 1e-12)).unwrap();
            assert!(pivot.re > 0.0);
            assert_abs_diff_eq!(pivot.im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn matching_condition() {
        let (mode, _, _) = default_setup(1, 0.8);
        let a = matching_lattice_constants(&mode, 1.37, 3, (0.1, 10.0));
        assert_eq!(a.len(), 3);
        assert!((a[0] - 0.8).abs() < 0.01, "{a:?}");
        assert_abs_diff_eq!(a[1], 2.0 * a[0], epsilon = 1e-14);
        let normal = matching_lattice_constants(&mode, PI / 2.0, 1, (0.1, 10.0));
        assert_abs_diff_eq!(normal[0], mode.guided_wavelength(), epsilon = 1e-12);
        let default = matching_lattice_constants(&mode, 1.37, DEFAULT_MATCHING_ORDERS, DEFAULT_MATCHING_RANGE);
        assert!(default.iter().all(|&a| a > 0.1 && a <= 2.0));
    }

    #[test]
    fn spin_wave_overlaps_extremal_interaction_modes() {
        let (_, chain, kernels) = default_setup(15, 0.8);
        let drive = DriveParams::new(1.0, 0.0, 1.37).unwrap();
        let psi = spin_wave(&chain, &drive);
        let s = collective_spectrum(&kernels, Some(&psi)).unwrap();
        // the drive term Ω u_j* σ_j† excites amplitudes along conj(ψ)
        let excited: Vec<C64> = psi.iter().map(|c| c.conj()).collect();
        let w = s.interaction_weights(&excited);
        assert!(w[0] + w[14] > 0.8, "{w:?}");
        let rate = effective_decay_rate(&s, &psi).unwrap();
        assert!((rate - s.max_rate()).abs() / s.max_rate() < 0.02, "{rate} vs {}", s.max_rate());
    }
}
