//! Atom chain, drive and unit conventions.
//!
//! Lengths are measured in units of the transition wavelength λ and rates in
//! units of the free-space single-atom decay rate γ (ħ = 1). The wavenumber is
//! therefore fixed to `k = 2π`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64 as C64;

use crate::error::{invalid, Result};

/// Free-space wavenumber in units of 1/λ.
pub const WAVENUMBER: f64 = 2.0 * PI;

/// Free-space single-atom decay rate (the rate unit).
pub const GAMMA: f64 = 1.0;

/// Complex unit dipole vector in Cartesian components `(x, y, z)`, with the
/// fiber axis along `z` and the atoms in the `x-z` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dipole(pub [C64; 3]);

impl Dipole {
    /// Normalizes `components` to unit length.
    pub fn new(components: [C64; 3]) -> Result<Self> {
        let norm = components.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(invalid("dipole", "dipole vector must be nonzero"));
        }
        Ok(Self(components.map(|c| c / norm)))
    }

    /// The circular dipole `(1, 0, -i)/√2` used throughout the model.
    pub fn circular() -> Self {
        Self([
            C64::new(FRAC_1_SQRT_2, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, -FRAC_1_SQRT_2),
        ])
    }

    /// `|d̂ · ẑ|²`, the weight of the component along the chain axis.
    pub fn axial_weight(&self) -> f64 {
        self.0[2].norm_sqr()
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|c| c.conj()))
    }
}

impl Default for Dipole {
    fn default() -> Self {
        Self::circular()
    }
}

/// Lattice chain of atoms parallel to the fiber, possibly with voids.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomChain {
    spacing: f64,
    sites: Vec<i64>,
    surface_distance: f64,
    dipole: Dipole,
}

impl AtomChain {
    pub fn new(spacing: f64, sites: Vec<i64>, surface_distance: f64, dipole: Dipole) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(invalid("spacing", format!("must be positive, got {spacing}")));
        }
        if !(surface_distance.is_finite() && surface_distance >= 0.0) {
            return Err(invalid(
                "surface_distance",
                format!("must be non-negative, got {surface_distance}"),
            ));
        }
        if sites.is_empty() {
            return Err(invalid("occupied_sites", "chain needs at least one atom"));
        }
        if sites.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("occupied_sites", "sites must be strictly increasing"));
        }
        Ok(Self {
            spacing,
            sites,
            surface_distance,
            dipole,
        })
    }

    /// Gapless chain of `atoms` sites `0..atoms`.
    pub fn regular(atoms: usize, spacing: f64, surface_distance: f64, dipole: Dipole) -> Result<Self> {
        Self::new(spacing, (0..atoms as i64).collect(), surface_distance, dipole)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn sites(&self) -> &[i64] {
        &self.sites
    }

    pub fn surface_distance(&self) -> f64 {
        self.surface_distance
    }

    pub fn dipole(&self) -> Dipole {
        self.dipole
    }

    /// Axial positions `z_j = a · site_j`.
    pub fn positions(&self) -> Vec<f64> {
        self.sites.iter().map(|&s| s as f64 * self.spacing).collect()
    }

    /// Same chain translated by `shift` lattice sites.
    pub fn shifted(&self, shift: i64) -> Self {
        Self {
            sites: self.sites.iter().map(|s| s + shift).collect(),
            ..self.clone()
        }
    }

    pub fn with_dipole(&self, dipole: Dipole) -> Self {
        Self {
            dipole,
            ..self.clone()
        }
    }
}

/// Laser drive: Rabi frequency, detuning (both in γ) and the angle between the
/// laser wave vector and the chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    pub rabi: f64,
    pub detuning: f64,
    pub laser_angle: f64,
}

impl DriveParams {
    pub fn new(rabi: f64, detuning: f64, laser_angle: f64) -> Result<Self> {
        if !(rabi.is_finite() && rabi >= 0.0) {
            return Err(invalid("rabi", format!("must be non-negative, got {rabi}")));
        }
        if !detuning.is_finite() {
            return Err(invalid("detuning", "must be finite"));
        }
        if !(0.0..=PI).contains(&laser_angle) {
            return Err(invalid("laser_angle", format!("must lie in [0, π], got {laser_angle}")));
        }
        Ok(Self {
            rabi,
            detuning,
            laser_angle,
        })
    }

    pub fn with_rabi(self, rabi: f64) -> Self {
        Self { rabi, ..self }
    }

    pub fn with_detuning(self, detuning: f64) -> Self {
        Self { detuning, ..self }
    }
}

/// Laser phases `u_j = exp(i k z_j cos φ)` at the occupied sites.
pub fn drive_phases(chain: &AtomChain, drive: &DriveParams) -> Vec<C64> {
    let kz = WAVENUMBER * drive.laser_angle.cos();
    chain
        .positions()
        .into_iter()
        .map(|z| C64::from_polar(1.0, kz * z))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn chain(sites: Vec<i64>) -> AtomChain {
        AtomChain::new(0.8, sites, 0.1, Dipole::circular()).unwrap()
    }

    #[test]
    fn perpendicular_drive_has_uniform_phase() {
        let drive = DriveParams::new(1.0, 0.0, PI / 2.0).unwrap();
        for u in drive_phases(&chain(vec![0, 1, 2, 5]), &drive) {
            assert_abs_diff_eq!(u.re, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(u.im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn two_atom_phase_step() {
        let drive = DriveParams::new(1.0, 0.0, 1.37).unwrap();
        let u = drive_phases(&chain(vec![0, 1]), &drive);
        let ratio = u[1] / u[0];
        let expected = C64::from_polar(1.0, 2.0 * PI * 0.8 * 1.37f64.cos());
        assert_abs_diff_eq!(ratio.re, expected.re, epsilon = 1e-14);
        assert_abs_diff_eq!(ratio.im, expected.im, epsilon = 1e-14);
        // cos(1.37) ≈ 0.1994 so the phase step is ≈ 1.0023 rad
        assert_abs_diff_eq!(ratio.arg(), 1.0023, epsilon = 1e-3);
    }

    #[test]
    fn voids_keep_lattice_positions() {
        let c = chain(vec![0, 1, 3]);
        assert_eq!(c.positions(), vec![0.0, 0.8, 2.4000000000000004]);
        let drive = DriveParams::new(1.0, 0.0, 1.0).unwrap();
        let u = drive_phases(&c, &drive);
        let expected = C64::from_polar(1.0, WAVENUMBER * 3.0 * 0.8 * 1f64.cos());
        assert_abs_diff_eq!((u[2] - expected).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_chains() {
        assert!(AtomChain::new(0.8, vec![0, 0], 0.1, Dipole::circular()).is_err());
        assert!(AtomChain::new(0.8, vec![2, 1], 0.1, Dipole::circular()).is_err());
        assert!(AtomChain::new(0.8, vec![], 0.1, Dipole::circular()).is_err());
        assert!(AtomChain::new(-0.8, vec![0], 0.1, Dipole::circular()).is_err());
        assert!(AtomChain::new(0.8, vec![0], -0.1, Dipole::circular()).is_err());
        assert!(DriveParams::new(-1.0, 0.0, 1.0).is_err());
        assert!(DriveParams::new(1.0, 0.0, 4.0).is_err());
    }

    #[test]
    fn dipole_is_normalized() {
        let d = Dipole::new([C64::new(3.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 4.0)]).unwrap();
        let norm: f64 = d.0.iter().map(|c| c.norm_sqr()).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(Dipole::circular().axial_weight(), 0.5, epsilon = 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn phases_have_unit_modulus_and_shift_globally(
            sites in proptest::collection::btree_set(-20i64..20, 1..8),
            spacing in 0.1f64..2.0,
            angle in 0.0f64..PI,
            shift in -5i64..5,
        ) {
            let c = AtomChain::new(spacing, sites.into_iter().collect(), 0.1, Dipole::circular()).unwrap();
            let drive = DriveParams::new(1.0, 0.0, angle).unwrap();
            let u = drive_phases(&c, &drive);
            let v = drive_phases(&c.shifted(shift), &drive);
            let factor = v[0] / u[0];
            for (a, b) in u.iter().zip(&v) {
                proptest::prop_assert!((a.norm() - 1.0).abs() < 1e-12);
                proptest::prop_assert!((b - a * factor).norm() < 1e-9);
            }
        }
    }
}
