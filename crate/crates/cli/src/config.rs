//! Declarative TOML configuration. Physical quantities carry their unit in
//! the key name; defaults are the reference parameter set (0.22λ fiber, 0.8λ spacing, β₁ = 0.15).

use std::path::Path;

use fiberqed::fiber::{FiberSpec, RateCalibration};
use fiberqed::geometry::{AtomChain, Dipole, DriveParams};
use fiberqed::tomography::{EigenOptions, FbpOptions, TomographyGrids};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Scenario to run when `--scenario` is not given.
    pub scenario: Option<String>,
    pub fiber: FiberConfig,
    pub chain: ChainConfig,
    pub drive: DriveConfig,
    pub calibration: CalibrationConfig,
    pub modes: ModesConfig,
    pub spectrum: SpectrumConfig,
    pub line: LineConfig,
    pub steadystate: SteadyStateConfig,
    pub wigner: WignerConfig,
    pub gaps: GapsConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            scenario: None,
            fiber: FiberConfig::default(),
            chain: ChainConfig::default(),
            drive: DriveConfig::default(),
            calibration: CalibrationConfig::default(),
            modes: ModesConfig::default(),
            spectrum: SpectrumConfig::default(),
            line: LineConfig::default(),
            steadystate: SteadyStateConfig::default(),
            wigner: WignerConfig::default(),
            gaps: GapsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiberConfig {
    pub radius_in_lambda: f64,
    pub refractive_index: f64,
}

impl Default for FiberConfig {
    fn default() -> Self {
        Self {
            radius_in_lambda: 0.22,
            refractive_index: 1.45,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DipoleChoice {
    /// `(1, 0, −i)/√2` in (r, φ, z).
    Circular,
    /// Complex conjugate of `circular` (mirror-image chirality).
    CircularConjugate,
}

impl DipoleChoice {
    pub fn dipole(self) -> Dipole {
        match self {
            DipoleChoice::Circular => Dipole::circular(),
            DipoleChoice::CircularConjugate => Dipole::circular().conj(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainConfig {
    pub atoms: usize,
    pub spacing_in_lambda: f64,
    pub surface_distance_in_lambda: f64,
    /// Occupied lattice sites; overrides `atoms` when given.
    pub sites: Option<Vec<i64>>,
    pub dipole: DipoleChoice,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            atoms: 15,
            spacing_in_lambda: 0.8,
            surface_distance_in_lambda: 0.1,
            sites: None,
            dipole: DipoleChoice::Circular,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveConfig {
    pub rabi_in_gamma: f64,
    pub detuning_in_gamma: f64,
    pub laser_angle_in_rad: f64,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self {
            rabi_in_gamma: 1.0,
            detuning_in_gamma: 0.0,
            laser_angle_in_rad: 1.37,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    Beta,
    FirstPrinciples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    pub mode: CalibrationMode,
    pub beta_single: f64,
    pub chirality_single: Option<f64>,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            mode: CalibrationMode::Beta,
            beta_single: 0.15,
            chirality_single: None,
        }
    }
}

impl CalibrationConfig {
    pub fn calibration(&self) -> RateCalibration {
        match self.mode {
            CalibrationMode::Beta => RateCalibration::Beta {
                beta: self.beta_single,
                chirality: self.chirality_single,
            },
            CalibrationMode::FirstPrinciples => RateCalibration::FirstPrinciples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModesConfig {
    pub dispersion_points: usize,
    pub profile_points: usize,
    pub profile_extent_in_radius: f64,
}

impl Default for ModesConfig {
    fn default() -> Self {
        Self {
            dispersion_points: 2001,
            profile_points: 401,
            profile_extent_in_radius: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub atoms: usize,
    pub spacing_min_in_lambda: f64,
    pub spacing_max_in_lambda: f64,
    pub spacing_points: usize,
    pub matching_orders: u32,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            atoms: 15,
            spacing_min_in_lambda: 0.1,
            spacing_max_in_lambda: 2.0,
            spacing_points: 381,
            matching_orders: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LineConfig {
    /// Chain lengths for the splitting sweep.
    pub atoms: Vec<usize>,
    /// Chain lengths whose full Γ(Δ) line is written.
    pub line_atoms: Vec<usize>,
    pub detuning_points: usize,
    /// Fixed half width of the Δ grid; the default tracks the interaction spectrum.
    pub detuning_half_width_in_gamma: Option<f64>,
}

impl Default for LineConfig {
    fn default() -> Self {
        Self {
            atoms: (2..=100).collect(),
            line_atoms: vec![15],
            detuning_points: fiberqed::weak_drive::DEFAULT_LINE_POINTS,
            detuning_half_width_in_gamma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteadyStateConfig {
    pub atoms: Vec<usize>,
    pub rabi_min_in_gamma: f64,
    pub rabi_max_in_gamma: f64,
    /// Log-spaced Ω samples between the bounds.
    pub rabi_points: usize,
    pub detuning_in_gamma: f64,
}

impl Default for SteadyStateConfig {
    fn default() -> Self {
        Self {
            atoms: (1..=7).collect(),
            rabi_min_in_gamma: 0.01,
            rabi_max_in_gamma: 10.0,
            rabi_points: 31,
            detuning_in_gamma: 0.0,
        }
    }
}

impl SteadyStateConfig {
    pub fn rabi_grid(&self) -> Vec<f64> {
        log_grid(self.rabi_min_in_gamma, self.rabi_max_in_gamma, self.rabi_points)
    }
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..points)
                .map(|k| {
                    if k == 0 {
                        lo
                    } else if k == points - 1 {
                        hi
                    } else {
                        (a + (b - a) * k as f64 / (points - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Apodization {
    Hann,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WignerConfig {
    pub atoms: Vec<usize>,
    pub rabi_in_gamma: Vec<f64>,
    pub detuning_in_gamma: f64,
    pub angles: usize,
    pub s_half_width_in_gamma: f64,
    pub s_points: usize,
    pub s_max_half_width_in_gamma: f64,
    pub x_points: usize,
    pub tail: f64,
    pub integration_time_in_inv_gamma: f64,
    pub apodization: Apodization,
    pub hann_cutoff_in_nyquist: f64,
    pub eigen_tolerance: f64,
}

impl Default for WignerConfig {
    fn default() -> Self {
        let grids = TomographyGrids::default();
        Self {
            atoms: vec![1, 2, 3],
            rabi_in_gamma: vec![0.05, 1.5],
            detuning_in_gamma: 0.0,
            angles: grids.angles,
            s_half_width_in_gamma: grids.s_half_width,
            s_points: grids.s_points,
            s_max_half_width_in_gamma: grids.s_max_half_width,
            x_points: grids.x_points,
            tail: grids.tail,
            integration_time_in_inv_gamma: grids.integration_time,
            apodization: Apodization::Hann,
            hann_cutoff_in_nyquist: 0.8,
            eigen_tolerance: EigenOptions::default().tolerance,
        }
    }
}

impl WignerConfig {
    pub fn grids(&self) -> TomographyGrids {
        TomographyGrids {
            angles: self.angles,
            s_half_width: self.s_half_width_in_gamma,
            s_points: self.s_points,
            s_max_half_width: self.s_max_half_width_in_gamma,
            x_points: self.x_points,
            tail: self.tail,
            integration_time: self.integration_time_in_inv_gamma,
        }
    }

    pub fn fbp(&self) -> FbpOptions {
        FbpOptions {
            hann_cutoff: match self.apodization {
                Apodization::Hann => Some(self.hann_cutoff_in_nyquist),
                Apodization::None => None,
            },
        }
    }

    pub fn eigen(&self, seed: Option<u64>) -> EigenOptions {
        EigenOptions {
            tolerance: self.eigen_tolerance,
            seed,
            ..EigenOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapSelection {
    /// Every placement of the atoms on the sites.
    All,
    /// Full chain plus configurations with one interior gap.
    SingleGap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapsConfig {
    pub total_sites: usize,
    pub atoms: usize,
    pub selection: GapSelection,
    /// Weak drive for β and χ.
    pub rabi_in_gamma: f64,
    /// Drive for the Wigner reconstruction; no tomography when absent.
    pub wigner_rabi_in_gamma: Option<f64>,
}

impl Default for GapsConfig {
    fn default() -> Self {
        Self {
            total_sites: 5,
            atoms: 4,
            selection: GapSelection::SingleGap,
            rabi_in_gamma: 0.01,
            wigner_rabi_in_gamma: Some(0.5),
        }
    }
}

pub const SCENARIOS: [&str; 7] = ["modes", "spectrum", "line", "steadystate", "wigner", "gaps", "all"];

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text).map_err(|e| ConfigError::from_toml(text, &e))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn fiber_spec(&self) -> Result<FiberSpec, ConfigError> {
        FiberSpec::new(self.fiber.radius_in_lambda, self.fiber.refractive_index)
            .map_err(|e| ConfigError::field("fiber", e.to_string()))
    }

    /// Chain from `[chain]`, with `atoms` overridden when given.
    pub fn chain(&self, atoms: Option<usize>) -> Result<AtomChain, ConfigError> {
        let c = &self.chain;
        let result = match (&c.sites, atoms) {
            (Some(sites), None) => {
                AtomChain::new(c.spacing_in_lambda, sites.clone(), c.surface_distance_in_lambda, c.dipole.dipole())
            }
            (_, n) => AtomChain::regular(
                n.unwrap_or(c.atoms),
                c.spacing_in_lambda,
                c.surface_distance_in_lambda,
                c.dipole.dipole(),
            ),
        };
        result.map_err(|e| ConfigError::field("chain", e.to_string()))
    }

    pub fn chain_with_sites(&self, sites: Vec<i64>) -> Result<AtomChain, ConfigError> {
        let c = &self.chain;
        AtomChain::new(c.spacing_in_lambda, sites, c.surface_distance_in_lambda, c.dipole.dipole())
            .map_err(|e| ConfigError::field("chain", e.to_string()))
    }

    pub fn drive(&self, rabi: f64, detuning: f64) -> Result<DriveParams, ConfigError> {
        DriveParams::new(rabi, detuning, self.drive.laser_angle_in_rad)
            .map_err(|e| ConfigError::field("drive", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        use ConfigError as E;
        if let Some(s) = &self.scenario {
            if !SCENARIOS.contains(&s.as_str()) {
                return Err(E::field("scenario", format!("unknown scenario `{s}`")));
            }
        }
        self.fiber_spec()?;
        self.chain(None)?;
        self.drive(self.drive.rabi_in_gamma, self.drive.detuning_in_gamma)?;
        let cal = &self.calibration;
        if cal.mode == CalibrationMode::Beta && !(cal.beta_single > 0.0 && cal.beta_single < 1.0) {
            return Err(E::field("calibration.beta_single", "must lie in (0, 1)"));
        }
        if let Some(chi) = cal.chirality_single {
            if !(chi.abs() <= 1.0) {
                return Err(E::field("calibration.chirality_single", "must lie in [−1, 1]"));
            }
        }
        if self.modes.dispersion_points < 2 || self.modes.profile_points < 2 {
            return Err(E::field("modes", "grids need at least two points"));
        }
        if !(self.modes.profile_extent_in_radius > 1.0) {
            return Err(E::field("modes.profile_extent_in_radius", "must exceed 1"));
        }
        let sp = &self.spectrum;
        if sp.atoms == 0 || sp.spacing_points < 3 {
            return Err(E::field("spectrum", "need at least one atom and three spacings"));
        }
        if !(sp.spacing_min_in_lambda > 0.0 && sp.spacing_max_in_lambda > sp.spacing_min_in_lambda) {
            return Err(E::field("spectrum.spacing_min_in_lambda", "need 0 < min < max"));
        }
        let line = &self.line;
        if line.atoms.is_empty() && line.line_atoms.is_empty() {
            return Err(E::field("line.atoms", "grid must be nonempty"));
        }
        if line.atoms.iter().chain(&line.line_atoms).any(|&n| n == 0) {
            return Err(E::field("line.atoms", "chain lengths must be positive"));
        }
        if line.detuning_points < 3 {
            return Err(E::field("line.detuning_points", "need at least three points"));
        }
        if let Some(w) = line.detuning_half_width_in_gamma {
            if !(w > 0.0) {
                return Err(E::field("line.detuning_half_width_in_gamma", "must be positive"));
            }
        }
        let ss = &self.steadystate;
        if ss.atoms.is_empty() || ss.rabi_points == 0 {
            return Err(E::field("steadystate", "grids must be nonempty"));
        }
        if !(ss.rabi_min_in_gamma > 0.0 && ss.rabi_max_in_gamma >= ss.rabi_min_in_gamma) {
            return Err(E::field("steadystate.rabi_min_in_gamma", "need 0 < min ≤ max"));
        }
        check_atoms("steadystate.atoms", &ss.atoms)?;
        let w = &self.wigner;
        if w.atoms.is_empty() || w.rabi_in_gamma.is_empty() {
            return Err(E::field("wigner", "grids must be nonempty"));
        }
        check_atoms("wigner.atoms", &w.atoms)?;
        if w.rabi_in_gamma.iter().any(|r| !(*r >= 0.0)) {
            return Err(E::field("wigner.rabi_in_gamma", "must be non-negative"));
        }
        w.grids().validate().map_err(|e| E::field("wigner", e.to_string()))?;
        if w.angles < fiberqed::tomography::radon::MIN_ANGLES {
            return Err(E::field("wigner.angles", "inverse Radon transform needs at least 16 angles"));
        }
        if !(w.hann_cutoff_in_nyquist > 0.0 && w.hann_cutoff_in_nyquist <= 1.0) {
            return Err(E::field("wigner.hann_cutoff_in_nyquist", "must lie in (0, 1]"));
        }
        if !(w.eigen_tolerance > 0.0) {
            return Err(E::field("wigner.eigen_tolerance", "must be positive"));
        }
        let g = &self.gaps;
        if g.atoms == 0 || g.atoms > g.total_sites {
            return Err(E::field("gaps.atoms", "need 1 ≤ atoms ≤ total_sites"));
        }
        check_atoms("gaps.atoms", &[g.atoms])?;
        Ok(())
    }
}

fn check_atoms(field: &'static str, atoms: &[usize]) -> Result<(), ConfigError> {
    let cap = fiberqed::lindblad::MAX_ATOMS;
    if atoms.iter().any(|&n| n == 0 || n > cap) {
        return Err(ConfigError::field(field, format!("full master equation needs 1 ≤ N ≤ {cap}")));
    }
    Ok(())
}
