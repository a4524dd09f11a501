//! Single-excitation (weak drive) stationary state and the fluorescence
//! excitation line.

use faer::linalg::solvers::{FullPivLu, Solve};
use faer::Mat;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::couplings::CouplingKernels;
use crate::error::{invalid, Error, Result};
use crate::geometry::{drive_phases, AtomChain, DriveParams};

/// Pivot ratio below which the linear system is reported singular.
const SINGULAR_RATIO: f64 = 1e-13;

pub const DEFAULT_LINE_POINTS: usize = 2001;

/// First-order stationary coherences `c_j = ⟨σ_j⟩`.
///
/// Solves `(K − Δ) c = −Ω conj(u)` with the hopping matrix
/// `K_ij = V_ij − (i/2) Γ_ji`.
pub fn steady_amplitudes(kernels: &CouplingKernels, chain: &AtomChain, drive: &DriveParams) -> Result<Vec<C64>> {
    let n = kernels.len();
    if chain.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: chain.len(),
        });
    }
    let hop = kernels.hopping();
    solve_amplitudes(&hop, &drive_phases(chain, drive), drive.rabi, drive.detuning)
}

fn solve_amplitudes(hop: &Mat<C64>, phases: &[C64], rabi: f64, detuning: f64) -> Result<Vec<C64>> {
    let n = hop.nrows();
    let a = Mat::from_fn(n, n, |i, j| if i == j { hop[(i, j)] - detuning } else { hop[(i, j)] });
    let lu = FullPivLu::new(a.as_ref());
    let diag: Vec<f64> = (0..n).map(|i| lu.U()[(i, i)].norm()).collect();
    let largest = diag.iter().cloned().fold(0.0f64, f64::max);
    let smallest = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = if largest > 0.0 { smallest / largest } else { 0.0 };
    if !(ratio > SINGULAR_RATIO) {
        return Err(Error::SingularSystem(ratio));
    }
    let rhs = Mat::from_fn(n, 1, |i, _| -rabi * phases[i].conj());
    let x = lu.solve(&rhs);
    Ok((0..n).map(|i| x[(i, 0)]).collect())
}

/// Emission rates into the right, left and unguided channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRates {
    pub right: f64,
    pub left: f64,
    pub unguided: f64,
}

impl ChannelRates {
    pub fn guided(&self) -> f64 {
        self.right + self.left
    }

    /// `(Γ_R + Γ_L) / (Γ_R + Γ_L + Γ_u)`.
    pub fn beta(&self) -> f64 {
        self.guided() / (self.guided() + self.unguided)
    }

    /// `(Γ_R − Γ_L) / (Γ_R + Γ_L)`.
    pub fn chirality(&self) -> f64 {
        (self.right - self.left) / self.guided()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            right: self.right * factor,
            left: self.left * factor,
            unguided: self.unguided * factor,
        }
    }
}

/// `Σ_ij Γ_ij ⟨σ_j† σ_i⟩` with `⟨σ_j† σ_i⟩ = c_j* c_i`.
pub fn channel_rate(g: &Mat<C64>, c: &[C64]) -> f64 {
    let n = c.len();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += g[(i, j)] * c[i] * c[j].conj();
        }
    }
    acc.re
}

pub fn channel_rates(kernels: &CouplingKernels, c: &[C64]) -> ChannelRates {
    ChannelRates {
        right: channel_rate(&kernels.g_r, c),
        left: channel_rate(&kernels.g_l, c),
        unguided: channel_rate(&kernels.g_u, c),
    }
}

/// Fluorescence line over a detuning grid, rates in units of Ω²/γ.
#[derive(Debug, Clone, PartialEq)]
pub struct LineScan {
    pub detunings: Vec<f64>,
    pub rates: Vec<ChannelRates>,
    pub splitting: Option<f64>,
}

impl LineScan {
    pub fn right(&self) -> Vec<f64> {
        self.rates.iter().map(|r| r.right).collect()
    }

    /// Largest Γ_R on the grid.
    pub fn peak(&self) -> f64 {
        self.rates.iter().map(|r| r.right).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Default detuning grid `±max(10γ, 1.5 max|v_n|)` with `points` samples.
pub fn default_detuning_grid(interaction_eigenvalues: &[f64], points: usize) -> Vec<f64> {
    let extent = interaction_eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let half = (1.5 * extent).max(10.0);
    linspace(-half, half, points)
}

pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Weak-drive emission line Γ_R(Δ), Γ_L(Δ), Γ_u(Δ) normalized by Ω².
///
/// Only the drive geometry (laser angle) is taken from `drive`; the rates are
/// linear response and independent of Ω.
pub fn emission_line(
    kernels: &CouplingKernels,
    chain: &AtomChain,
    drive: &DriveParams,
    detunings: &[f64],
) -> Result<LineScan> {
    if detunings.is_empty() {
        return Err(invalid("detunings", "grid must be nonempty"));
    }
    if detunings.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("detunings", "grid must be strictly increasing"));
    }
    let hop = kernels.hopping();
    let phases = drive_phases(chain, drive);
    let rates = detunings
        .par_iter()
        .map(|&delta| {
            let c = solve_amplitudes(&hop, &phases, 1.0, delta)?;
            Ok(channel_rates(kernels, &c))
        })
        .collect::<Result<Vec<_>>>()?;
    let right: Vec<f64> = rates.iter().map(|r| r.right).collect();
    let splitting = line_splitting(detunings, &right);
    Ok(LineScan {
        detunings: detunings.to_vec(),
        rates,
        splitting,
    })
}

/// Distance between the two highest local maxima, each refined by a
/// three-point parabola. `None` for single-peaked data.
pub fn line_splitting(x: &[f64], y: &[f64]) -> Option<f64> {
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        if y[i] > y[i - 1] && y[i] >= y[i + 1] {
            peaks.push(refine_peak(x, y, i));
        }
    }
    if peaks.len() < 2 {
        return None;
    }
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    Some((peaks[0].0 - peaks[1].0).abs())
}

fn refine_peak(x: &[f64], y: &[f64], i: usize) -> (f64, f64) {
    let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
    let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
    let d0 = (y1 - y0) / (x1 - x0);
    let d1 = (y2 - y1) / (x2 - x1);
    let curvature = (d1 - d0) / (x2 - x0);
    if curvature >= 0.0 {
        return (x1, y1);
    }
    // vertex of the parabola through the three samples
    let slope_mid = d0 + curvature * (x1 - x0);
    let shift = -slope_mid / (2.0 * curvature);
    let xv = (x1 + shift).clamp(x0, x2);
    let yv = y1 + slope_mid * (xv - x1) + curvature * (xv - x1) * (xv - x1);
    (xv, yv)
}
