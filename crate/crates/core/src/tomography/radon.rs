//! Filtered backprojection of quadrature marginals and the Wigner negativity.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use super::legendre::Marginal;
use super::sinogram::Sinogram;
use crate::error::{invalid, Error, Result};

pub const MIN_ANGLES: usize = 16;
/// Boundary |W| above this fraction of the peak triggers a warning.
pub const BOUNDARY_FRACTION: f64 = 1e-6;

/// Ramp filter apodization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbpOptions {
    /// Hann window cutoff as a fraction of the Nyquist frequency; `None` is the bare ramp.
    pub hann_cutoff: Option<f64>,
}

impl Default for FbpOptions {
    fn default() -> Self {
        Self { hann_cutoff: Some(0.8) }
    }
}

/// Wigner function on the square grid `x × p` (both equal to `x`).
#[derive(Debug, Clone, PartialEq)]
pub struct WignerResult {
    pub x: Vec<f64>,
    /// Row-major values, `w[i·n + j] = W(x_i, p_j)`.
    pub w: Vec<f64>,
    pub negativity: f64,
    /// Largest |W| on the rim of the reconstruction disk relative to the peak.
    pub boundary_ratio: f64,
}

impl WignerResult {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.x.len() + j]
    }

    pub fn step(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    /// 2D trapezoidal integral of `f(W)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let n = self.x.len();
        let dx = self.step();
        let weight = |k: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += weight(i) * weight(j) * f(self.w[i * n + j]);
            }
        }
        acc * dx * dx
    }

    pub fn integral(&self) -> f64 {
        self.integrate(|w| w)
    }

    /// Grid point `(x, p, W)` of the maximum.
    pub fn peak(&self) -> (f64, f64, f64) {
        let n = self.x.len();
        let (k, &v) = self
            .w
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty grid");
        (self.x[k / n], self.x[k % n], v)
    }
}

fn uniform_step(x: &[f64]) -> Result<f64> {
    if x.len() < 3 {
        return Err(invalid("x_grid", "needs at least three points"));
    }
    let dx = x[1] - x[0];
    if !(dx > 0.0) || x.windows(2).any(|w| ((w[1] - w[0]) - dx).abs() > 1e-9 * dx) {
        return Err(invalid("x_grid", "must be uniform and increasing"));
    }
    Ok(dx)
}

/// Frequency response of the band-limited ramp filter (spatial Ram-Lak
/// kernel) times the optional Hann window, for FFT length `m`.
fn ramp_response(m: usize, dx: f64, hann_cutoff: Option<f64>) -> Vec<f64> {
    let mut h: Vec<C64> = (0..m)
        .map(|k| {
            let n = if k < m / 2 { k as i64 } else { k as i64 - m as i64 };
            let v = if n == 0 {
                1.0 / (4.0 * dx * dx)
            } else if n % 2 != 0 {
                -1.0 / (PI * PI * (n * n) as f64 * dx * dx)
            } else {
                0.0
            };
            C64::new(v, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut h);
    let nyquist = 0.5 / dx;
    (0..m)
        .map(|k| {
            let f = if k < m / 2 { k as f64 } else { k as f64 - m as f64 } / (m as f64 * dx);
            let window = match hann_cutoff {
                Some(c) if f.abs() <= c * nyquist => 0.5 * (1.0 + (PI * f / (c * nyquist)).cos()),
                Some(_) => 0.0,
                None => 1.0,
            };
            h[k].norm() * dx * window
        })
        .collect()
}

/// Filtered backprojection onto the square grid spanned by the marginals'
/// common x grid, normalized to unit integral. Points outside the inscribed
/// disk (reached by only part of the projections) are set to zero.
pub fn invert_radon(sinogram: &Sinogram, options: &FbpOptions) -> Result<WignerResult> {
    let marginals = &sinogram.marginals;
    if marginals.len() < MIN_ANGLES {
        return Err(Error::InsufficientAngles {
            needed: MIN_ANGLES,
            got: marginals.len(),
        });
    }
    if let Some(c) = options.hann_cutoff {
        if !(c > 0.0 && c <= 1.0) {
            return Err(invalid("hann_cutoff", "must lie in (0, 1]"));
        }
    }
    let x = &sinogram.x;
    let n = x.len();
    let dx = uniform_step(x)?;
    let count = marginals.len();
    let dalpha = PI / count as f64;
    for (k, m) in marginals.iter().enumerate() {
        if m.x.len() != n || m.x.iter().zip(x).any(|(a, b)| a != b) {
            return Err(invalid("marginals", "all marginals must share the sinogram x grid"));
        }
        let expected = marginals[0].alpha + k as f64 * dalpha;
        if (m.alpha - expected).abs() > 1e-9 {
            return Err(invalid("angles", "must be uniform over [0, π)"));
        }
    }

    let mut m = 1;
    while m < 2 * n {
        m *= 2;
    }
    m *= 2;
    let response = ramp_response(m, dx, options.hann_cutoff);
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(m);
    let inverse = planner.plan_fft_inverse(m);

    let mut w = vec![0.0; n * n];
    let x0 = x[0];
    for marginal in marginals {
        let mut buf = vec![C64::new(0.0, 0.0); m];
        for (b, &p) in buf.iter_mut().zip(&marginal.density) {
            *b = C64::new(p, 0.0);
        }
        forward.process(&mut buf);
        for (b, &r) in buf.iter_mut().zip(&response) {
            *b *= r;
        }
        inverse.process(&mut buf);
        let q: Vec<f64> = buf[..n].iter().map(|c| c.re / m as f64).collect();
        let (sa, ca) = marginal.alpha.sin_cos();
        for i in 0..n {
            for j in 0..n {
                let t = x[i] * ca + x[j] * sa;
                let u = (t - x0) / dx;
                if u < 0.0 || u > (n - 1) as f64 {
                    continue;
                }
                let k = (u.floor() as usize).min(n - 2);
                let f = u - k as f64;
                w[i * n + j] += (1.0 - f) * q[k] + f * q[k + 1];
            }
        }
    }
    // only the inscribed disk is covered by every projection
    let radius2 = x[0].abs().min(x[n - 1].abs()).powi(2);
    for i in 0..n {
        for j in 0..n {
            let v = &mut w[i * n + j];
            *v = if x[i] * x[i] + x[j] * x[j] <= radius2 { *v * dalpha } else { 0.0 };
        }
    }
    let mut result = WignerResult {
        x: x.clone(),
        w,
        negativity: 0.0,
        boundary_ratio: 0.0,
    };
    let total = result.integral();
    if !(total.abs() > 0.0) {
        return Err(Error::NonConvergence("backprojection has zero integral".into()));
    }
    for v in result.w.iter_mut() {
        *v /= total;
    }
    result.boundary_ratio = boundary_ratio(&result);
    result.negativity = negativity(&result);
    Ok(result)
}

/// Largest |W| on the rim of the reconstruction disk relative to the peak.
fn boundary_ratio(w: &WignerResult) -> f64 {
    let n = w.len();
    let radius = w.x[0].abs().min(w.x[n - 1].abs());
    let inner = radius - 1.5 * w.step();
    let peak = w.w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut edge = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let r = w.x[i].hypot(w.x[j]);
            if r > inner && r <= radius {
                edge = edge.max(w.value(i, j).abs());
            }
        }
    }
    if peak > 0.0 {
        edge / peak
    } else {
        0.0
    }
}

/// `δW = ∫∫ (|W| − W) dx dp` by 2D trapezoidal quadrature. Warns when the
/// grid cuts off non-negligible boundary mass.
pub fn negativity(w: &WignerResult) -> f64 {
    let ratio = boundary_ratio(w);
    if ratio > BOUNDARY_FRACTION {
        log::warn!("Wigner grid boundary carries |W| = {ratio:e} of the peak; δW may be biased");
    }
    w.integrate(|v| v.abs() - v)
}

/// Line integrals of W along `x cos α + p sin α = t` on the W grid, by
/// linear splatting of each cell into t bins.
pub fn forward_project(w: &WignerResult, angles: &[f64]) -> Vec<Marginal> {
    let n = w.len();
    let dx = w.step();
    let x0 = w.x[0];
    angles
        .iter()
        .map(|&alpha| {
            let (sa, ca) = alpha.sin_cos();
            let mut density = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    let t = w.x[i] * ca + w.x[j] * sa;
                    let u = (t - x0) / dx;
                    if u < 0.0 || u > (n - 1) as f64 {
                        continue;
                    }
                    let k = (u.floor() as usize).min(n - 2);
                    let f = u - k as f64;
                    let mass = w.value(i, j);
                    density[k] += (1.0 - f) * mass;
                    density[k + 1] += f * mass;
                }
            }
            // cell area dx² spread over bins of width dx
            for d in density.iter_mut() {
                *d *= dx;
            }
            Marginal {
                alpha,
                x: w.x.clone(),
                density,
            }
        })
        .collect()
}

/// Relative L2 distance between two sets of marginals on equal grids.
pub fn relative_l2(reference: &[Marginal], other: &[Marginal]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in reference.iter().zip(other) {
        for (p, q) in a.density.iter().zip(&b.density) {
            num += (p - q) * (p - q);
            den += p * p;
        }
    }
    (num / den).sqrt()
}
