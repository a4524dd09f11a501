//! Quadrature marginals over a uniform set of angles.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::deform::DeformationTemplate;
use super::legendre::{legendre, marginal_from_rate, Marginal};
use super::scgf::{scgf, EigenOptions, ScgfCurve};
use crate::error::{invalid, Result};
use crate::weak_drive::linspace;

/// Angle, counting-field and activity grids of the tomography chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomographyGrids {
    pub angles: usize,
    /// Initial s range `[−w, w]`, widened while the marginal tails are cut.
    pub s_half_width: f64,
    pub s_points: usize,
    pub s_max_half_width: f64,
    pub x_points: usize,
    /// Relative density that bounds the x grid and the tail check.
    pub tail: f64,
    pub integration_time: f64,
}

impl Default for TomographyGrids {
    fn default() -> Self {
        Self {
            angles: 64,
            s_half_width: 12.0,
            s_points: 121,
            s_max_half_width: 200.0,
            x_points: 257,
            tail: 1e-10,
            integration_time: 1.0,
        }
    }
}

impl TomographyGrids {
    pub fn validate(&self) -> Result<()> {
        if self.angles == 0 {
            return Err(invalid("angles", "need at least one angle"));
        }
        if self.s_points < 3 || self.s_points % 2 == 0 {
            return Err(invalid("s_points", "must be odd and at least 3 so the grid contains s = 0"));
        }
        if !(self.s_half_width > 0.0 && self.s_max_half_width >= self.s_half_width) {
            return Err(invalid("s_half_width", "must be positive and not exceed s_max_half_width"));
        }
        if self.x_points < 3 {
            return Err(invalid("x_points", "need at least three points"));
        }
        if !(self.tail > 0.0 && self.tail < 1.0) {
            return Err(invalid("tail", "must lie in (0, 1)"));
        }
        if !(self.integration_time > 0.0 && self.integration_time.is_finite()) {
            return Err(invalid("integration_time", "must be positive"));
        }
        Ok(())
    }

    pub fn s_grid(&self) -> Vec<f64> {
        let mut g = linspace(-self.s_half_width, self.s_half_width, self.s_points);
        g[self.s_points / 2] = 0.0;
        g
    }
}

/// `α_k = kπ/n`, k = 0..n.
pub fn uniform_angles(count: usize) -> Vec<f64> {
    (0..count).map(|k| k as f64 * PI / count as f64).collect()
}

/// Marginals on a common x grid together with their SCGF curves.
#[derive(Debug, Clone)]
pub struct Sinogram {
    pub angles: Vec<f64>,
    pub x: Vec<f64>,
    pub marginals: Vec<Marginal>,
    pub curves: Vec<ScgfCurve>,
    pub consistency: Consistency,
}

/// Fit of the marginal means to `⟨x⟩ cos α + ⟨p⟩ sin α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Consistency {
    pub mean_x: f64,
    pub mean_p: f64,
    /// `max_α |mean(α) − fit(α)|`.
    pub max_residual: f64,
    /// Same residual in units of the marginal standard deviation.
    pub relative: f64,
}

pub fn consistency(marginals: &[Marginal]) -> Consistency {
    let (mut cc, mut ss, mut cs, mut mc, mut ms) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let means: Vec<f64> = marginals.iter().map(|m| m.mean()).collect();
    for (m, &mean) in marginals.iter().zip(&means) {
        let (sa, ca) = m.alpha.sin_cos();
        cc += ca * ca;
        ss += sa * sa;
        cs += ca * sa;
        mc += mean * ca;
        ms += mean * sa;
    }
    let det = cc * ss - cs * cs;
    let (mean_x, mean_p) = if det.abs() > 1e-300 {
        ((mc * ss - ms * cs) / det, (ms * cc - mc * cs) / det)
    } else {
        (mc / cc.max(1e-300), 0.0)
    };
    let mut max_residual = 0.0f64;
    let mut relative = 0.0f64;
    for (m, &mean) in marginals.iter().zip(&means) {
        let (sa, ca) = m.alpha.sin_cos();
        let r = (mean - mean_x * ca - mean_p * sa).abs();
        max_residual = max_residual.max(r);
        relative = relative.max(r / m.variance().sqrt());
    }
    Consistency {
        mean_x,
        mean_p,
        max_residual,
        relative,
    }
}

/// Rate-function value at the edges of the x range the curve resolves,
/// measured from the minimum: `(lower, upper)`.
fn edge_excess(curve: &ScgfCurve) -> (f64, f64) {
    let n = curve.s.len();
    let (s, t) = (&curve.s, &curve.theta);
    let t0 = curve.at_zero().unwrap_or(0.0);
    // x_hi = −θ′(s_min) is attained at s_min; x_lo = −θ′(s_max) at s_max
    let x_hi = -(t[1] - t[0]) / (s[1] - s[0]);
    let x_lo = -(t[n - 1] - t[n - 2]) / (s[n - 1] - s[n - 2]);
    let phi_hi = -t[0] - x_hi * s[0];
    let phi_lo = -t[n - 1] - x_lo * s[n - 1];
    (phi_lo + t0, phi_hi + t0)
}

/// Activity range `[lo, hi]` where `Π > tail · Π_max`, resolved on a probe grid.
fn support(curve: &ScgfCurve, grids: &TomographyGrids) -> Result<(f64, f64)> {
    let n = curve.s.len();
    let (s, t) = (&curve.s, &curve.theta);
    let x_hi = -(t[1] - t[0]) / (s[1] - s[0]);
    let x_lo = -(t[n - 1] - t[n - 2]) / (s[n - 1] - s[n - 2]);
    let probe = linspace(x_lo, x_hi, 4001);
    let rate = legendre(s, t, &probe)?;
    let floor = rate.phi.iter().cloned().fold(f64::INFINITY, f64::min);
    let cut = -grids.tail.ln() / grids.integration_time;
    let inside: Vec<f64> = probe
        .iter()
        .zip(&rate.phi)
        .filter(|(_, &p)| p - floor <= cut)
        .map(|(&x, _)| x)
        .collect();
    let step = probe[1] - probe[0];
    let lo = inside.first().copied().unwrap_or(x_lo) - step;
    let hi = inside.last().copied().unwrap_or(x_hi) + step;
    Ok((lo.max(x_lo), hi.min(x_hi)))
}

/// SCGF curve for one angle, widened until the marginal tails fall below
/// `tail` inside the resolved activity range.
pub fn adaptive_curve(
    template: &DeformationTemplate,
    alpha: f64,
    grids: &TomographyGrids,
    options: &EigenOptions,
) -> Result<ScgfCurve> {
    let mut curve = scgf(template, alpha, &grids.s_grid(), options)?;
    let cut = -grids.tail.ln() / grids.integration_time;
    let mut half = grids.s_half_width;
    loop {
        let (lo, hi) = edge_excess(&curve);
        if lo >= cut && hi >= cut {
            break;
        }
        if half >= grids.s_max_half_width {
            log::warn!(
                "α = {alpha}: s range ±{half} leaves tail excess ({lo:.3}, {hi:.3}) below {cut:.3}"
            );
            break;
        }
        half = (half * 1.5).min(grids.s_max_half_width);
        curve.extend(template, half, options)?;
    }
    Ok(curve)
}

/// Marginals for `grids.angles` uniform angles on a common symmetric x grid.
pub fn sinogram(template: &DeformationTemplate, grids: &TomographyGrids, options: &EigenOptions) -> Result<Sinogram> {
    grids.validate()?;
    let angles = uniform_angles(grids.angles);
    let curves = angles
        .par_iter()
        .map(|&alpha| adaptive_curve(template, alpha, grids, options))
        .collect::<Result<Vec<_>>>()?;
    let mut extent = 0.0f64;
    for c in &curves {
        let (lo, hi) = support(c, grids)?;
        extent = extent.max(lo.abs()).max(hi.abs());
    }
    let x = linspace(-extent, extent, grids.x_points);
    let marginals = curves
        .iter()
        .map(|c| {
            let rate = legendre(&c.s, &c.theta, &x)?;
            Ok(marginal_from_rate(c.alpha, &rate, grids.integration_time))
        })
        .collect::<Result<Vec<_>>>()?;
    let consistency = consistency(&marginals);
    Ok(Sinogram {
        angles,
        x,
        marginals,
        curves,
        consistency,
    })
}

/// Exact marginals of a Gaussian Wigner function with the given mean and
/// covariance, bypassing the counting-statistics stage.
pub fn gaussian_sinogram(mean: [f64; 2], covariance: [[f64; 2]; 2], angles: &[f64], x: &[f64]) -> Result<Sinogram> {
    let det = covariance[0][0] * covariance[1][1] - covariance[0][1] * covariance[1][0];
    if !(covariance[0][0] > 0.0 && det > 0.0) || (covariance[0][1] - covariance[1][0]).abs() > 1e-12 {
        return Err(invalid("covariance", "must be symmetric positive definite"));
    }
    let marginals: Vec<Marginal> = angles
        .iter()
        .map(|&alpha| {
            let (sa, ca) = alpha.sin_cos();
            let mu = mean[0] * ca + mean[1] * sa;
            let var = ca * ca * covariance[0][0] + 2.0 * ca * sa * covariance[0][1] + sa * sa * covariance[1][1];
            let density = x
                .iter()
                .map(|&t| (-(t - mu) * (t - mu) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt())
                .collect();
            Marginal {
                alpha,
                x: x.to_vec(),
                density,
            }
        })
        .collect();
    let consistency = consistency(&marginals);
    Ok(Sinogram {
        angles: angles.to_vec(),
        x: x.to_vec(),
        marginals,
        curves: Vec::new(),
        consistency,
    })
}
