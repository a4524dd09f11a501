//! Legendre–Fenchel transform of θ(s) to the rate function and the
//! stationary quadrature marginals `Π_t(x) ∝ exp(−t φ(x))`.

use super::scgf::ScgfCurve;
use crate::error::{invalid, Error, Result};

/// Divided second differences below `−CONVEXITY_TOL` are rejected; smaller
/// violations are removed by the convex hull and logged.
pub const CONVEXITY_TOL: f64 = 1e-8;

/// Probability density of one quadrature on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub alpha: f64,
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

impl Marginal {
    /// Trapezoidal integral of the density.
    pub fn norm(&self) -> f64 {
        trapezoid(&self.x, &self.density)
    }

    pub fn moment(&self, order: i32) -> f64 {
        let f: Vec<f64> = self.x.iter().zip(&self.density).map(|(x, p)| x.powi(order) * p).collect();
        trapezoid(&self.x, &f) / self.norm()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn variance(&self) -> f64 {
        self.central_moment(2)
    }

    pub fn central_moment(&self, order: i32) -> f64 {
        let m = self.mean();
        let f: Vec<f64> = self
            .x
            .iter()
            .zip(&self.density)
            .map(|(x, p)| (x - m).powi(order) * p)
            .collect();
        trapezoid(&self.x, &f) / self.norm()
    }

    /// `μ₄/μ₂² − 3`.
    pub fn excess_kurtosis(&self) -> f64 {
        let v = self.variance();
        self.central_moment(4) / (v * v) - 3.0
    }
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Rate function samples with the minimizing counting field per point.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFunction {
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub minimizer: Vec<f64>,
    /// Largest convexity violation removed by the hull (0 if none).
    pub hull_violation: f64,
}

/// Lower convex hull of `(s_k, θ_k)` (indices into the input).
fn lower_hull(s: &[f64], t: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(s.len());
    for k in 0..s.len() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // drop b if it lies on or above the chord a–k
            let cross = (s[b] - s[a]) * (t[k] - t[a]) - (t[b] - t[a]) * (s[k] - s[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    hull
}

/// `φ(x) = −min_s [θ(s) + x s]` on `x_grid`, from the convex hull of the
/// samples with a local parabola around the minimizing vertex.
pub fn legendre(s: &[f64], theta: &[f64], x_grid: &[f64]) -> Result<RateFunction> {
    if s.len() != theta.len() {
        return Err(Error::DimensionMismatch {
            expected: s.len(),
            got: theta.len(),
        });
    }
    if s.len() < 3 {
        return Err(invalid("s_grid", "needs at least three samples"));
    }
    if s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("s_grid", "must be strictly increasing"));
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(invalid("theta", "samples must be finite"));
    }
    let mut worst = (0.0f64, 0.0);
    for k in 1..s.len() - 1 {
        let d2 = (theta[k + 1] - theta[k]) / (s[k + 1] - s[k]) - (theta[k] - theta[k - 1]) / (s[k] - s[k - 1]);
        if d2 < worst.0 {
            worst = (d2, s[k]);
        }
    }
    if worst.0 < -CONVEXITY_TOL {
        return Err(Error::NonConvexInput {
            worst: worst.0,
            at: worst.1,
        });
    }
    if worst.0 < 0.0 {
        log::debug!("hull removed convexity violation {:e} at s = {}", worst.0, worst.1);
    }
    let hull = lower_hull(s, theta);
    let hs: Vec<f64> = hull.iter().map(|&k| s[k]).collect();
    let ht: Vec<f64> = hull.iter().map(|&k| theta[k]).collect();
    let mut phi = Vec::with_capacity(x_grid.len());
    let mut minimizer = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        // θ + x s is convex along the hull: locate its minimum vertex
        let mut best = 0;
        let mut best_val = f64::INFINITY;
        for (k, (&sk, &tk)) in hs.iter().zip(&ht).enumerate() {
            let v = tk + x * sk;
            if v < best_val {
                best_val = v;
                best = k;
            }
        }
        let mut arg = hs[best];
        if best > 0 && best + 1 < hs.len() {
            if let Some((v, sv)) = parabola_min(&hs[best - 1..=best + 1], &ht[best - 1..=best + 1], x) {
                if v < best_val {
                    best_val = v;
                    arg = sv;
                }
            }
        }
        phi.push(-best_val);
        minimizer.push(arg);
    }
    Ok(RateFunction {
        x: x_grid.to_vec(),
        phi,
        minimizer,
        hull_violation: -worst.0,
    })
}

/// Minimum of `q(s) + x s` over the bracket, with q the parabola through
/// the three samples.
fn parabola_min(s: &[f64], t: &[f64], x: f64) -> Option<(f64, f64)> {
    let d0 = (t[1] - t[0]) / (s[1] - s[0]);
    let d1 = (t[2] - t[1]) / (s[2] - s[1]);
    let c = (d1 - d0) / (s[2] - s[0]);
    if c <= 0.0 {
        return None;
    }
    // q(s) = t1 + b (s − s1) + c (s − s1)²
    let b = d0 + c * (s[1] - s[0]);
    let u = (-(b + x) / (2.0 * c)).clamp(s[0] - s[1], s[2] - s[1]);
    let sv = s[1] + u;
    Some((t[1] + b * u + c * u * u + x * sv, sv))
}

/// Normalized marginal `Π_t(x) ∝ exp(−t φ(x))` from an SCGF curve.
pub fn rate_function(curve: &ScgfCurve, x_grid: &[f64], integration_time: f64) -> Result<Marginal> {
    if !(integration_time > 0.0 && integration_time.is_finite()) {
        return Err(invalid("integration_time", "must be positive"));
    }
    if x_grid.len() < 2 {
        return Err(invalid("x_grid", "needs at least two points"));
    }
    let rate = legendre(&curve.s, &curve.theta, x_grid)?;
    Ok(marginal_from_rate(curve.alpha, &rate, integration_time))
}

pub fn marginal_from_rate(alpha: f64, rate: &RateFunction, integration_time: f64) -> Marginal {
    let floor = rate.phi.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut density: Vec<f64> = rate
        .phi
        .iter()
        .map(|p| (-integration_time * (p - floor)).exp())
        .collect();
    let z = trapezoid(&rate.x, &density);
    for p in density.iter_mut() {
        *p /= z;
    }
    Marginal {
        alpha,
        x: rate.x.clone(),
        density,
    }
}
