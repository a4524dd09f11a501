//! Scaled cumulant generating function θ(s): leading eigenvalue of the
//! deformed generator, by shifted inverse iteration continued along s.
//!
//! For real `s` the deformed semigroup is positivity preserving, so θ is
//! real, it has the largest real part of the spectrum and its eigenvector is
//! a positive semidefinite operator. Any real shift `σ ≥ θ` is therefore
//! closest to θ, and the positivity of the converged eigenvector certifies
//! that the right eigenvalue was found.

use faer::Mat;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::deform::DeformationTemplate;
use crate::error::{invalid, Error, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::sparse::{matvec, solve};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Iteration controls for the leading-eigenvalue solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Residual tolerance relative to `1 + |θ| + |s|`.
    pub tolerance: f64,
    /// Iterations per factorization when warm started.
    pub warm_iterations: usize,
    /// Iterations for a cold start from the a priori upper bound.
    pub cold_iterations: usize,
    /// Seed for the start-vector perturbation; `None` starts from vec(I).
    pub seed: Option<u64>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            warm_iterations: 300,
            cold_iterations: 4000,
            seed: None,
        }
    }
}

/// Leading eigenpair of one deformed generator.
#[derive(Debug, Clone)]
pub struct LeadingEigen {
    pub value: f64,
    /// Right eigenvector, unit 2-norm, phase fixed so that its trace is positive.
    pub vector: Vec<C64>,
    pub residual: f64,
    pub converged: bool,
}

/// θ sampled on an s grid for one quadrature angle.
#[derive(Debug, Clone, PartialEq)]
pub struct ScgfCurve {
    pub alpha: f64,
    pub s: Vec<f64>,
    pub theta: Vec<f64>,
    pub converged: Vec<bool>,
    ends: Option<(Vec<C64>, Vec<C64>)>,
}

impl ScgfCurve {
    /// Builds a curve from samples (no continuation state attached).
    pub fn from_samples(alpha: f64, s: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        if s.len() != theta.len() {
            return Err(Error::DimensionMismatch {
                expected: s.len(),
                got: theta.len(),
            });
        }
        let converged = vec![true; s.len()];
        Ok(Self {
            alpha,
            s,
            theta,
            converged,
            ends: None,
        })
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    /// θ at s = 0 (the grid always contains it).
    pub fn at_zero(&self) -> Option<f64> {
        self.s.iter().position(|&s| s == 0.0).map(|k| self.theta[k])
    }

    /// Most negative divided second difference `Δθ′` across the grid and the s where it occurs.
    pub fn worst_convexity(&self) -> (f64, f64) {
        let mut worst = (f64::INFINITY, 0.0);
        for k in 1..self.s.len().saturating_sub(1) {
            let left = (self.theta[k] - self.theta[k - 1]) / (self.s[k] - self.s[k - 1]);
            let right = (self.theta[k + 1] - self.theta[k]) / (self.s[k + 1] - self.s[k]);
            let d2 = right - left;
            if d2 < worst.0 {
                worst = (d2, self.s[k]);
            }
        }
        worst
    }

    /// Continues the curve outward with the same spacing until it covers
    /// `[−half_width, half_width]`, warm starting from the current ends.
    pub fn extend(&mut self, template: &DeformationTemplate, half_width: f64, options: &EigenOptions) -> Result<()> {
        if self.s.len() < 2 {
            return Err(invalid("s_grid", "extension needs at least two samples"));
        }
        let step = self.s[1] - self.s[0];
        let (mut lo_vec, mut hi_vec) = match self.ends.take() {
            Some(ends) => ends,
            None => return Err(invalid("s_grid", "curve carries no continuation state")),
        };
        let mut lower = Vec::new();
        let mut s = self.s[0];
        let mut path: Vec<(f64, f64)> = self.s[..3.min(self.s.len())]
            .iter()
            .zip(&self.theta)
            .map(|(&s, &t)| (s, t))
            .collect();
        while s - step >= -half_width - 1e-9 * step {
            s -= step;
            let (eig, _) = continue_point(template, self.alpha, s, &path, &lo_vec, options)?;
            path.insert(0, (s, eig.value));
            lower.push((s, eig.value, eig.converged));
            lo_vec = eig.vector;
        }
        let mut upper = Vec::new();
        let n = self.s.len();
        let mut path: Vec<(f64, f64)> = self.s[n.saturating_sub(3)..]
            .iter()
            .zip(&self.theta[n.saturating_sub(3)..])
            .map(|(&s, &t)| (s, t))
            .rev()
            .collect();
        let mut s = self.s[n - 1];
        while s + step <= half_width + 1e-9 * step {
            s += step;
            let (eig, _) = continue_point(template, self.alpha, s, &path, &hi_vec, options)?;
            path.insert(0, (s, eig.value));
            upper.push((s, eig.value, eig.converged));
            hi_vec = eig.vector;
        }
        let mut new_s = Vec::new();
        let mut new_t = Vec::new();
        let mut new_c = Vec::new();
        for &(s, t, c) in lower.iter().rev() {
            new_s.push(s);
            new_t.push(t);
            new_c.push(c);
        }
        new_s.extend_from_slice(&self.s);
        new_t.extend_from_slice(&self.theta);
        new_c.extend_from_slice(&self.converged);
        for &(s, t, c) in &upper {
            new_s.push(s);
            new_t.push(t);
            new_c.push(c);
        }
        self.s = new_s;
        self.theta = new_t;
        self.converged = new_c;
        self.ends = Some((lo_vec, hi_vec));
        Ok(())
    }
}

/// θ(s) on a strictly increasing grid containing 0, continued outward from
/// s = 0 in both directions. Points that fail to converge are flagged.
pub fn scgf(template: &DeformationTemplate, alpha: f64, s_grid: &[f64], options: &EigenOptions) -> Result<ScgfCurve> {
    if s_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("s_grid", "must be strictly increasing"));
    }
    let zero = s_grid
        .iter()
        .position(|&s| s == 0.0)
        .ok_or_else(|| invalid("s_grid", "must contain s = 0"))?;
    let n = s_grid.len();
    let mut theta = vec![0.0; n];
    let mut converged = vec![false; n];

    let start = start_vector(template.dim(), options.seed);
    let origin = cold_start(template, alpha, 0.0, &start, options)?;
    theta[zero] = origin.value;
    converged[zero] = origin.converged;
    if !origin.converged {
        log::warn!("θ(0) did not converge at α = {alpha}");
    }

    let mut ends = (origin.vector.clone(), origin.vector.clone());
    for direction in [1isize, -1] {
        let mut path = vec![(0.0, origin.value)];
        let mut vector = origin.vector.clone();
        let mut k = zero as isize + direction;
        while k >= 0 && (k as usize) < n {
            let s = s_grid[k as usize];
            let (eig, _) = continue_point(template, alpha, s, &path, &vector, options)?;
            if !eig.converged {
                log::warn!("θ({s}) did not converge at α = {alpha} (residual {:e})", eig.residual);
            }
            theta[k as usize] = eig.value;
            converged[k as usize] = eig.converged;
            path.insert(0, (s, eig.value));
            path.truncate(3);
            vector = eig.vector;
            k += direction;
        }
        if direction > 0 {
            ends.1 = vector;
        } else {
            ends.0 = vector;
        }
    }
    Ok(ScgfCurve {
        alpha,
        s: s_grid.to_vec(),
        theta,
        converged,
        ends: Some(ends),
    })
}

/// One continuation step: warm start from the previous eigenvector with a
/// shift just above the extrapolated θ, falling back to a cold start.
/// `path` lists the most recent samples first. Returns the eigenpair and
/// whether the cold start was needed.
fn continue_point(
    template: &DeformationTemplate,
    alpha: f64,
    s: f64,
    path: &[(f64, f64)],
    previous: &[C64],
    options: &EigenOptions,
) -> Result<(LeadingEigen, bool)> {
    let predicted = extrapolate(path, s);
    // spread between quadratic and linear extrapolation as the error scale
    let linear = extrapolate(&path[..path.len().min(2)], s);
    let mut margin = 0.02 + 2.0 * (predicted - linear).abs();
    for _ in 0..3 {
        let shift = predicted + margin;
        let warm = inverse_iteration(
            template,
            alpha,
            s,
            shift,
            previous,
            options.warm_iterations,
            options.tolerance,
        )?;
        if warm.converged && warm.value <= shift {
            return Ok((warm, false));
        }
        margin *= 4.0;
    }
    let cold = cold_start(template, alpha, s, previous, options)?;
    Ok((cold, true))
}

/// Lagrange extrapolation through up to three recent samples.
fn extrapolate(path: &[(f64, f64)], s: f64) -> f64 {
    let pts = &path[..path.len().min(3)];
    let mut acc = 0.0;
    for (i, &(si, ti)) in pts.iter().enumerate() {
        let mut w = 1.0;
        for (j, &(sj, _)) in pts.iter().enumerate() {
            if i != j {
                w *= (s - sj) / (si - sj);
            }
        }
        acc += w * ti;
    }
    acc
}

/// A priori bound `θ(s) ≤ s²/8 + |s| ‖J‖`.
pub fn theta_upper_bound(template: &DeformationTemplate, s: f64) -> f64 {
    s * s / 8.0 + s.abs() * template.jump().norm_bound()
}

/// Leading eigenpair without a warm start: iterate from the a priori bound
/// to a loose tolerance, then tighten the shift onto the certified estimate.
pub fn cold_start(
    template: &DeformationTemplate,
    alpha: f64,
    s: f64,
    start: &[C64],
    options: &EigenOptions,
) -> Result<LeadingEigen> {
    let shift = theta_upper_bound(template, s) + 0.05;
    let loose = 1e-6;
    let rough = inverse_iteration(template, alpha, s, shift, start, options.cold_iterations, loose)?;
    // only the residual matters here: a perturbed start can still fail the
    // positivity check at this accuracy, and the fine stage certifies anyway
    let settled = rough.residual <= loose * (1.0 + rough.value.abs() + s.abs());
    if !(settled && rough.value <= shift) {
        return Ok(LeadingEigen {
            converged: false,
            ..rough
        });
    }
    let tight = rough.value + 0.02;
    let fine = inverse_iteration(
        template,
        alpha,
        s,
        tight,
        &rough.vector,
        options.cold_iterations,
        options.tolerance,
    )?;
    Ok(LeadingEigen {
        converged: fine.converged && fine.value <= tight,
        ..fine
    })
}

/// vec(I)/sqrt(d), optionally perturbed by seeded noise. The identity has
/// positive overlap with every positive semidefinite eigenvector.
pub fn start_vector(dim: usize, seed: Option<u64>) -> Vec<C64> {
    let mut v = vec![ZERO; dim * dim];
    for a in 0..dim {
        v[a * dim + a] = C64::new(1.0, 0.0);
    }
    if let Some(seed) = seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for x in v.iter_mut() {
            *x += C64::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
        }
    }
    normalize(&mut v);
    v
}

fn normalize(v: &mut [C64]) -> f64 {
    let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

/// Fixed-shift inverse iteration on `L_s − shift`. Converged means residual
/// below tolerance, real eigenvalue, and a positive semidefinite eigenvector.
pub fn inverse_iteration(
    template: &DeformationTemplate,
    alpha: f64,
    s: f64,
    shift: f64,
    start: &[C64],
    iterations: usize,
    tolerance: f64,
) -> Result<LeadingEigen> {
    let m = template.shifted(alpha, s, shift)?;
    let lu = template.pattern().lu(&m)?;
    let mut x = start.to_vec();
    if normalize(&mut x) == 0.0 {
        x = start_vector(template.dim(), None);
    }
    let mut lambda = C64::new(shift, 0.0);
    let mut residual = f64::INFINITY;
    for _ in 0..iterations {
        let mut y = solve(&lu, &x);
        let nu: C64 = x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
        if normalize(&mut y) == 0.0 || !nu.re.is_finite() || nu.norm() == 0.0 {
            return Err(Error::NonConvergence(format!("inverse iteration broke down at s = {s}")));
        }
        lambda = shift + 1.0 / nu;
        x = y;
        // residual of (L_s − λ) x = (M − (λ − shift)) x
        let mx = matvec(m.as_ref(), &x);
        let mu = lambda - shift;
        residual = mx
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - mu * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual <= tolerance * (1.0 + lambda.norm() + s.abs()) {
            break;
        }
    }
    let positive = fix_phase(&mut x, template.dim());
    let converged = residual <= tolerance * (1.0 + lambda.norm() + s.abs())
        && lambda.im.abs() <= 1e-8 * (1.0 + lambda.re.abs())
        && positive;
    Ok(LeadingEigen {
        value: lambda.re,
        vector: x,
        residual,
        converged,
    })
}

/// Rotates the eigenvector so its trace is real positive and reports whether
/// it is (numerically) a positive semidefinite operator.
fn fix_phase(x: &mut [C64], d: usize) -> bool {
    let trace: C64 = (0..d).map(|a| x[a * d + a]).sum();
    if trace.norm() < 1e-12 {
        return false;
    }
    let phase = trace.conj() / trace.norm();
    for v in x.iter_mut() {
        *v *= phase;
    }
    let m = Mat::from_fn(d, d, |a, b| x[a * d + b]);
    let herm = (0..d)
        .flat_map(|a| (0..d).map(move |b| (a, b)))
        .map(|(a, b)| (m[(a, b)] - m[(b, a)].conj()).norm())
        .fold(0.0, f64::max);
    let tr = trace.norm();
    if herm > 1e-6 * tr {
        return false;
    }
    let h = Mat::from_fn(d, d, |a, b| 0.5 * (m[(a, b)] + m[(b, a)].conj()));
    match hermitian_eigenvalues(&h) {
        Ok(ev) => ev.iter().all(|&e| e >= -1e-6 * tr),
        Err(_) => false,
    }
}
