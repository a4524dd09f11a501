//! HE11 guided mode of a step-index, vacuum-clad nanofiber and the
//! single-atom emission rates into its two propagation directions.
//!
//! Field profiles follow the quasi-circular HE11 basis: the mode with
//! direction `f = ±1` and rotation `l = ±1` has the electric field
//! `(e_r r̂ + l e_φ φ̂ + f e_z ẑ) exp(i f β z + i l φ)`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use puruspe::bessel::{besselik, besseljy};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Dipole, GAMMA, WAVENUMBER};

/// First zero of J0; the HE11 transverse parameter `u = h a` stays below it.
const J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;
const SCAN_POINTS: usize = 2000;
const ROOT_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberSpec {
    /// Fiber radius in units of λ.
    pub radius: f64,
    /// Core refractive index; the cladding is vacuum.
    pub refractive_index: f64,
}

impl FiberSpec {
    pub fn new(radius: f64, refractive_index: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(invalid("radius", format!("must be positive, got {radius}")));
        }
        if !(refractive_index.is_finite() && refractive_index > 1.0) {
            return Err(invalid(
                "refractive_index",
                format!("must exceed 1, got {refractive_index}"),
            ));
        }
        Ok(Self {
            radius,
            refractive_index,
        })
    }

    /// Normalized frequency `V = k a sqrt(n² - 1)`.
    pub fn v_number(&self) -> f64 {
        WAVENUMBER * self.radius * (self.refractive_index.powi(2) - 1.0).sqrt()
    }
}

/// Cylindrical components of the forward (`f = l = +1`) mode profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileComponents {
    pub e_r: C64,
    pub e_phi: C64,
    pub e_z: C64,
}

/// Solved HE11 mode at the reference wavenumber `k = 2π`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberMode {
    spec: FiberSpec,
    /// Propagation constant β_f in units of 1/λ.
    pub beta: f64,
    /// Group index `dβ_f/dω` (c = 1), from a central difference in k.
    pub beta_prime: f64,
    h: f64,
    q: f64,
    s: f64,
    amplitude: f64,
}

impl FiberMode {
    pub fn spec(&self) -> &FiberSpec {
        &self.spec
    }

    /// Effective index β_f / k.
    pub fn effective_index(&self) -> f64 {
        self.beta / WAVENUMBER
    }

    /// Guided wavelength λ_f = 2π / β_f.
    pub fn guided_wavelength(&self) -> f64 {
        2.0 * PI / self.beta
    }

    /// Field profile of the forward mode at radius `r`, normalized so that
    /// `∫ n² |e|² dA = 1`.
    pub fn profile(&self, r: f64) -> ProfileComponents {
        let a = self.spec.radius;
        let (h, q, s, beta) = (self.h, self.q, self.s, self.beta);
        let amp = self.amplitude;
        if r < a {
            let hr = h * r;
            let (j0, j1, j2) = (bessel_j(0, hr), bessel_j(1, hr), bessel_j(2, hr));
            ProfileComponents {
                e_r: C64::new(0.0, amp * beta / (2.0 * h) * ((1.0 - s) * j0 - (1.0 + s) * j2)),
                e_phi: C64::new(-amp * beta / (2.0 * h) * ((1.0 - s) * j0 + (1.0 + s) * j2), 0.0),
                e_z: C64::new(amp * j1, 0.0),
            }
        } else {
            let (w, qr) = (q * a, q * r);
            let j1a = bessel_j(1, h * a);
            // K_n(qr) / K_1(qa) via exponentially scaled functions
            let decay = (-(qr - w)).exp();
            let k1a = bessel_k_scaled(1, w);
            let ratio = |n: u32| bessel_k_scaled(n, qr) / k1a * decay;
            let (k0, k1, k2) = (ratio(0), ratio(1), ratio(2));
            let c = amp * j1a;
            ProfileComponents {
                e_r: C64::new(0.0, c * beta / (2.0 * q) * ((1.0 - s) * k0 + (1.0 + s) * k2)),
                e_phi: C64::new(-c * beta / (2.0 * q) * ((1.0 - s) * k0 - (1.0 + s) * k2), 0.0),
                e_z: C64::new(c * k1, 0.0),
            }
        }
    }

    /// Cartesian electric field of the mode `(f, l)` at `(r, φ)` (z-phase dropped).
    pub fn field(&self, direction: i8, rotation: i8, r: f64, azimuth: f64) -> [C64; 3] {
        let p = self.profile(r);
        let (f, l) = (direction as f64, rotation as f64);
        let phase = C64::from_polar(1.0, l * azimuth);
        let (c, sn) = (azimuth.cos(), azimuth.sin());
        let er = p.e_r;
        let ephi = p.e_phi * l;
        [
            (er * c - ephi * sn) * phase,
            (er * sn + ephi * c) * phase,
            p.e_z * f * phase,
        ]
    }
}

/// Characteristic function of the HE modes. Its zeros in `(k, k n_f)` are
/// the HE propagation constants; the one with the largest β is HE11.
pub fn characteristic(spec: &FiberSpec, beta: f64) -> f64 {
    characteristic_at(spec, WAVENUMBER, beta)
}

fn characteristic_at(spec: &FiberSpec, k: f64, beta: f64) -> f64 {
    let n1 = spec.refractive_index;
    let a = spec.radius;
    let h = (k * k * n1 * n1 - beta * beta).sqrt();
    let q = (beta * beta - k * k).sqrt();
    let (u, w) = (h * a, q * a);
    let (j0, j1) = (bessel_j(0, u), bessel_j(1, u));
    let kr = k_log_derivative(w);
    let n1sq = n1 * n1;
    let inv = 1.0 / (u * u) + 1.0 / (w * w);
    let root = (((n1sq - 1.0) / (2.0 * n1sq)).powi(2) * kr * kr + (beta / (n1 * k)).powi(2) * inv * inv).sqrt();
    j0 / (u * j1) + (n1sq + 1.0) / (2.0 * n1sq) * kr - 1.0 / (u * u) + root
}

/// `K1'(w) / (w K1(w))`.
fn k_log_derivative(w: f64) -> f64 {
    let ratio = bessel_k_scaled(0, w) / bessel_k_scaled(1, w);
    (-ratio - 1.0 / w) / w
}

/// Samples of the characteristic function on a uniform β grid over `(k, k n_f)`.
pub fn dispersion_scan(spec: &FiberSpec, points: usize) -> Vec<(f64, f64)> {
    let k = WAVENUMBER;
    let hi = k * spec.refractive_index;
    (0..points)
        .map(|i| {
            let beta = k + (hi - k) * (i as f64 + 0.5) / points as f64;
            (beta / k, characteristic(spec, beta))
        })
        .collect()
}

/// Solves the HE11 dispersion relation and returns the normalized mode.
pub fn solve_he11(spec: &FiberSpec) -> Result<FiberMode> {
    let k = WAVENUMBER;
    let beta = solve_beta_at(spec, k)?;
    let dk = 1e-5 * k;
    let beta_prime = match (solve_beta_at(spec, k + dk), solve_beta_at(spec, k - dk)) {
        (Ok(up), Ok(down)) => (up - down) / (2.0 * dk),
        _ => f64::NAN,
    };
    let n1 = spec.refractive_index;
    let a = spec.radius;
    let h = (k * k * n1 * n1 - beta * beta).sqrt();
    let q = (beta * beta - k * k).sqrt();
    let (u, w) = (h * a, q * a);
    let jr = (bessel_j(0, u) - bessel_j(1, u) / u) / (u * bessel_j(1, u));
    let s = (1.0 / (u * u) + 1.0 / (w * w)) / (jr + k_log_derivative(w));
    let mut mode = FiberMode {
        spec: *spec,
        beta,
        beta_prime,
        h,
        q,
        s,
        amplitude: 1.0,
    };
    mode.amplitude = 1.0 / mode_power(&mode).sqrt();
    Ok(mode)
}

fn solve_beta_at(spec: &FiberSpec, k: f64) -> Result<f64> {
    let n1 = spec.refractive_index;
    let a = spec.radius;
    let v = k * a * (n1 * n1 - 1.0).sqrt();
    let u_max = v.min(J0_FIRST_ZERO);
    let beta_of = |u: f64| (k * k * n1 * n1 - (u / a).powi(2)).sqrt();
    let f = |beta: f64| characteristic_at(spec, k, beta);

    // Scan in the transverse parameter so thick fibers, whose HE11 root
    // hugs k n_f, are bracketed as reliably as thin ones. Thin fibers put
    // the root exponentially close to cutoff, hence the logarithmic tail in w.
    let mut samples: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| beta_of(u_max * (i as f64 + 0.5) / SCAN_POINTS as f64))
        .collect();
    if u_max == v {
        let w_last = a * (samples[SCAN_POINTS - 1].powi(2) - k * k).max(0.0).sqrt();
        let w_floor = 1e-12 * v;
        if w_last > w_floor {
            let ratio = (w_floor / w_last).powf(1.0 / 400.0);
            samples.extend((1..=400).map(|i| (k * k + (w_last * ratio.powi(i) / a).powi(2)).sqrt()));
        }
    }
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    for beta in samples {
        if !(beta > k) {
            break;
        }
        let value = f(beta);
        if !value.is_finite() {
            prev = None;
            continue;
        }
        if let Some((b0, f0)) = prev {
            if f0.signum() != value.signum() {
                bracket = Some((beta, value, b0, f0));
                break;
            }
        }
        prev = Some((beta, value));
    }
    let (mut lo, mut f_lo, mut hi, _) = bracket.ok_or(Error::NoGuidedMode {
        radius: spec.radius,
        index: n1,
    })?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= ROOT_RTOL * mid {
            let root = 0.5 * (lo + hi);
            return if root > k && root <= k * n1 {
                Ok(root)
            } else {
                Err(Error::NoGuidedMode {
                    radius: spec.radius,
                    index: n1,
                })
            };
        }
        let fm = f(mid);
        if !fm.is_finite() {
            return Err(Error::NonConvergence(format!("characteristic function not finite at β = {mid}")));
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence("bisection exceeded 200 iterations".into()))
}

/// `2π ∫ n(r)² (|e_r|² + |e_φ|² + |e_z|²) r dr` for the current amplitude.
fn mode_power(mode: &FiberMode) -> f64 {
    let a = mode.spec.radius;
    let n2 = mode.spec.refractive_index.powi(2);
    let density = |r: f64| {
        let p = mode.profile(r);
        (p.e_r.norm_sqr() + p.e_phi.norm_sqr() + p.e_z.norm_sqr()) * r
    };
    let inside = simpson(density, 0.0, a, 2000);
    let outside = simpson(density, a, a + 40.0 / mode.q, 8000);
    2.0 * PI * (n2 * inside + outside)
}

fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

/// Single-atom emission rates into the right (+z) and left (−z) guided modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidedRates {
    pub right: f64,
    pub left: f64,
}

impl GuidedRates {
    pub fn total(&self) -> f64 {
        self.right + self.left
    }

    /// Single-atom beta factor `(Γ_R + Γ_L) / (Γ_R + Γ_L + γ)`.
    pub fn beta_factor(&self) -> f64 {
        self.total() / (self.total() + GAMMA)
    }

    pub fn chirality(&self) -> f64 {
        (self.right - self.left) / self.total()
    }
}

/// How the absolute scale of the guided coupling is fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateCalibration {
    /// Scale the guided rates so the single-atom beta factor equals `beta`.
    /// The right/left split comes from the mode profile unless `chirality`
    /// is given.
    Beta { beta: f64, chirality: Option<f64> },
    /// Use the normalized profile and the group index directly.
    FirstPrinciples,
}

impl Default for RateCalibration {
    fn default() -> Self {
        RateCalibration::Beta {
            beta: 0.15,
            chirality: None,
        }
    }
}

/// `Σ_l |e^(f,l)* · d|²` at `(r, φ)`.
fn directional_weight(mode: &FiberMode, dipole: &Dipole, direction: i8, r: f64, azimuth: f64) -> f64 {
    [1i8, -1]
        .iter()
        .map(|&l| {
            let e = mode.field(direction, l, r, azimuth);
            e.iter()
                .zip(dipole.0.iter())
                .map(|(e, d)| e.conj() * d)
                .sum::<C64>()
                .norm_sqr()
        })
        .sum()
}

/// Emission rates of a single atom at `(r, φ)` into the two guided directions.
pub fn single_atom_guided_rates(
    mode: &FiberMode,
    dipole: &Dipole,
    r: f64,
    azimuth: f64,
    calibration: RateCalibration,
) -> Result<GuidedRates> {
    let radius = mode.spec.radius;
    if !(r >= radius) {
        return Err(Error::InvalidPosition { r, radius });
    }
    let right = directional_weight(mode, dipole, 1, r, azimuth);
    let left = directional_weight(mode, dipole, -1, r, azimuth);
    match calibration {
        RateCalibration::Beta { beta, chirality } => {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(invalid("beta", format!("target must lie in (0, 1), got {beta}")));
            }
            let total = beta * GAMMA / (1.0 - beta);
            let chi = match chirality {
                Some(c) if (-1.0..=1.0).contains(&c) => c,
                Some(c) => return Err(invalid("chirality", format!("target must lie in [-1, 1], got {c}"))),
                None => {
                    if right + left <= 0.0 {
                        return Err(invalid("dipole", "dipole does not couple to the guided mode"));
                    }
                    (right - left) / (right + left)
                }
            };
            Ok(GuidedRates {
                right: 0.5 * total * (1.0 + chi),
                left: 0.5 * total * (1.0 - chi),
            })
        }
        RateCalibration::FirstPrinciples => {
            if !mode.beta_prime.is_finite() {
                return Err(Error::NonConvergence("group index unavailable for this fiber".into()));
            }
            // Γ_f/γ = 3π c³ β' / (2 ω²) Σ_l |d·e|², with ω = 2π and c = 1.
            let scale = 3.0 * mode.beta_prime / (8.0 * PI);
            Ok(GuidedRates {
                right: scale * right,
                left: scale * left,
            })
        }
    }
}

fn bessel_j(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    besseljy(n as f64, x).0
}

/// `exp(x) K_n(x)`; switches to the large-argument expansion where the
/// unscaled recurrence would under- or overflow.
fn bessel_k_scaled(n: u32, x: f64) -> f64 {
    if x <= 400.0 {
        return besselik(n as f64, x).1 * x.exp();
    }
    let mu = 4.0 * (n as f64).powi(2);
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..30 {
        term *= (mu - ((2 * j - 1) as f64).powi(2)) / (j as f64 * 8.0 * x);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    (PI / (2.0 * x)).sqrt() * sum
}
