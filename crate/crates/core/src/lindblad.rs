//! Full master equation of the driven chain on the 2^N-dimensional register.
//!
//! Basis state `s` has atom `i` excited iff bit `i` of `s` is set. Density
//! operators are vectorized row-major, `vec(ρ)[a·d + b] = ρ_ab`, so that
//! `vec(A ρ B) = (A ⊗ Bᵀ) vec(ρ)`.

use std::sync::Arc;

use faer::sparse::SparseColMat;
use faer::Mat;
use num_complex::Complex64 as C64;

use crate::couplings::CouplingKernels;
use crate::error::{Error, Result};
use crate::geometry::{drive_phases, AtomChain, DriveParams};
use crate::linalg::hermitian_eigenvalues;
use crate::sparse::{left_matvec, matvec, norm_inf, solve, to_dense, Pattern};
use crate::weak_drive::ChannelRates;

/// Hard cap on the register size for Liouvillian construction.
pub const MAX_ATOMS: usize = 12;
/// Largest register used by default workflows.
pub const DEFAULT_MAX_ATOMS: usize = 7;
/// Stationary residual tolerance `‖L vec(ρ)‖_∞`.
pub const RESIDUAL_TOL: f64 = 1e-9;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Register of `atoms` two-level systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Register {
    atoms: usize,
}

impl Register {
    pub fn new(atoms: usize) -> Result<Self> {
        if atoms == 0 {
            return Err(crate::error::invalid("atoms", "register needs at least one atom"));
        }
        if atoms > MAX_ATOMS {
            return Err(Error::DimensionCap { atoms, cap: MAX_ATOMS });
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn dim(&self) -> usize {
        1 << self.atoms
    }

    /// Nonzero entries `(row, col)` of the lowering operator σ_i (all equal to 1).
    pub fn lowering(&self, i: usize) -> impl Iterator<Item = (usize, usize)> {
        let bit = 1 << i;
        (0..self.dim()).filter(move |s| s & bit == 0).map(move |s| (s, s | bit))
    }

    /// Dense σ_i.
    pub fn lowering_dense(&self, i: usize) -> Mat<C64> {
        let mut m = Mat::zeros(self.dim(), self.dim());
        for (r, c) in self.lowering(i) {
            m[(r, c)] = C64::new(1.0, 0.0);
        }
        m
    }
}

/// Sparse rows of the non-Hermitian effective Hamiltonian
/// `H_eff = H_l + H_int − (i/2) Σ_ij Γ_ij σ_j† σ_i`.
fn effective_hamiltonian(
    register: &Register,
    kernels: &CouplingKernels,
    phases: &[C64],
    drive: &DriveParams,
) -> Vec<Vec<(usize, C64)>> {
    let n = register.atoms();
    let d = register.dim();
    let hop = kernels.hopping();
    let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); d];
    for (s, row) in rows.iter_mut().enumerate() {
        let mut diag = ZERO;
        for a in 0..n {
            let bit_a = 1 << a;
            if s & bit_a != 0 {
                diag += hop[(a, a)] - drive.detuning;
                // Ω conj(u_a) σ_a† maps s − a to s
                row.push((s ^ bit_a, C64::new(drive.rabi, 0.0) * phases[a].conj()));
            } else {
                // Ω u_a σ_a maps s + a to s
                row.push((s | bit_a, C64::new(drive.rabi, 0.0) * phases[a]));
            }
            for b in 0..n {
                // K_ab σ_a† σ_b: from s' (b set, a clear) to s = s' − b + a
                let bit_b = 1 << b;
                if a != b && s & bit_a != 0 && s & bit_b == 0 {
                    let from = (s ^ bit_a) | bit_b;
                    row.push((from, hop[(a, b)]));
                }
            }
        }
        row.push((s, diag));
    }
    rows
}

/// Vectorized master-equation generator.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    register: Register,
    pub drive: DriveParams,
    rows: Arc<Vec<usize>>,
    cols: Arc<Vec<usize>>,
    values: Vec<C64>,
    matrix: SparseColMat<usize, C64>,
}

impl Liouvillian {
    pub fn register(&self) -> Register {
        self.register
    }

    pub fn atoms(&self) -> usize {
        self.register.atoms()
    }

    /// Hilbert-space dimension 2^N.
    pub fn dim(&self) -> usize {
        self.register.dim()
    }

    pub fn matrix(&self) -> &SparseColMat<usize, C64> {
        &self.matrix
    }

    /// Entry list `(row, col, value)` the generator was assembled from.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.rows
            .iter()
            .zip(self.cols.iter())
            .zip(&self.values)
            .map(|((&r, &c), &v)| (r, c, v))
    }

    pub fn dense(&self) -> Mat<C64> {
        to_dense(self.matrix.as_ref())
    }

    /// `L vec(ρ)`.
    pub fn apply(&self, rho: &[C64]) -> Vec<C64> {
        matvec(self.matrix.as_ref(), rho)
    }

    /// `‖vec(I)† L‖_∞`, zero for a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim();
        let mut id = vec![ZERO; d * d];
        for a in 0..d {
            id[a * d + a] = C64::new(1.0, 0.0);
        }
        norm_inf(&left_matvec(self.matrix.as_ref(), &id))
    }
}

/// Builds `L[ρ] = −i(H_eff ρ − ρ H_eff†) + Σ_ij Γ_ij σ_i ρ σ_j†`.
pub fn build_liouvillian(kernels: &CouplingKernels, chain: &AtomChain, drive: &DriveParams) -> Result<Liouvillian> {
    let register = Register::new(chain.len())?;
    if kernels.len() != chain.len() {
        return Err(Error::DimensionMismatch {
            expected: kernels.len(),
            got: chain.len(),
        });
    }
    let n = register.atoms();
    let d = register.dim();
    let phases = drive_phases(chain, drive);
    let h = effective_hamiltonian(&register, kernels, &phases, drive);
    let g = kernels.g();

    let per_row = 2 * h.iter().map(Vec::len).max().unwrap_or(0) + n * n;
    let mut rows = Vec::with_capacity(d * d * per_row);
    let mut cols = Vec::with_capacity(d * d * per_row);
    let mut values = Vec::with_capacity(d * d * per_row);
    let minus_i = C64::new(0.0, -1.0);
    for a in 0..d {
        for b in 0..d {
            let row = a * d + b;
            for &(c, v) in &h[a] {
                rows.push(row);
                cols.push(c * d + b);
                values.push(minus_i * v);
            }
            // ρ H_eff†: (ρ H†)_ab = Σ_c ρ_ac conj(H_bc)
            for &(c, v) in &h[b] {
                rows.push(row);
                cols.push(a * d + c);
                values.push(-minus_i * v.conj());
            }
            for i in 0..n {
                if a & (1 << i) != 0 {
                    continue;
                }
                for j in 0..n {
                    if b & (1 << j) != 0 {
                        continue;
                    }
                    rows.push(row);
                    cols.push((a | (1 << i)) * d + (b | (1 << j)));
                    values.push(g[(i, j)]);
                }
            }
        }
    }
    let pattern = Pattern::new(d * d, &rows, &cols)?;
    let matrix = pattern.assemble(&values)?;
    Ok(Liouvillian {
        register,
        drive: *drive,
        rows: Arc::new(rows),
        cols: Arc::new(cols),
        values,
        matrix,
    })
}

/// Stationary state and its emission observables.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub atoms: usize,
    /// Density operator, row-major `dim × dim`.
    pub rho: Mat<C64>,
    pub residual: f64,
}

impl SteadyState {
    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|a| self.rho[(a, a)]).sum()
    }

    /// `⟨σ_j† σ_i⟩ = Tr(σ_j† σ_i ρ)`.
    pub fn correlation(&self, i: usize, j: usize) -> C64 {
        let (bi, bj) = (1usize << i, 1usize << j);
        let mut acc = ZERO;
        for t in 0..self.dim() {
            if t & bi == 0 {
                continue;
            }
            let lowered = t ^ bi;
            if lowered & bj != 0 {
                continue;
            }
            // σ_j† σ_i |t⟩ = |s⟩, so Tr(σ_j†σ_i ρ) = Σ_t ⟨t|ρ|s⟩
            acc += self.rho[(t, lowered | bj)];
        }
        acc
    }

    /// Excited-state population of atom `i`.
    pub fn population(&self, i: usize) -> f64 {
        self.correlation(i, i).re
    }

    /// Reduced 2×2 state of atom `i` in the basis (|g⟩, |e⟩).
    pub fn reduced(&self, i: usize) -> [[C64; 2]; 2] {
        let bit = 1usize << i;
        let mut r = [[ZERO; 2]; 2];
        for s in 0..self.dim() {
            if s & bit != 0 {
                continue;
            }
            let e = s | bit;
            r[0][0] += self.rho[(s, s)];
            r[0][1] += self.rho[(s, e)];
            r[1][0] += self.rho[(e, s)];
            r[1][1] += self.rho[(e, e)];
        }
        r
    }

    /// `Σ_ij Γ_ij ⟨σ_j† σ_i⟩` for one channel matrix.
    pub fn channel_rate(&self, g: &Mat<C64>) -> f64 {
        let n = self.atoms;
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += g[(i, j)] * self.correlation(i, j);
            }
        }
        acc.re
    }

    pub fn emission(&self, kernels: &CouplingKernels) -> ChannelRates {
        ChannelRates {
            right: self.channel_rate(&kernels.g_r),
            left: self.channel_rate(&kernels.g_l),
            unguided: self.channel_rate(&kernels.g_u),
        }
    }

    /// Smallest eigenvalue of ρ.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(hermitian_eigenvalues(&self.rho)?.into_iter().fold(f64::INFINITY, f64::min))
    }
}

/// Trace distance `½‖a − b‖₁` between two Hermitian matrices.
pub fn trace_distance(a: &Mat<C64>, b: &Mat<C64>) -> Result<f64> {
    let diff = a - b;
    Ok(0.5 * hermitian_eigenvalues(&diff)?.iter().map(|x| x.abs()).sum::<f64>())
}

fn finish(l: &Liouvillian, x: Vec<C64>) -> Result<SteadyState> {
    let d = l.dim();
    let mut rho = Mat::from_fn(d, d, |a, b| x[a * d + b]);
    let hermitized = Mat::from_fn(d, d, |a, b| 0.5 * (rho[(a, b)] + rho[(b, a)].conj()));
    rho = hermitized;
    let trace: C64 = (0..d).map(|a| rho[(a, a)]).sum();
    if !(trace.norm() > 0.0 && trace.re.is_finite()) {
        return Err(Error::NonConvergence("stationary vector has zero trace".into()));
    }
    let rho = Mat::from_fn(d, d, |a, b| rho[(a, b)] / trace.re);
    let vec: Vec<C64> = (0..d * d).map(|k| rho[(k / d, k % d)]).collect();
    let residual = norm_inf(&l.apply(&vec));
    Ok(SteadyState {
        atoms: l.atoms(),
        rho,
        residual,
    })
}

/// Registers of at least this size are solved by GMRES before trying LU,
/// whose fill-in makes the factorization essentially dense there.
pub const ITERATIVE_FROM_ATOMS: usize = 6;

/// Stationary state by sparse LU with the first row replaced by the trace
/// constraint (GMRES on the same system for large registers), falling back
/// to shifted inverse iteration.
pub fn steady_state(l: &Liouvillian) -> Result<SteadyState> {
    if l.atoms() >= ITERATIVE_FROM_ATOMS {
        match gmres_solve(l).and_then(|x| finish(l, x)) {
            Ok(ss) if ss.residual < RESIDUAL_TOL => return Ok(ss),
            Ok(ss) => log::warn!("GMRES stationary residual {:e}, retrying with LU", ss.residual),
            Err(e) => log::warn!("GMRES failed ({e}), retrying with LU"),
        }
    }
    match trace_row_solve(l).and_then(|x| finish(l, x)) {
        Ok(ss) if ss.residual < RESIDUAL_TOL => Ok(ss),
        first => {
            let fallback = shift_invert_solve(l).and_then(|x| finish(l, x))?;
            if fallback.residual < RESIDUAL_TOL {
                Ok(fallback)
            } else {
                let residual = match first {
                    Ok(ss) => ss.residual.min(fallback.residual),
                    Err(_) => fallback.residual,
                };
                Err(Error::Residual(residual))
            }
        }
    }
}

fn trace_row_solve(l: &Liouvillian) -> Result<Vec<C64>> {
    let d = l.dim();
    let mut rows = Vec::with_capacity(l.values.len() + d);
    let mut cols = Vec::with_capacity(l.values.len() + d);
    let mut values = Vec::with_capacity(l.values.len() + d);
    for (r, c, v) in l.entries() {
        if r != 0 {
            rows.push(r);
            cols.push(c);
            values.push(v);
        }
    }
    for a in 0..d {
        rows.push(0);
        cols.push(a * d + a);
        values.push(C64::new(1.0, 0.0));
    }
    let pattern = Pattern::new(d * d, &rows, &cols)?;
    let m = pattern.assemble(&values)?;
    let lu = pattern.lu(&m)?;
    let mut rhs = vec![ZERO; d * d];
    rhs[0] = C64::new(1.0, 0.0);
    let x = solve(&lu, &rhs);
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::SingularSystem(0.0));
    }
    Ok(x)
}

/// Restarted, Jacobi-preconditioned GMRES on the trace-constrained system.
fn gmres_solve(l: &Liouvillian) -> Result<Vec<C64>> {
    const RESTART: usize = 120;
    const MAX_CYCLES: usize = 100;
    const RTOL: f64 = 1e-13;
    let d = l.dim();
    let m = d * d;
    // system matrix: L with row 0 replaced by the trace functional
    let apply = |x: &[C64]| -> Vec<C64> {
        let mut y = l.apply(x);
        y[0] = (0..d).map(|a| x[a * d + a]).sum();
        y
    };
    let mut diag = vec![ZERO; m];
    for (r, c, v) in l.entries() {
        if r == c && r != 0 {
            diag[r] += v;
        }
    }
    diag[0] = C64::new(1.0, 0.0);
    let precond: Vec<C64> = diag
        .iter()
        .map(|&v| if v.norm() > 1e-12 { 1.0 / v } else { C64::new(1.0, 0.0) })
        .collect();
    let dot = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
    let norm = |a: &[C64]| -> f64 { a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt() };

    let mut x = vec![ZERO; m];
    for a in 0..d {
        x[a * d + a] = C64::new(1.0 / d as f64, 0.0);
    }
    let mut b = vec![ZERO; m];
    b[0] = C64::new(1.0, 0.0);
    let b_norm = 1.0;
    for _ in 0..MAX_CYCLES {
        let ax = apply(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        if beta <= RTOL * b_norm {
            return Ok(x);
        }
        let mut basis: Vec<Vec<C64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![ZERO; RESTART]; RESTART + 1];
        let mut cs = vec![ZERO; RESTART];
        let mut sn = vec![ZERO; RESTART];
        let mut g = vec![ZERO; RESTART + 1];
        g[0] = C64::new(beta, 0.0);
        let mut steps = 0;
        for k in 0..RESTART {
            let z: Vec<C64> = basis[k].iter().zip(&precond).map(|(v, p)| v * p).collect();
            let mut w = apply(&z);
            for (i, q) in basis.iter().enumerate() {
                let hik = dot(q, &w);
                h[i][k] = hik;
                for (wj, qj) in w.iter_mut().zip(q) {
                    *wj -= hik * qj;
                }
            }
            let wn = norm(&w);
            h[k + 1][k] = C64::new(wn, 0.0);
            for i in 0..k {
                let t = cs[i].conj() * h[i][k] + sn[i].conj() * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = (h[k][k].norm_sqr() + h[k + 1][k].norm_sqr()).sqrt();
            if denom == 0.0 {
                steps = k;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = C64::new(denom, 0.0);
            h[k + 1][k] = ZERO;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k].conj() * g[k];
            steps = k + 1;
            if g[k + 1].norm() <= RTOL * b_norm || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![ZERO; steps];
        for i in (0..steps).rev() {
            let mut acc = g[i];
            for j in i + 1..steps {
                acc -= h[i][j] * y[j];
            }
            y[i] = acc / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, (qi, p)) in x.iter_mut().zip(basis[j].iter().zip(&precond)) {
                *xi += yj * qi * p;
            }
        }
        if x.iter().any(|v| !v.re.is_finite()) {
            return Err(Error::NonConvergence("GMRES diverged".into()));
        }
    }
    let r = apply(&x);
    let res = norm(&r.iter().zip(&b).map(|(a, b)| a - b).collect::<Vec<_>>());
    if res <= 1e-10 {
        Ok(x)
    } else {
        Err(Error::NonConvergence(format!("GMRES residual {res:e} after {MAX_CYCLES} restarts")))
    }
}

fn shift_invert_solve(l: &Liouvillian) -> Result<Vec<C64>> {
    let d = l.dim();
    let scale = l.values.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let shift = C64::new(1e-9 * scale, 0.0);
    let mut rows: Vec<usize> = l.rows.to_vec();
    let mut cols: Vec<usize> = l.cols.to_vec();
    let mut values = l.values.clone();
    for k in 0..d * d {
        rows.push(k);
        cols.push(k);
        values.push(-shift);
    }
    let pattern = Pattern::new(d * d, &rows, &cols)?;
    let m = pattern.assemble(&values)?;
    let lu = pattern.lu(&m)?;
    let mut x = vec![ZERO; d * d];
    for a in 0..d {
        x[a * d + a] = C64::new(1.0 / d as f64, 0.0);
    }
    for _ in 0..50 {
        let y = solve(&lu, &x);
        let norm = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NonConvergence("shift-invert iteration diverged".into()));
        }
        x = y.into_iter().map(|v| v / norm).collect();
        if norm_inf(&l.apply(&x)) < 1e-2 * RESIDUAL_TOL {
            break;
        }
    }
    Ok(x)
}

/// Dense null-space oracle: stationary state from the SVD of L. Fails with
/// `DegenerateSteadyState` when more than one singular value is negligible.
pub fn steady_state_dense(l: &Liouvillian) -> Result<SteadyState> {
    let dense = l.dense();
    let svd = dense.svd().map_err(|e| Error::Backend(format!("{e:?}")))?;
    let s = svd.S();
    let m = dense.nrows();
    let largest = s[0].re;
    let null = (0..m).filter(|&k| s[k].re <= 1e-10 * largest.max(1.0)).count();
    if null > 1 {
        return Err(Error::DegenerateSteadyState(null));
    }
    let v = svd.V();
    let x: Vec<C64> = (0..m).map(|k| v[(k, m - 1)]).collect();
    finish(l, x)
}
