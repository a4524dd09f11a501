//! Counting-field deformation of the vectorized generator.

use faer::sparse::SparseColMat;
use num_complex::Complex64 as C64;

use crate::couplings::CouplingKernels;
use crate::error::{Error, Result};
use crate::fiber::FiberMode;
use crate::geometry::AtomChain;
use crate::lindblad::{Liouvillian, Register};
use crate::sparse::Pattern;

/// Collective jump operator `J = Σ_j c_j σ_j` on the register.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperator {
    dim: usize,
    coefficients: Vec<C64>,
    entries: Vec<(usize, usize, C64)>,
}

impl JumpOperator {
    pub fn new(register: Register, coefficients: Vec<C64>) -> Result<Self> {
        if coefficients.len() != register.atoms() {
            return Err(Error::DimensionMismatch {
                expected: register.atoms(),
                got: coefficients.len(),
            });
        }
        let mut entries = Vec::new();
        for (i, &c) in coefficients.iter().enumerate() {
            entries.extend(register.lowering(i).map(|(r, col)| (r, col, c)));
        }
        Ok(Self {
            dim: register.dim(),
            coefficients,
            entries,
        })
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    /// Nonzero entries `(row, col, J_row,col)`.
    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    /// Upper bound on the operator norm, `Σ_j |c_j|`.
    pub fn norm_bound(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm()).sum()
    }

    /// `Tr(J ρ)` for a row-major `d × d` density matrix.
    pub fn expectation(&self, rho: &faer::Mat<C64>) -> C64 {
        self.entries.iter().map(|&(r, c, v)| v * rho[(c, r)]).sum()
    }
}

/// Right-moving guided-mode jump operator
/// `J_R = Σ_j sqrt(Γ^R_jj) exp(−iβ z_j) σ_j`.
pub fn right_jump_operator(kernels: &CouplingKernels, chain: &AtomChain, mode: &FiberMode) -> Result<JumpOperator> {
    let register = Register::new(chain.len())?;
    if kernels.len() != chain.len() {
        return Err(Error::DimensionMismatch {
            expected: chain.len(),
            got: kernels.len(),
        });
    }
    let coefficients = chain
        .positions()
        .iter()
        .enumerate()
        .map(|(j, &z)| C64::from_polar(kernels.g_r[(j, j)].re.max(0.0).sqrt(), -mode.beta * z))
        .collect();
    JumpOperator::new(register, coefficients)
}

/// Shared sparse template for the generators
/// `L_s = L − (s/2)(e^{−iα} J⊗I + e^{iα} I⊗conj J) + (s²/8) I`.
///
/// The pattern (and hence its symbolic LU) is the same for every `(α, s)`.
#[derive(Debug)]
pub struct DeformationTemplate {
    base: SparseColMat<usize, C64>,
    pattern: Pattern,
    base_values: Vec<C64>,
    left: Vec<C64>,
    right: Vec<C64>,
    identity: usize,
    dim: usize,
    jump: JumpOperator,
}

impl DeformationTemplate {
    pub fn new(l: &Liouvillian, jump: &JumpOperator) -> Result<Self> {
        let d = l.dim();
        if jump.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: jump.dim(),
            });
        }
        let mut rows = Vec::new();
        let mut cols = Vec::new();
        let mut base_values = Vec::new();
        for (r, c, v) in l.entries() {
            rows.push(r);
            cols.push(c);
            base_values.push(v);
        }
        // J ρ: (J ⊗ I)[(a,b),(c,b)] = J_ac
        let mut left = Vec::new();
        for &(a, c, v) in jump.entries() {
            for b in 0..d {
                rows.push(a * d + b);
                cols.push(c * d + b);
                left.push(v);
            }
        }
        // ρ J†: (I ⊗ conj J)[(a,b),(a,c)] = conj(J_bc)
        let mut right = Vec::new();
        for a in 0..d {
            for &(b, c, v) in jump.entries() {
                rows.push(a * d + b);
                cols.push(a * d + c);
                right.push(v.conj());
            }
        }
        for k in 0..d * d {
            rows.push(k);
            cols.push(k);
        }
        let pattern = Pattern::new(d * d, &rows, &cols)?;
        Ok(Self {
            base: l.matrix().clone(),
            pattern,
            base_values,
            left,
            right,
            identity: d * d,
            dim: d,
            jump: jump.clone(),
        })
    }

    /// Hilbert-space dimension `d`; the generator acts on `d²`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jump(&self) -> &JumpOperator {
        &self.jump
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    pub fn base(&self) -> &SparseColMat<usize, C64> {
        &self.base
    }

    /// Entry values of `L_s − shift·I` in pattern order.
    pub fn values(&self, alpha: f64, s: f64, shift: f64) -> Vec<C64> {
        let cl = C64::from_polar(-0.5 * s, -alpha);
        let cr = C64::from_polar(-0.5 * s, alpha);
        let diag = C64::new(s * s / 8.0 - shift, 0.0);
        let mut v = Vec::with_capacity(self.base_values.len() + self.left.len() + self.right.len() + self.identity);
        v.extend_from_slice(&self.base_values);
        v.extend(self.left.iter().map(|&x| cl * x));
        v.extend(self.right.iter().map(|&x| cr * x));
        v.extend(std::iter::repeat(diag).take(self.identity));
        v
    }

    /// `L_s − shift·I` assembled on the shared pattern.
    pub fn shifted(&self, alpha: f64, s: f64, shift: f64) -> Result<SparseColMat<usize, C64>> {
        self.pattern.assemble(&self.values(alpha, s, shift))
    }

    pub fn generator(&self, alpha: f64, s: f64) -> Result<DeformedGenerator> {
        let matrix = if s == 0.0 {
            self.base.clone()
        } else {
            self.shifted(alpha, s, 0.0)?
        };
        Ok(DeformedGenerator { alpha, s, matrix })
    }
}

/// Deformed generator at one `(α, s)`.
#[derive(Debug, Clone)]
pub struct DeformedGenerator {
    pub alpha: f64,
    pub s: f64,
    pub matrix: SparseColMat<usize, C64>,
}

/// Deformed generator for a single `(α, s)`; `s = 0` returns `L` itself.
pub fn deform(l: &Liouvillian, jump: &JumpOperator, alpha: f64, s: f64) -> Result<DeformedGenerator> {
    if s == 0.0 {
        return Ok(DeformedGenerator {
            alpha,
            s,
            matrix: l.matrix().clone(),
        });
    }
    DeformationTemplate::new(l, jump)?.generator(alpha, s)
}
