//! Fixed-pattern sparse matrices with a reusable symbolic LU factorization.

use std::sync::OnceLock;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{Argsort, Pair, SparseColMat, SparseColMatRef, SymbolicSparseColMat};
use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Square sparsity pattern built once from a list of (row, col) entries.
/// Duplicate entries are summed on assembly.
#[derive(Debug)]
pub struct Pattern {
    n: usize,
    entries: usize,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    lu: OnceLock<SymbolicLu<usize>>,
}

impl Pattern {
    pub fn new(n: usize, rows: &[usize], cols: &[usize]) -> Result<Self> {
        let pairs: Vec<Pair<usize, usize>> = rows.iter().zip(cols).map(|(&row, &col)| Pair { row, col }).collect();
        let (symbolic, argsort) = SymbolicSparseColMat::try_new_from_indices(n, n, &pairs)
            .map_err(|e| Error::Backend(format!("sparse pattern: {e:?}")))?;
        Ok(Self {
            n,
            entries: pairs.len(),
            symbolic,
            argsort,
            lu: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Matrix with `values[k]` at the k-th entry passed to [`Pattern::new`].
    pub fn assemble(&self, values: &[C64]) -> Result<SparseColMat<usize, C64>> {
        if values.len() != self.entries {
            return Err(Error::DimensionMismatch {
                expected: self.entries,
                got: values.len(),
            });
        }
        SparseColMat::new_from_argsort(self.symbolic.clone(), &self.argsort, values)
            .map_err(|e| Error::Backend(format!("sparse assembly: {e:?}")))
    }

    /// Numeric LU of a matrix assembled from this pattern.
    pub fn lu(&self, m: &SparseColMat<usize, C64>) -> Result<Lu<usize, C64>> {
        let symbolic = match self.lu.get() {
            Some(s) => s.clone(),
            None => {
                let s = SymbolicLu::try_new(self.symbolic.as_ref())
                    .map_err(|e| Error::Backend(format!("symbolic LU: {e:?}")))?;
                self.lu.get_or_init(|| s).clone()
            }
        };
        Lu::try_new_with_symbolic(symbolic, m.as_ref()).map_err(|e| Error::Backend(format!("numeric LU: {e:?}")))
    }
}

pub fn solve(lu: &Lu<usize, C64>, rhs: &[C64]) -> Vec<C64> {
    let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    let x = lu.solve(&b);
    (0..rhs.len()).map(|i| x[(i, 0)]).collect()
}

/// `y = A x` for a column-major sparse matrix.
pub fn matvec(a: SparseColMatRef<'_, usize, C64>, x: &[C64]) -> Vec<C64> {
    let mut y = vec![C64::new(0.0, 0.0); a.nrows()];
    let col_ptr = a.symbolic().col_ptr();
    let row_idx = a.symbolic().row_idx();
    let val = a.val();
    for (j, &xj) in x.iter().enumerate() {
        if xj == C64::new(0.0, 0.0) {
            continue;
        }
        for k in col_ptr[j]..col_ptr[j + 1] {
            y[row_idx[k]] += val[k] * xj;
        }
    }
    y
}

/// `y = x† A` (returned as the conjugate-free row vector `y_j = Σ_i conj(x_i) A_ij`).
pub fn left_matvec(a: SparseColMatRef<'_, usize, C64>, x: &[C64]) -> Vec<C64> {
    let col_ptr = a.symbolic().col_ptr();
    let row_idx = a.symbolic().row_idx();
    let val = a.val();
    (0..a.ncols())
        .map(|j| {
            (col_ptr[j]..col_ptr[j + 1])
                .map(|k| x[row_idx[k]].conj() * val[k])
                .sum()
        })
        .collect()
}

pub fn to_dense(a: SparseColMatRef<'_, usize, C64>) -> Mat<C64> {
    let mut m = Mat::<C64>::zeros(a.nrows(), a.ncols());
    let col_ptr = a.symbolic().col_ptr();
    let row_idx = a.symbolic().row_idx();
    let val = a.val();
    for j in 0..a.ncols() {
        for k in col_ptr[j]..col_ptr[j + 1] {
            m[(row_idx[k], j)] += val[k];
        }
    }
    m
}

pub fn norm_inf(x: &[C64]) -> f64 {
    x.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_lu_is_reused() {
        let rows = [0, 1, 1, 0, 1];
        let cols = [0, 1, 1, 1, 0];
        let p = Pattern::new(2, &rows, &cols).unwrap();
        let v = |s: f64| -> Vec<C64> { [2.0, 1.0, s, 1.0, 0.5].iter().map(|&x| C64::new(x, 0.0)).collect() };
        for s in [1.0, 3.0] {
            let m = p.assemble(&v(s)).unwrap();
            let dense = to_dense(m.as_ref());
            assert_eq!(dense[(1, 1)], C64::new(1.0 + s, 0.0));
            let lu = p.lu(&m).unwrap();
            let b = [C64::new(1.0, 0.0), C64::new(2.0, 0.0)];
            let x = solve(&lu, &b);
            let r = matvec(m.as_ref(), &x);
            assert!((r[0] - b[0]).norm() < 1e-14 && (r[1] - b[1]).norm() < 1e-14);
            let l = left_matvec(m.as_ref(), &[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
            assert_eq!(l[0], C64::new(2.5, 0.0));
        }
    }
}
