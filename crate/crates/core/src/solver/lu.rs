//! Sparse LU factorization of `I - A` without pivoting.
//!
//! When `A` is nonnegative with `rho(A) < 1`, `I - A` is a nonsingular
//! M-matrix, for which Gaussian elimination in the natural order never needs a
//! row exchange and every pivot is positive. The factorization is computed
//! once and then reused for every right-hand side.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::matrix::CsrMatrix;

/// Pivots below this magnitude are treated as exact zeros.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SingularPivot {
    pub row: usize,
    pub pivot: f64,
}

/// `L U` factors of a square sparse matrix. `L` is unit lower triangular and
/// stored without its diagonal.
#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    lower: Vec<Vec<(usize, f64)>>,
    upper: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

impl SparseLu {
    /// Factorizes `I - a`.
    pub fn factor_identity_minus(a: &CsrMatrix) -> Result<Self, SingularPivot> {
        let n = a.dim();
        let rows = (0..n)
            .map(|i| {
                let (cols, vals) = a.row(i);
                let mut row: Vec<(usize, f64)> = cols.iter().zip(vals).map(|(&c, &v)| (c, -v)).collect();
                match row.binary_search_by_key(&i, |&(c, _)| c) {
                    Ok(k) => row[k].1 += 1.0,
                    Err(k) => row.insert(k, (i, 1.0)),
                }
                row
            })
            .collect();
        Self::factor(&CsrMatrix::from_rows(n, rows))
    }

    pub fn factor(m: &CsrMatrix) -> Result<Self, SingularPivot> {
        let n = m.dim();
        let mut lower = Vec::with_capacity(n);
        let mut upper: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
        let mut diag = Vec::with_capacity(n);

        let mut work = vec![0.0; n];
        let mut marked = vec![false; n];
        let mut pattern = Vec::new();
        let mut pending = BinaryHeap::new();

        for i in 0..n {
            let (cols, vals) = m.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                work[c] = v;
                marked[c] = true;
                pattern.push(c);
                if c < i {
                    pending.push(Reverse(c));
                }
            }

            let mut l_row = Vec::new();
            while let Some(Reverse(k)) = pending.pop() {
                let factor = work[k] / diag[k];
                if factor != 0.0 {
                    l_row.push((k, factor));
                    for &(j, u) in &upper[k] {
                        if !marked[j] {
                            marked[j] = true;
                            pattern.push(j);
                            if j < i {
                                pending.push(Reverse(j));
                            }
                        }
                        work[j] -= factor * u;
                    }
                }
            }

            let pivot = work[i];
            if !(pivot.abs() > PIVOT_TOLERANCE) {
                return Err(SingularPivot { row: i, pivot });
            }
            let mut u_row: Vec<(usize, f64)> = pattern
                .iter()
                .filter(|&&j| j > i && work[j] != 0.0)
                .map(|&j| (j, work[j]))
                .collect();
            u_row.sort_unstable_by_key(|&(j, _)| j);

            for &j in &pattern {
                work[j] = 0.0;
                marked[j] = false;
            }
            pattern.clear();

            lower.push(l_row);
            upper.push(u_row);
            diag.push(pivot);
        }
        Ok(SparseLu {
            n,
            lower,
            upper,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored off-diagonal factor entries.
    pub fn fill(&self) -> usize {
        self.lower.iter().chain(&self.upper).map(Vec::len).sum()
    }

    /// Solves `L U x = rhs` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            let s: f64 = self.lower[i].iter().map(|&(k, l)| l * x[k]).sum();
            x[i] -= s;
        }
        for i in (0..self.n).rev() {
            let s: f64 = self.upper[i].iter().map(|&(j, u)| u * x[j]).sum();
            x[i] = (x[i] - s) / self.diag[i];
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
