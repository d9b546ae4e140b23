//! Left-looking sparse LU with threshold partial pivoting (Gilbert-Peierls).
//!
//! Column `k` of the factors is obtained from a sparse triangular solve with
//! the columns already computed; its nonzero pattern comes from a depth-first
//! reachability search, so the work is proportional to the flop count. The
//! diagonal entry is kept as pivot whenever it is within `threshold` of the
//! largest candidate, which preserves the fill-reducing column order for the
//! symmetric-pattern matrices assembled here.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone)]
pub struct SparseLu<T> {
    n: usize,
    /// Column order: step `k` eliminates original column `col_order[k]`.
    col_order: Vec<usize>,
    /// `row_pos[i]`: pivot step of original row `i`.
    row_pos: Vec<usize>,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<Complex<T>>,
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<Complex<T>>,
    pub min_pivot: T,
    pub max_pivot: T,
}

impl<T: Real> SparseLu<T> {
    /// Factors `a` eliminating columns in `col_order`. Rows are chosen by
    /// threshold pivoting, preferring the row matching the column.
    pub fn factor(a: &CsrMatrix<Complex<T>>, col_order: &[usize], threshold: T) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(a.ncols(), n, "LU needs a square matrix");
        assert_eq!(col_order.len(), n);
        // column access: CSC of a == CSR of a^T
        let at = a.transpose();
        let (a_ptr, a_idx, a_val) = (at.indptr(), at.indices(), at.data());
        let anorm = a.data().iter().fold(T::zero(), |m, v| m.max(v.norm()));

        const NONE: usize = usize::MAX;
        let mut row_pos = vec![NONE; n];
        let mut l_ptr = Vec::with_capacity(n + 1);
        let mut u_ptr = Vec::with_capacity(n + 1);
        let mut l_idx = Vec::with_capacity(4 * a.nnz());
        let mut l_val = Vec::with_capacity(4 * a.nnz());
        let mut u_idx = Vec::with_capacity(4 * a.nnz());
        let mut u_val = Vec::with_capacity(4 * a.nnz());

        let mut x = vec![Complex::<T>::zero(); n];
        let mut reach = vec![0usize; n];
        let mut stack = vec![0usize; n];
        let mut pstack = vec![0usize; n];
        let mut mark = vec![NONE; n];
        let mut min_pivot = T::infinity();
        let mut max_pivot = T::zero();
        let thresh2 = threshold * threshold;

        for (k, &col) in col_order.iter().enumerate() {
            l_ptr.push(l_idx.len());
            u_ptr.push(u_idx.len());

            // pattern of L \ A(:, col): rows reachable from the column's nonzeros
            let mut top = n;
            for &i in &a_idx[a_ptr[col]..a_ptr[col + 1]] {
                if mark[i] != k {
                    top = dfs(i, k, &l_ptr, &l_idx, &row_pos, &mut mark, &mut stack, &mut pstack, &mut reach, top);
                }
            }
            for &i in &reach[top..n] {
                x[i] = Complex::zero();
            }
            for p in a_ptr[col]..a_ptr[col + 1] {
                x[a_idx[p]] = a_val[p];
            }
            // sparse forward substitution in topological order
            for &j in &reach[top..n] {
                let jp = row_pos[j];
                if jp == NONE {
                    continue;
                }
                let xj = x[j];
                if xj.is_zero() {
                    continue;
                }
                let end = if jp + 1 < l_ptr.len() { l_ptr[jp + 1] } else { l_idx.len() };
                // first stored entry of column jp is the unit diagonal
                for p in l_ptr[jp] + 1..end {
                    x[l_idx[p]] -= l_val[p] * xj;
                }
            }

            // pivot search among rows not yet pivotal
            let mut best = NONE;
            let mut best2 = T::zero();
            for &i in &reach[top..n] {
                if row_pos[i] == NONE {
                    let t = x[i].norm_sqr();
                    if t > best2 {
                        best2 = t;
                        best = i;
                    }
                } else {
                    u_idx.push(row_pos[i]);
                    u_val.push(x[i]);
                }
            }
            let best_abs = best2.sqrt();
            if best == NONE || !(best_abs > T::epsilon() * anorm) {
                return Err(Error::SingularMatrix { step: k, pivot: best_abs.as_f64() });
            }
            if row_pos[col] == NONE && mark[col] == k && x[col].norm_sqr() >= thresh2 * best2 {
                best = col;
            }
            let pivot = x[best];
            let pabs = pivot.norm();
            min_pivot = min_pivot.min(pabs);
            max_pivot = max_pivot.max(pabs);
            u_idx.push(k);
            u_val.push(pivot);
            row_pos[best] = k;
            l_idx.push(best);
            l_val.push(Complex::new(T::one(), T::zero()));
            for &i in &reach[top..n] {
                if row_pos[i] == NONE {
                    l_idx.push(i);
                    l_val.push(x[i] / pivot);
                }
                x[i] = Complex::zero();
            }
        }
        l_ptr.push(l_idx.len());
        u_ptr.push(u_idx.len());
        // rows of L in pivot order
        for i in &mut l_idx {
            *i = row_pos[*i];
        }
        Ok(Self {
            n,
            col_order: col_order.to_vec(),
            row_pos,
            l_ptr,
            l_idx,
            l_val,
            u_ptr,
            u_idx,
            u_val,
            min_pivot,
            max_pivot,
        })
    }

    /// Stored entries of `L` and `U`.
    pub fn factor_nnz(&self) -> usize {
        self.l_idx.len() + self.u_idx.len()
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y = vec![Complex::zero(); n];
        for (i, &bi) in b.iter().enumerate() {
            y[self.row_pos[i]] = bi;
        }
        for j in 0..n {
            let yj = y[j];
            if yj.is_zero() {
                continue;
            }
            for p in self.l_ptr[j] + 1..self.l_ptr[j + 1] {
                y[self.l_idx[p]] -= self.l_val[p] * yj;
            }
        }
        for j in (0..n).rev() {
            let last = self.u_ptr[j + 1] - 1;
            y[j] /= self.u_val[last];
            let yj = y[j];
            if yj.is_zero() {
                continue;
            }
            for p in self.u_ptr[j]..last {
                y[self.u_idx[p]] -= self.u_val[p] * yj;
            }
        }
        let mut x = vec![Complex::zero(); n];
        for (k, &c) in self.col_order.iter().enumerate() {
            x[c] = y[k];
        }
        x
    }
}

/// Non-recursive depth-first search from row `start` through the columns of
/// `L` computed so far; finished vertices are pushed onto `reach[..top]`
/// from the back, which yields a topological order in `reach[top..]`.
#[allow(clippy::too_many_arguments)]
fn dfs(
    start: usize,
    stamp: usize,
    l_ptr: &[usize],
    l_idx: &[usize],
    row_pos: &[usize],
    mark: &mut [usize],
    stack: &mut [usize],
    pstack: &mut [usize],
    reach: &mut [usize],
    mut top: usize,
) -> usize {
    const NONE: usize = usize::MAX;
    let ncols_done = l_ptr.len();
    let col_range = |jp: usize| -> (usize, usize) {
        if jp == NONE {
            (0, 0)
        } else {
            let end = if jp + 1 < ncols_done { l_ptr[jp + 1] } else { l_idx.len() };
            (l_ptr[jp], end)
        }
    };
    let mut head = 0usize;
    stack[0] = start;
    loop {
        let j = stack[head];
        let jp = row_pos[j];
        if mark[j] != stamp {
            mark[j] = stamp;
            pstack[head] = col_range(jp).0;
        }
        let end = col_range(jp).1;
        let mut descended = false;
        let mut p = pstack[head];
        while p < end {
            let i = l_idx[p];
            p += 1;
            if mark[i] == stamp {
                continue;
            }
            pstack[head] = p;
            head += 1;
            stack[head] = i;
            descended = true;
            break;
        }
        if !descended {
            top -= 1;
            reach[top] = j;
            if head == 0 {
                return top;
            }
            head -= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn needs_row_pivoting() {
        // zero diagonal forces an off-diagonal pivot
        let a = CsrMatrix::from_triplets(
            3,
            3,
            vec![(0, 1, c(1.0, 0.0)), (1, 0, c(2.0, 1.0)), (1, 1, c(1.0, 0.0)), (2, 2, c(0.0, 3.0)), (2, 0, c(1.0, 0.0))],
        );
        let lu = SparseLu::factor(&a, &[0, 1, 2], 0.1).unwrap();
        let b = vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0)];
        let x = lu.solve(&b);
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).norm() < 1e-14);
        }
    }

    #[test]
    fn singular_detected() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, c(1.0, 0.0)), (0, 1, c(1.0, 0.0)), (1, 0, c(1.0, 0.0)), (1, 1, c(1.0, 0.0))]);
        assert!(matches!(SparseLu::factor(&a, &[0, 1], 0.1), Err(Error::SingularMatrix { .. })));
    }
}
