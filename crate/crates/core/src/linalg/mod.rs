//! Direct solution of the assembled complex systems.

mod lu;
pub mod ordering;

use std::time::Instant;

use num_complex::Complex;
use serde::Serialize;

pub use lu::SparseLu;

use crate::error::{Error, Result};
use crate::fespace::DofVector;
use crate::forms::SesquilinearSystem;
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

/// Pivot threshold relative to the largest candidate in the column.
pub const PIVOT_THRESHOLD: f64 = 0.1;
const ND_LEAF: usize = 64;
const POWER_STEPS: usize = 5;

#[derive(Debug, Clone, Serialize)]
pub struct SolveDiagnostics {
    pub dof_count: usize,
    /// `||A x - b|| / ||b||` (0 when `b = 0`).
    pub relative_residual: f64,
    pub min_pivot: f64,
    pub max_pivot: f64,
    /// Five-step power-iteration estimate of `||A|| ||A^{-1}||`.
    pub condition_estimate: f64,
    pub factor_nnz: usize,
    pub elapsed_seconds: f64,
}

/// Factors and solves `A x = b` for the assembled system.
pub fn solve<T: Real>(system: &SesquilinearSystem<T>) -> Result<(DofVector<T>, SolveDiagnostics)> {
    let (x, diag) = solve_matrix(&system.matrix, &system.rhs)?;
    Ok((DofVector::with_mesh_id(system.mesh_id(), x), diag))
}

/// Factorization of a square complex matrix under the nested-dissection order
/// of its (symmetrized) pattern.
pub fn factorize<T: Real>(a: &CsrMatrix<Complex<T>>) -> Result<SparseLu<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
    }
    let adj = ordering::symmetric_adjacency(n, a.indptr(), a.indices());
    let order = ordering::nested_dissection(&adj, ND_LEAF);
    SparseLu::factor(a, &order, T::lit(PIVOT_THRESHOLD))
}

/// Solves `A x = b` with one step of iterative refinement.
pub fn solve_matrix<T: Real>(a: &CsrMatrix<Complex<T>>, b: &[Complex<T>]) -> Result<(Vec<Complex<T>>, SolveDiagnostics)> {
    let start = Instant::now();
    let n = a.nrows();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    if let Some(bad) = b.iter().find(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::InvalidParameter(format!("non-finite right-hand side entry {bad}")));
    }
    let lu = factorize(a)?;
    let mut x = lu.solve(b);
    let r = residual(a, &x, b);
    let dx = lu.solve(&r);
    x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);

    let bnorm = norm2(b);
    let rel = if bnorm == T::zero() { norm2(&residual(a, &x, b)) } else { norm2(&residual(a, &x, b)) / bnorm };
    let diag = SolveDiagnostics {
        dof_count: n,
        relative_residual: rel.as_f64(),
        min_pivot: lu.min_pivot.as_f64(),
        max_pivot: lu.max_pivot.as_f64(),
        condition_estimate: condition_estimate(a, &lu).as_f64(),
        factor_nnz: lu.factor_nnz(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((x, diag))
}

fn residual<T: Real>(a: &CsrMatrix<Complex<T>>, x: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
    a.mul_vec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
}

pub(crate) fn norm2<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

type Operator<'a, T> = dyn Fn(&[Complex<T>]) -> Vec<Complex<T>> + 'a;

/// Growth factors of a few power steps with `A` and with `A^{-1}`.
fn condition_estimate<T: Real>(a: &CsrMatrix<Complex<T>>, lu: &SparseLu<T>) -> T {
    let n = a.nrows();
    if n == 0 {
        return T::one();
    }
    let start: Vec<Complex<T>> = (0..n)
        .map(|i| Complex::new(T::one() + T::lit(0.1) * T::from_usize_lossy(i % 7), T::zero()))
        .collect();
    let grow = |apply: &Operator<T>| {
        let mut v = start.clone();
        let mut est = T::zero();
        for _ in 0..POWER_STEPS {
            let nv = norm2(&v);
            if nv == T::zero() {
                break;
            }
            v.iter_mut().for_each(|z| *z /= nv);
            let w = apply(&v);
            est = norm2(&w);
            v = w;
        }
        est
    };
    let forward = grow(&|v| a.mul_vec(v));
    let inverse = grow(&|v| lu.solve(v));
    forward * inverse
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn zeros<T: Real>(n: usize) -> Vec<Complex<T>> {
        vec![Complex::zero(); n]
    }
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64) -> CsrMatrix<Complex<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
            for _ in 0..3 {
                let j = rng.gen_range(0..n);
                let v = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                t.push((i, j, v));
                t.push((j, i, v));
            }
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn recovers_known_solution() {
        for seed in 0..5 {
            let a = random_matrix(300, seed);
            let w: Vec<Complex<f64>> = (0..300).map(|i| Complex::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
            let b = a.mul_vec(&w);
            let (x, d) = solve_matrix(&a, &b).unwrap();
            let err = norm2(&x.iter().zip(&w).map(|(a, b)| a - b).collect::<Vec<_>>()) / norm2(&w);
            assert!(err < 1e-9, "seed {seed}: {err}");
            assert!(d.relative_residual < 1e-12);
            assert!(d.condition_estimate >= 1.0);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = random_matrix(50, 9);
        let (x, d) = solve_matrix(&a, &zeros(50)).unwrap();
        assert!(x.iter().all(|z| z.is_zero()));
        assert_eq!(d.relative_residual, 0.0);
    }

    #[test]
    fn rejects_non_finite_rhs() {
        let a = random_matrix(5, 1);
        let mut b = zeros::<f64>(5);
        b[2] = Complex::new(f64::NAN, 0.0);
        assert!(solve_matrix(&a, &b).is_err());
    }
}
