//! Compressed sparse row storage used by the assembled blocks.

use std::fmt::Write as _;
use std::ops::{Add, Mul};

use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<E> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<E>,
}

impl<E: Copy + Zero + Add<Output = E>> CsrMatrix<E> {
    /// Builds the matrix from `(row, col, value)` triplets. Duplicates are summed
    /// in input order after a stable sort, so the result is bit-reproducible for
    /// a fixed triplet sequence.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, E)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data: Vec<E> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                let x = data.last_mut().expect("nonempty");
                *x = *x + v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Self { nrows, ncols, indptr, indices, data }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_triplets(nrows, ncols, Vec::new())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn data(&self) -> &[E] {
        &self.data
    }

    /// Entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, E)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.data[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> E {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.data[r.start + k],
            Err(_) => E::zero(),
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, E)> {
        (0..self.nrows).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect()
    }

    pub fn transpose(&self) -> Self {
        let t = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, t)
    }

    /// `y = A x` for any vector type `A` entries can multiply.
    pub fn mul_vec<V>(&self, x: &[V]) -> Vec<V>
    where
        V: Copy + Zero + Add<Output = V>,
        E: Mul<V, Output = V>,
    {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).fold(V::zero(), |acc, (j, a)| acc + a * x[j]))
            .collect()
    }
}

impl<T: Real> CsrMatrix<T> {
    /// `x^H A x`.
    pub fn quad_form(&self, x: &[Complex<T>]) -> Complex<T> {
        let ax = self.mul_cvec(x);
        x.iter().zip(&ax).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn mul_cvec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).fold(Complex::zero(), |acc: Complex<T>, (j, a)| acc + x[j] * a))
            .collect()
    }

    /// Max entry magnitude.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `max |A_ij - A_ji| / max |A_ij|` (zero for the empty matrix).
    pub fn symmetry_defect(&self) -> T {
        let scale = self.max_abs();
        if scale == T::zero() {
            return T::zero();
        }
        let mut d = T::zero();
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d = d.max((v - self.get(j, i)).abs());
            }
        }
        d / scale
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { data: self.data.iter().map(|&v| v * s).collect(), ..self.clone() }
    }
}

/// `sum_k c_k B_k` for real blocks of equal shape.
pub fn complex_combination<T: Real>(parts: &[(&CsrMatrix<T>, Complex<T>)]) -> CsrMatrix<Complex<T>> {
    let (nrows, ncols) = (parts[0].0.nrows, parts[0].0.ncols);
    let mut trip = Vec::with_capacity(parts.iter().map(|(m, _)| m.nnz()).sum());
    for (m, c) in parts {
        assert_eq!((m.nrows, m.ncols), (nrows, ncols));
        if c.is_zero() {
            continue;
        }
        for i in 0..m.nrows {
            for (j, v) in m.row(i) {
                trip.push((i, j, *c * v));
            }
        }
    }
    CsrMatrix::from_triplets(nrows, ncols, trip)
}

/// Coordinate text export: header `nrows ncols nnz`, then `row col value`
/// (real) or `row col re im` (complex) per line, 0-based, row-major.
pub trait TripletExport {
    fn to_triplet_text(&self) -> String;
}

impl<T: Real> TripletExport for CsrMatrix<T> {
    fn to_triplet_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.nrows, self.ncols, self.nnz());
        for (i, j, v) in self.triplets() {
            let _ = writeln!(s, "{i} {j} {:.17e}", v.as_f64());
        }
        s
    }
}

impl<T: Real> TripletExport for CsrMatrix<Complex<T>> {
    fn to_triplet_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.nrows, self.ncols, self.nnz());
        for (i, j, v) in self.triplets() {
            let _ = writeln!(s, "{i} {j} {:.17e} {:.17e}", v.re.as_f64(), v.im.as_f64());
        }
        s
    }
}
