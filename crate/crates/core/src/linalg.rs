//! Compressed sparse rows, dense matrices and a partial-pivoting LU, all
//! generic over [`Scalar`].

use std::collections::BTreeMap;

use num_traits::{Float, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Coordinate-format accumulator; duplicates are summed on `build`.
#[derive(Debug, Clone)]
pub struct TripletBuilder<T> {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Scalar> TripletBuilder<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self { nrows, ncols, entries: Vec::with_capacity(cap) }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.entries.push((i, j, v));
    }

    pub fn extend(&mut self, other: TripletBuilder<T>) {
        self.entries.extend(other.entries);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorts, sums duplicates and drops entries that are exactly zero.
    pub fn build(mut self) -> CsrMatrix<T> {
        // Stable, so duplicates are summed in insertion order.
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<T> = Vec::with_capacity(self.entries.len());
        let mut rows = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(i);
                col_idx.push(j);
                values.push(v);
                last = Some((i, j));
            }
        }
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((i, j), v) in rows.into_iter().zip(col_idx).zip(values) {
            if v != T::zero() {
                row_ptr[i + 1] += 1;
                keep_cols.push(j);
                keep_vals.push(v);
            }
        }
        for i in 0..self.nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { nrows: self.nrows, ncols: self.ncols, row_ptr, col_idx: keep_cols, values: keep_vals }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, row_ptr: vec![0; nrows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => T::zero(),
        }
    }

    /// All stored `(row, column, value)` entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `y = A x`
    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        y.par_iter_mut().with_min_len(2048).enumerate().for_each(|(i, yi)| {
            let mut acc = T::zero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        });
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self + other`, entrywise.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        for (i, j, v) in self.triplets().chain(other.triplets()) {
            b.push(i, j, v);
        }
        b.build()
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] += v;
        }
        d
    }

    /// True when the pattern of `A` equals the pattern of `A^T`.
    pub fn is_structurally_symmetric(&self) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        self.triplets().all(|(i, j, _)| {
            let r = self.row_ptr[j]..self.row_ptr[j + 1];
            self.col_idx[r].binary_search(&i).is_ok()
        })
    }

    /// Rows and columns permuted: `B[p[i], p[j]] = A[i, j]`.
    pub fn permute(&self, p: &[usize]) -> Self {
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz());
        for (i, j, v) in self.triplets() {
            b.push(p[i], p[j], v);
        }
        b.build()
    }

    pub fn max_abs(&self) -> T::Real {
        self.values.iter().fold(T::Real::zero(), |m, v| m.max(v.modulus()))
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    nrows: usize,
    ncols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, data: vec![T::zero(); nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { nrows, ncols, data }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .into_par_iter()
            .with_min_len(64)
            .map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// `A^T x` (no conjugation).
    pub fn transpose_mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![T::zero(); self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            if xi != T::zero() {
                for (yj, &a) in y.iter_mut().zip(self.row(i)) {
                    *yj += a * xi;
                }
            }
        }
        y
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut out = Self::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(i, k)];
                if a != T::zero() {
                    for (o, &b) in out.row_mut(i).iter_mut().zip(other.row(k)) {
                        *o += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> T::Real {
        self.data.iter().fold(T::Real::zero(), |m, v| m.max(v.modulus()))
    }

    pub fn lu(&self) -> Result<DenseLu<T>> {
        DenseLu::new(self.clone())
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.ncols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.ncols + j]
    }
}

/// LU with partial pivoting, `P A = L U` stored in place.
#[derive(Debug, Clone)]
pub struct DenseLu<T> {
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> DenseLu<T> {
    /// Fails when a pivot is below `1e-14` times the largest pivot.
    pub fn new(mut a: DenseMatrix<T>) -> Result<Self> {
        let n = a.nrows;
        if n != a.ncols {
            return Err(Error::Singular(format!("{}x{} matrix is not square", a.nrows, a.ncols)));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut pivots = Vec::with_capacity(n);
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, a[(i, k)].modulus()))
                .fold((k, T::Real::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best == T::Real::zero() {
                return Err(Error::Singular(format!("zero pivot in column {k}")));
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            pivots.push(best);
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / pivot;
                if f != T::zero() {
                    a[(i, k)] = f;
                    for j in k + 1..n {
                        let u = a[(k, j)];
                        a[(i, j)] -= f * u;
                    }
                }
            }
        }
        let max = pivots.iter().fold(T::Real::zero(), |m, &p| m.max(p));
        let threshold: T::Real = num_traits::cast::<f64, T::Real>(1e-14).unwrap() * max;
        if let Some(k) = pivots.iter().position(|&p| p < threshold) {
            return Err(Error::Singular(format!("pivot {k} is below 1e-14 of the largest pivot")));
        }
        Ok(Self { lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in 0..i {
                s -= row[j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in i + 1..n {
                s -= row[j] * x[j];
            }
            x[i] = s / row[i];
        }
        x
    }
}

/// Sparse-pattern summary used by tests and diagnostics.
pub fn pattern<T: Scalar>(a: &CsrMatrix<T>) -> BTreeMap<usize, Vec<usize>> {
    (0..a.nrows()).map(|i| (i, a.row(i).map(|(j, _)| j).collect())).collect()
}

/// Identity check helper: `max |A - I|`.
pub fn distance_to_identity<T: Scalar>(a: &DenseMatrix<T>) -> T::Real {
    let mut m = T::Real::zero();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let target = if i == j { T::one() } else { T::zero() };
            m = m.max((a[(i, j)] - target).modulus());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use num_complex::Complex64;

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let mut b = TripletBuilder::<f64>::new(2, 2);
        b.push(0, 0, 1.0);
        b.push(0, 0, 2.0);
        b.push(1, 0, 1.0);
        b.push(1, 0, -1.0);
        b.push(1, 1, 4.0);
        let a = b.build();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 0), 0.0);
        assert_eq!(a.mul_vec(&[1.0, 1.0]), vec![3.0, 4.0]);
    }

    #[test]
    fn dense_lu_solves_small_system() {
        let a = DenseMatrix::from_rows(&[vec![2.0f64, 1.0], vec![1.0, 2.0]]);
        let x = a.lu().unwrap().solve(&[3.0, 3.0]);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        let s = DenseMatrix::from_rows(&[vec![1.0f64, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(s.lu(), Err(Error::Singular(_))));
    }

    #[test]
    fn complex_and_single_precision_lu() {
        let i = Complex64::new(0.0, 1.0);
        let a = DenseMatrix::from_rows(&[vec![i, Complex64::one()], vec![Complex64::one(), i]]);
        let b = vec![Complex64::new(1.0, 1.0), Complex64::new(1.0, 1.0)];
        let x = a.lu().unwrap().solve(&b);
        let r = a.mul_vec(&x);
        assert!((r[0] - b[0]).norm() < 1e-15 && (r[1] - b[1]).norm() < 1e-15);
        let f = DenseMatrix::from_rows(&[vec![4.0f32, 1.0], vec![1.0, 3.0]]);
        let y = f.lu().unwrap().solve(&[1.0, 2.0]);
        assert!((4.0 * y[0] + y[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn csr_algebra() {
        let mut b = TripletBuilder::<f64>::new(3, 3);
        b.push(0, 1, 2.0);
        b.push(1, 0, 3.0);
        b.push(2, 2, 1.0);
        let a = b.build();
        assert!(a.is_structurally_symmetric());
        let s = a.add(&CsrMatrix::identity(3)).scale(2.0);
        assert_eq!(s.get(0, 0), 2.0);
        assert_eq!(s.get(2, 2), 4.0);
        let p = a.permute(&[2, 0, 1]);
        assert_eq!(p.get(2, 0), 2.0);
        assert_eq!(a.to_dense().matmul(&DenseMatrix::identity(3)), a.to_dense());
        assert_eq!(distance_to_identity(&DenseMatrix::<f64>::identity(3)), 0.0);
        assert_eq!(pattern(&a)[&0], vec![1]);
        assert_eq!(a.to_dense().transpose_mul_vec(&[1.0, 0.0, 0.0]), vec![0.0, 2.0, 0.0]);
    }
}
