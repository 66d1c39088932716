use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;

/// Complex scalar: an ordered pair of binary64 reals.
pub type C64 = Complex<f64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries. Panics if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count does not match shape");
        Self { rows, cols, data }
    }

    /// Real matrix from nested rows.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::new(diag[i], 0.0) } else { ZERO })
    }

    /// The diagonal, when the matrix is square, real and exactly diagonal.
    pub fn real_diagonal(&self) -> Option<Vec<f64>> {
        let n = self.rows();
        if self.cols() != n {
            return None;
        }
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            for j in 0..n {
                let x = self[(i, j)];
                if (i != j && x != ZERO) || (i == j && x.im != 0.0) {
                    return None;
                }
            }
            out.push(self[(i, i)].re);
        }
        Some(out)
    }

    /// Matrix whose columns are the given vectors, all of length `rows`.
    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "column length does not match row count");
            for (i, &z) in col.iter().enumerate() {
                m[(i, j)] = z;
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum::<f64>())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm of `self - other`. Panics on shape mismatch.
    pub fn distance(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        libm::sqrt(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>(),
        )
    }

    /// Largest entrywise deviation from the conjugate transpose.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(self + selfᴴ) / 2`, with an exactly real diagonal.
    pub fn hermitian_part(&self) -> Self {
        let mut m = Self::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            m[(i, i)] = C64::new(self[(i, i)].re, 0.0);
            for j in (i + 1)..self.cols {
                let z = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    /// Rows `range` of the matrix, all columns.
    pub fn select_rows(&self, range: core::ops::Range<usize>) -> Self {
        Self::from_fn(range.len(), self.cols, |i, j| self[(range.start + i, j)])
    }

    /// Columns with the given indices, in order.
    pub fn select_columns(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    /// Copy with every row outside `keep` set to zero.
    pub fn mask_rows(&self, keep: core::ops::Range<usize>) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| if keep.contains(&i) { self[(i, j)] } else { ZERO })
    }

    /// Places `block` with its top-left corner at `(row, col)`.
    pub fn set_block(&mut self, row: usize, col: usize, block: &Matrix) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(row + i, col + j)] = block[(i, j)];
            }
        }
    }

    /// `selfᴴ · other` without forming the adjoint.
    pub fn adjoint_mul(&self, other: &Matrix) -> Self {
        assert_eq!(self.rows, other.rows, "adjoint_mul shape mismatch");
        let mut out = Self::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let a = self.row(k);
            let b = other.row(k);
            for (i, ai) in a.iter().enumerate() {
                if *ai == ZERO {
                    continue;
                }
                let ai = ai.conj();
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, bj) in dst.iter_mut().zip(b) {
                    *d += ai * bj;
                }
            }
        }
        out
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, a) in self.row(i).iter().enumerate() {
                if *a == ZERO {
                    continue;
                }
                for (d, b) in dst.iter_mut().zip(rhs.row(k)) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Add for &Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix sum shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix difference shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Modified Gram-Schmidt with one reorthogonalization pass, applied in place
/// to the columns of `m`. Columns are assumed numerically independent.
pub(crate) fn reorthonormalize_columns(m: &mut Matrix) {
    let (rows, cols) = (m.rows(), m.cols());
    for _pass in 0..2 {
        for j in 0..cols {
            for k in 0..j {
                let mut dot = ZERO;
                for i in 0..rows {
                    dot += m[(i, k)].conj() * m[(i, j)];
                }
                for i in 0..rows {
                    let v = m[(i, k)];
                    m[(i, j)] -= dot * v;
                }
            }
            let norm = libm::sqrt((0..rows).map(|i| m[(i, j)].norm_sqr()).sum::<f64>());
            if norm > 0.0 {
                for i in 0..rows {
                    m[(i, j)] /= norm;
                }
            }
        }
    }
}

/// Multiplies column `j` by a unit phase so that its largest-magnitude entry
/// is real and positive. Makes eigenvector bases deterministic.
pub(crate) fn fix_column_phases(m: &mut Matrix) {
    for j in 0..m.cols() {
        let mut best = ZERO;
        let mut best_abs = -1.0;
        for i in 0..m.rows() {
            let a = m[(i, j)].norm();
            // Strictly greater, so ties resolve to the first index.
            if a > best_abs * (1.0 + 1e-12) {
                best_abs = a;
                best = m[(i, j)];
            }
        }
        if best_abs > 0.0 {
            let phase = best.conj() / best_abs;
            for i in 0..m.rows() {
                m[(i, j)] *= phase;
            }
        }
    }
}
