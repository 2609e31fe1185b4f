use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cone, czero, is_finite_c, real, Real};

/// Dense complex matrix stored in row-major order.
///
/// Construction through [`ComplexMatrix::new`] rejects empty shapes and
/// non-finite entries; arithmetic helpers assume well-formed operands and
/// panic on shape mismatch.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

/// Complex column vector.
pub type CVector<T> = Vec<Complex<T>>;

impl<T: Real> ComplexMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("{rows}x{cols} matrix is degenerate")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !is_finite_c(*z)) {
            return Err(Error::NonFinite { row: pos / cols, col: pos % cols });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, data: &[T]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| real(x)).collect())
    }

    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(r, c, rows.iter().flatten().copied().collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![czero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cone();
        }
        m
    }

    pub fn from_diag(diag: &[Complex<T>]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[CVector<T>]) -> Self {
        let n = cols.first().map_or(0, Vec::len);
        Self::from_fn(n, cols.len(), |i, j| cols[j][i])
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

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|z| is_finite_c(*z))
    }

    pub fn column(&self, j: usize) -> CVector<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> CVector<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.map(|z| z * s)
    }

    /// `self + s I`.
    pub fn shift(&self, s: Complex<T>) -> Self {
        assert!(self.is_square());
        let mut m = self.clone();
        for i in 0..self.rows {
            m[(i, i)] += s;
        }
        m
    }

    /// `(self + self*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square());
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * half)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    /// Induced 1-norm (max column sum).
    pub fn norm_one(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).fold(T::zero(), |acc, i| acc + self[(i, j)].norm()))
            .fold(T::zero(), T::max)
    }

    pub fn trace(&self) -> Complex<T> {
        self.diagonal().into_iter().fold(czero(), |a, b| a + b)
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let (n, k, m) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![czero(); n * m];
        for i in 0..n {
            let row = &mut out[i * m..(i + 1) * m];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let rrow = &rhs.data[p * m..(p + 1) * m];
                for (o, &b) in row.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        Self { rows: n, cols: m, data: out }
    }

    /// `self* · rhs` without forming the adjoint.
    pub fn adjoint_mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.rows, rhs.rows, "adjoint_mul shape mismatch");
        let (n, k, m) = (self.cols, self.rows, rhs.cols);
        let mut out = vec![czero(); n * m];
        for p in 0..k {
            let rrow = &rhs.data[p * m..(p + 1) * m];
            for i in 0..n {
                let a = self.data[p * self.cols + i].conj();
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let row = &mut out[i * m..(i + 1) * m];
                for (o, &b) in row.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        Self { rows: n, cols: m, data: out }
    }

    pub fn matvec(&self, x: &[Complex<T>]) -> CVector<T> {
        assert_eq!(self.cols, x.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .fold(czero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// `self* · x`.
    pub fn adjoint_matvec(&self, x: &[Complex<T>]) -> CVector<T> {
        assert_eq!(self.rows, x.len(), "adjoint_matvec shape mismatch");
        let mut out = vec![czero(); self.cols];
        for (i, &xi) in x.iter().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (o, &a) in out.iter_mut().zip(row) {
                *o += a.conj() * xi;
            }
        }
        out
    }

    /// Scales row `i` by `d[i]` (left multiplication by a diagonal).
    pub fn scale_rows(&self, d: &[Complex<T>]) -> Self {
        assert_eq!(d.len(), self.rows);
        Self::from_fn(self.rows, self.cols, |i, j| d[i] * self[(i, j)])
    }

    /// Scales column `j` by `d[j]` (right multiplication by a diagonal).
    pub fn scale_cols(&self, d: &[Complex<T>]) -> Self {
        assert_eq!(d.len(), self.cols);
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * d[j])
    }

    /// Stacks `blocks` (row-major grid of equally sized rows/cols) into one matrix.
    pub fn block(blocks: &[&[&Self]]) -> Result<Self> {
        let row_heights: Vec<usize> = blocks.iter().map(|r| r[0].rows).collect();
        let col_widths: Vec<usize> = blocks[0].iter().map(|b| b.cols).collect();
        for (bi, r) in blocks.iter().enumerate() {
            if r.len() != col_widths.len() {
                return Err(Error::Dimension("ragged block row".into()));
            }
            for (bj, b) in r.iter().enumerate() {
                if b.rows != row_heights[bi] || b.cols != col_widths[bj] {
                    return Err(Error::Dimension("incompatible block sizes".into()));
                }
            }
        }
        let rows: usize = row_heights.iter().sum();
        let cols: usize = col_widths.iter().sum();
        let mut out = Self::zeros(rows, cols);
        let mut r0 = 0;
        for (bi, r) in blocks.iter().enumerate() {
            let mut c0 = 0;
            for (bj, b) in r.iter().enumerate() {
                for i in 0..b.rows {
                    for j in 0..b.cols {
                        out[(r0 + i, c0 + j)] = b[(i, j)];
                    }
                }
                c0 += col_widths[bj];
            }
            r0 += row_heights[bi];
        }
        Ok(out)
    }

    /// LU factorization with partial pivoting.
    pub fn lu(&self) -> Result<Lu<T>> {
        Lu::new(self)
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Result<CVector<T>> {
        Ok(self.lu()?.solve(b))
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(self.lu()?.inverse())
    }
}

impl<T: Real> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<T: Real> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        self.matmul(rhs)
    }
}

impl<T: Real> Neg for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn neg(self) -> ComplexMatrix<T> {
        self.map(|z| -z)
    }
}

/// Packed LU factors `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu<T: Real> {
    n: usize,
    lu: Vec<Complex<T>>,
    perm: Vec<usize>,
}

impl<T: Real> Lu<T> {
    fn new(a: &ComplexMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension("LU needs a square matrix".into()));
        }
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        if scale == T::zero() {
            return Err(Error::Singular);
        }
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= T::epsilon() * T::epsilon() * scale {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f.re == T::zero() && f.im == T::zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= f * u;
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &[Complex<T>]) -> CVector<T> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y: CVector<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * y[j];
            }
            y[i] = s / self.lu[i * n + i];
        }
        y
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        let cols: Vec<CVector<T>> = (0..b.cols).map(|j| self.solve(&b.column(j))).collect();
        ComplexMatrix::from_columns(&cols)
    }

    pub fn inverse(&self) -> ComplexMatrix<T> {
        self.solve_matrix(&ComplexMatrix::identity(self.n))
    }
}

/// Euclidean norm of a complex vector.
pub fn vec_norm<T: Real>(x: &[Complex<T>]) -> T {
    x.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// `<x, y> = y* x` (linear in the first argument).
pub fn inner<T: Real>(x: &[Complex<T>], y: &[Complex<T>]) -> Complex<T> {
    x.iter().zip(y).fold(czero(), |acc, (&a, &b)| acc + a * b.conj())
}

/// Unit basis vector `e_k` of length `n`.
pub fn basis<T: Real>(n: usize, k: usize) -> CVector<T> {
    let mut e = vec![czero(); n];
    e[k] = cone();
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_degenerate_and_nonfinite() {
        assert!(ComplexMatrix::<f64>::new(0, 0, vec![]).is_err());
        assert!(ComplexMatrix::<f64>::new(2, 2, vec![c(1.0, 0.0); 3]).is_err());
        let err = ComplexMatrix::new(1, 2, vec![c(1.0, 0.0), c(f64::NAN, 0.0)]).unwrap_err();
        assert_eq!(err, Error::NonFinite { row: 0, col: 1 });
    }

    #[test]
    fn solve_and_inverse() {
        let a = ComplexMatrix::from_rows(&[
            vec![c(2.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(3.0, 0.0), c(-1.0, 2.0)],
            vec![c(1.0, 1.0), c(0.5, 0.0), c(4.0, -1.0)],
        ])
        .unwrap();
        let b = vec![c(1.0, 0.0), c(0.0, 1.0), c(-2.0, 0.5)];
        let x = a.solve(&b).unwrap();
        let r = a.matvec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).norm() < 1e-14);
        }
        let inv = a.inverse().unwrap();
        let id = &a * &inv;
        assert!((&id - &ComplexMatrix::identity(3)).frobenius_norm() < 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let a = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert_eq!(a.lu().unwrap_err(), Error::Singular);
    }

    #[test]
    fn adjoint_products_agree() {
        let a = ComplexMatrix::from_fn(3, 2, |i, j| c(i as f64 - j as f64, (i * j) as f64 + 0.5));
        let b = ComplexMatrix::from_fn(3, 4, |i, j| c((i + j) as f64, -(j as f64)));
        let lhs = a.adjoint_mul(&b);
        let rhs = &a.adjoint() * &b;
        assert!((&lhs - &rhs).frobenius_norm() < 1e-14);
        let x = vec![c(1.0, 2.0), c(-1.0, 0.0), c(0.0, 3.0)];
        let y1 = a.adjoint_matvec(&x);
        let y2 = a.adjoint().matvec(&x);
        assert!(y1.iter().zip(&y2).all(|(p, q)| (p - q).norm() < 1e-14));
    }

    #[test]
    fn block_assembly() {
        let z = ComplexMatrix::<f64>::zeros(2, 2);
        let i = ComplexMatrix::<f64>::identity(2);
        let m = ComplexMatrix::block(&[&[&z, &i], &[&i, &z]]).unwrap();
        assert_eq!(m.rows(), 4);
        assert_eq!(m[(0, 2)], c(1.0, 0.0));
        assert_eq!(m[(3, 1)], c(1.0, 0.0));
        assert_eq!(m[(0, 0)], c(0.0, 0.0));
    }
}
