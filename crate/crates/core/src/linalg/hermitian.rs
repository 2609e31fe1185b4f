//! Hermitian eigensolver: Householder reduction to a real symmetric
//! tridiagonal matrix followed by implicit QL iteration.

use num_complex::Complex;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use crate::scalar::{czero, real, Real};

/// Eigenvalues (ascending) and optionally the unitary eigenvector matrix of a
/// Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: Option<ComplexMatrix<T>>,
}

const QL_MAX_SWEEPS: usize = 60;

/// Eigen-decomposition of the Hermitian part of `a`; only the lower triangle
/// (with its conjugate) is trusted.
pub fn hermitian_eigen<T: Real>(a: &ComplexMatrix<T>, want_vectors: bool) -> Result<HermitianEigen<T>> {
    if !a.is_square() {
        return Err(Error::Dimension("hermitian eigen needs a square matrix".into()));
    }
    let n = a.rows();
    let mut h = a.hermitian_part();
    let mut q = want_vectors.then(|| ComplexMatrix::identity(n));

    // Householder tridiagonalization.
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let x: Vec<Complex<T>> = (0..m).map(|i| h[(k + 1 + i, k)]).collect();
        let sigma = super::matrix::vec_norm(&x);
        let tail = x[1..].iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        if sigma == T::zero() || tail == T::zero() {
            continue;
        }
        let phase = if x[0].norm() > T::zero() { x[0] / x[0].norm() } else { real(T::one()) };
        let alpha = -phase * sigma;
        let mut v = x;
        v[0] -= alpha;
        let vnorm2 = v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        if vnorm2 == T::zero() {
            continue;
        }
        let tau = T::lit(2.0) / vnorm2;
        // w = tau * B v, B = trailing block.
        let mut w = vec![czero(); m];
        for i in 0..m {
            let mut s: Complex<T> = czero();
            for j in 0..m {
                s += h[(k + 1 + i, k + 1 + j)] * v[j];
            }
            w[i] = s * tau;
        }
        let vw = v.iter().zip(&w).fold(czero(), |acc, (&vi, &wi)| acc + vi.conj() * wi);
        let kcoef = vw * (tau * T::lit(0.5));
        let qv: Vec<Complex<T>> = w.iter().zip(&v).map(|(&wi, &vi)| wi - kcoef * vi).collect();
        for i in 0..m {
            for j in 0..m {
                let upd = v[i] * qv[j].conj() + qv[i] * v[j].conj();
                h[(k + 1 + i, k + 1 + j)] -= upd;
            }
        }
        h[(k + 1, k)] = alpha;
        h[(k, k + 1)] = alpha.conj();
        for i in 1..m {
            h[(k + 1 + i, k)] = czero();
            h[(k, k + 1 + i)] = czero();
        }
        if let Some(q) = q.as_mut() {
            // Q <- Q H on columns k+1..n.
            for r in 0..n {
                let mut s: Complex<T> = czero();
                for j in 0..m {
                    s += q[(r, k + 1 + j)] * v[j];
                }
                s = s * tau;
                for j in 0..m {
                    let upd = s * v[j].conj();
                    q[(r, k + 1 + j)] -= upd;
                }
            }
        }
    }

    // Rotate the complex off-diagonal onto the positive reals.
    let mut d: Vec<T> = (0..n).map(|i| h[(i, i)].re).collect();
    let mut e = vec![T::zero(); n];
    let mut phase = real(T::one());
    for i in 0..n.saturating_sub(1) {
        let sub = h[(i + 1, i)];
        let r = sub.norm();
        e[i] = r;
        if r > T::zero() {
            phase = phase * (sub / r);
        }
        if let Some(q) = q.as_mut() {
            for row in 0..n {
                q[(row, i + 1)] = q[(row, i + 1)] * phase;
            }
        }
    }

    tridiagonal_ql(&mut d, &mut e, q.as_mut())?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = q.map(|q| ComplexMatrix::from_fn(n, n, |r, c| q[(r, order[c])]));
    Ok(HermitianEigen { values, vectors })
}

/// Implicit QL on a symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e` (`e[i]` couples `i` and `i+1`). Rotations are accumulated
/// into the columns of `z` when given.
fn tridiagonal_ql<T: Real>(d: &mut [T], e: &mut [T], mut z: Option<&mut ComplexMatrix<T>>) -> Result<()> {
    let n = d.len();
    if n < 2 {
        return Ok(());
    }
    let eps = T::epsilon();
    let two = T::lit(2.0);
    e[n - 1] = T::zero();
    let mut total = 0usize;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            total += 1;
            if iter > QL_MAX_SWEEPS {
                return Err(Error::NoConvergence { iterations: total });
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..z.rows() {
                        let f = z[(k, i + 1)];
                        let zi = z[(k, i)];
                        z[(k, i + 1)] = zi * s + f * c;
                        z[(k, i)] = zi * c - f * s;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

/// Largest eigenvalue of the Hermitian part.
pub fn max_hermitian_eigenvalue<T: Real>(a: &ComplexMatrix<T>) -> Result<T> {
    let eig = hermitian_eigen(a, false)?;
    Ok(*eig.values.last().expect("nonempty"))
}

/// Smallest eigenvalue of the Hermitian part.
pub fn min_hermitian_eigenvalue<T: Real>(a: &ComplexMatrix<T>) -> Result<T> {
    let eig = hermitian_eigen(a, false)?;
    Ok(eig.values[0])
}

/// Operator 2-norm (largest singular value).
pub fn norm2<T: Real>(a: &ComplexMatrix<T>) -> Result<T> {
    if a.rows() == 1 || a.cols() == 1 {
        return Ok(a.frobenius_norm());
    }
    let gram = if a.cols() <= a.rows() { a.adjoint_mul(a) } else { a.matmul(&a.adjoint()) };
    let lmax = max_hermitian_eigenvalue(&gram)?;
    Ok(lmax.max(T::zero()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let a = ComplexMatrix::from_rows(&[vec![c(2.0, 0.0), c(0.0, 1.0)], vec![c(0.0, -1.0), c(2.0, 0.0)]])
            .unwrap();
        let eig = hermitian_eigen(&a, true).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 3.0).abs() < 1e-14);
        let v = eig.vectors.unwrap();
        let av = &a * &v;
        let vl = v.scale_cols(&[c(1.0, 0.0), c(3.0, 0.0)]);
        assert!((&av - &vl).frobenius_norm() < 1e-13);
    }

    #[test]
    fn reconstruction_random_hermitian() {
        let n = 17;
        let m = ComplexMatrix::from_fn(n, n, |i, j| {
            c(((i * 7 + j * 3) % 11) as f64 - 5.0, ((i * 5 + j * 13) % 7) as f64 - 3.0)
        });
        let a = m.hermitian_part();
        let eig = hermitian_eigen(&a, true).unwrap();
        let v = eig.vectors.unwrap();
        let lam: Vec<Complex64> = eig.values.iter().map(|&x| c(x, 0.0)).collect();
        let rec = &v.scale_cols(&lam) * &v.adjoint();
        assert!((&rec - &a).frobenius_norm() < 1e-11 * a.frobenius_norm());
        let vv = v.adjoint_mul(&v);
        assert!((&vv - &ComplexMatrix::identity(n)).frobenius_norm() < 1e-12);
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let tr: f64 = eig.values.iter().sum();
        assert!((tr - a.trace().re).abs() < 1e-10);
    }

    #[test]
    fn norm2_of_diagonal_and_rank_one() {
        let d = ComplexMatrix::from_diag(&[c(1.0, 1.0), c(-3.0, 0.0), c(0.5, 0.0)]);
        assert!((norm2(&d).unwrap() - 3.0).abs() < 1e-14);
        // u v* has norm |u||v|.
        let u = [c(1.0, 0.0), c(0.0, 2.0)];
        let v = [c(3.0, 0.0), c(0.0, 0.0), c(4.0, 0.0)];
        let r = ComplexMatrix::from_fn(2, 3, |i, j| u[i] * v[j].conj());
        assert!((norm2(&r).unwrap() - 5.0 * 5f64.sqrt()).abs() < 1e-13);
    }
}
