//! Complex Schur decomposition `A = Q T Q*` by Householder reduction to
//! Hessenberg form and single-shift QR with Wilkinson shifts.

use num_complex::Complex;

use super::matrix::{vec_norm, ComplexMatrix};
use crate::error::{Error, Result};
use crate::scalar::{czero, real, Real};

#[derive(Clone, Debug)]
pub struct Schur<T: Real> {
    /// Unitary Schur vectors.
    pub q: ComplexMatrix<T>,
    /// Upper triangular Schur form.
    pub t: ComplexMatrix<T>,
    pub iterations: usize,
}

const ITERATIONS_PER_EIGENVALUE: usize = 30;

pub fn schur<T: Real>(a: &ComplexMatrix<T>) -> Result<Schur<T>> {
    if !a.is_square() {
        return Err(Error::Dimension("Schur decomposition needs a square matrix".into()));
    }
    let n = a.rows();
    let mut h = a.clone();
    let mut q = ComplexMatrix::identity(n);
    hessenberg(&mut h, &mut q);

    let eps = T::epsilon();
    let anorm = a.frobenius_norm().max(T::min_positive_value());
    let max_iter = ITERATIONS_PER_EIGENVALUE * n.max(1);
    let mut total = 0usize;
    let mut hi = n.saturating_sub(1);
    let mut since_deflation = 0usize;

    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let s = if s == T::zero() { anorm } else { s };
            if h[(l, l - 1)].norm() <= eps * s {
                h[(l, l - 1)] = czero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        total += 1;
        since_deflation += 1;
        if total > max_iter {
            return Err(Error::NoConvergence { iterations: total });
        }

        let mu = if since_deflation % 11 == 10 {
            // Exceptional shift breaks cycling.
            h[(hi, hi)] + real(h[(hi, hi - 1)].re.abs() + h[(hi - 1, hi.saturating_sub(2))].re.abs())
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        for i in l..=hi {
            h[(i, i)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..n {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            h[(k + 1, k)] = czero();
            rots.push((c, s));
        }
        for (idx, k) in (l..hi).enumerate() {
            let (c, s) = rots[idx];
            let top = (k + 2).min(hi + 1);
            for i in 0..top {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + y * s.conj();
                h[(i, k + 1)] = -x * s + y * c;
            }
            for i in 0..n {
                let x = q[(i, k)];
                let y = q[(i, k + 1)];
                q[(i, k)] = x * c + y * s.conj();
                q[(i, k + 1)] = -x * s + y * c;
            }
        }
        for i in l..=hi {
            h[(i, i)] += mu;
        }
    }
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = czero();
        }
    }
    Ok(Schur { q, t: h, iterations: total })
}

/// Reduces `h` to upper Hessenberg form in place, accumulating into `q`.
fn hessenberg<T: Real>(h: &mut ComplexMatrix<T>, q: &mut ComplexMatrix<T>) {
    let n = h.rows();
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let x: Vec<Complex<T>> = (0..m).map(|i| h[(k + 1 + i, k)]).collect();
        let sigma = vec_norm(&x);
        let tail = x[1..].iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        if sigma == T::zero() || tail == T::zero() {
            continue;
        }
        let phase = if x[0].norm() > T::zero() { x[0] / x[0].norm() } else { real(T::one()) };
        let alpha = -phase * sigma;
        let mut v = x;
        v[0] -= alpha;
        let tau = T::lit(2.0) / v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        // Left: H <- (I - tau v v*) H on rows k+1..n.
        for j in 0..n {
            let mut s: Complex<T> = czero();
            for i in 0..m {
                s += v[i].conj() * h[(k + 1 + i, j)];
            }
            s = s * tau;
            for i in 0..m {
                let upd = v[i] * s;
                h[(k + 1 + i, j)] -= upd;
            }
        }
        // Right: H <- H (I - tau v v*) on cols k+1..n.
        for mat in [&mut *h, &mut *q] {
            for r in 0..n {
                let mut s: Complex<T> = czero();
                for j in 0..m {
                    s += mat[(r, k + 1 + j)] * v[j];
                }
                s = s * tau;
                for j in 0..m {
                    let upd = s * v[j].conj();
                    mat[(r, k + 1 + j)] -= upd;
                }
            }
        }
        for i in 1..m {
            h[(k + 1 + i, k)] = czero();
        }
    }
}

/// Eigenvalue of the trailing 2x2 block closest to its last diagonal entry.
fn wilkinson_shift<T: Real>(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Complex<T> {
    let half = T::lit(0.5);
    let m = (a + d) * half;
    let diff = (a - d) * half;
    let disc = (diff * diff + b * c).sqrt();
    let l1 = m + disc;
    let l2 = m - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Rotation `[c s; -conj(s) c]` mapping `(x, y)` to `(r, 0)`.
fn givens<T: Real>(x: Complex<T>, y: Complex<T>) -> (T, Complex<T>) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == T::zero() {
        return (T::one(), czero());
    }
    if ax == T::zero() {
        return (T::zero(), y.conj() / ay);
    }
    let r = ax.hypot(ay);
    let c = ax / r;
    let s = x * y.conj() / (ax * r);
    (c, s)
}

/// Eigenvectors of an upper triangular matrix, unit-norm columns. Near-equal
/// diagonal entries are separated by a small floor, as in LAPACK's `trevc`.
pub fn triangular_eigenvectors<T: Real>(t: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let n = t.rows();
    let floor = (T::epsilon() * t.frobenius_norm()).max(T::min_positive_value());
    let mut y = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let lam = t[(k, k)];
        y[(k, k)] = real(T::one());
        for i in (0..k).rev() {
            let mut s: Complex<T> = czero();
            for j in i + 1..=k {
                s += t[(i, j)] * y[(j, k)];
            }
            let mut den = t[(i, i)] - lam;
            if den.norm() < floor {
                den = real(floor);
            }
            y[(i, k)] = -s / den;
        }
        let nrm = (0..=k).fold(T::zero(), |acc, i| acc + y[(i, k)].norm_sqr()).sqrt();
        for i in 0..=k {
            y[(i, k)] = y[(i, k)] / nrm;
        }
    }
    y
}
