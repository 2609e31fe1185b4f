//! Generator families used by the experiments.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, ComplexMatrix};
use crate::matfun::Generator;
use crate::scalar::{real, Real};

/// Diagonal generator with eigenvalues `-k^{-a} + i k s`, `k = 1..=n`.
///
/// The resolvent along the imaginary axis grows like `|s|^a` and
/// `||e^{tA} A^{-1}||` decays like `t^{-1/a}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiagonalModelSpec<T: Real> {
    pub n: usize,
    pub a: T,
    pub frequency_scale: T,
}

impl<T: Real> DiagonalModelSpec<T> {
    pub fn new(n: usize, a: T) -> Self {
        Self { n, a, frequency_scale: T::one() }
    }

    pub fn eigenvalue(&self, k: usize) -> Complex<T> {
        let kf = T::from_usize_lossy(k);
        Complex::new(-kf.powf(-self.a), kf * self.frequency_scale)
    }

    pub fn eigenvalues(&self) -> Vec<Complex<T>> {
        (1..=self.n).map(|k| self.eigenvalue(k)).collect()
    }
}

pub fn build_diagonal<T: Real>(spec: &DiagonalModelSpec<T>) -> Result<Generator<T>> {
    if spec.n == 0 {
        return Err(Error::Parameter { name: "n", reason: "dimension must be at least 1".into() });
    }
    if !(spec.a > T::zero()) {
        return Err(Error::Parameter { name: "a", reason: format!("decay parameter must be positive, got {}", spec.a) });
    }
    if !(spec.frequency_scale > T::zero()) {
        return Err(Error::Parameter {
            name: "frequency_scale",
            reason: format!("must be positive, got {}", spec.frequency_scale),
        });
    }
    Generator::new(ComplexMatrix::from_diag(&spec.eigenvalues()))
}

/// Undamped generator `A`, damping operator `B` and the damped generator
/// `A_B = A - B B*`.
#[derive(Clone, Debug)]
pub struct DampedSystem<T: Real> {
    pub a: Generator<T>,
    pub b: ComplexMatrix<T>,
    pub a_b: Generator<T>,
}

impl<T: Real> DampedSystem<T> {
    pub fn b_adjoint(&self) -> ComplexMatrix<T> {
        self.b.adjoint()
    }
}

/// Forms `A_B = A - B B*` for a contractive `A`.
pub fn damp<T: Real>(a: &Generator<T>, b: &ComplexMatrix<T>) -> Result<DampedSystem<T>> {
    if b.rows() != a.dim() {
        return Err(Error::Dimension(format!("B has {} rows, generator has dimension {}", b.rows(), a.dim())));
    }
    if !a.is_contractive() {
        return Err(Error::NotContractive { margin: a.dissipativity_margin().as_f64() });
    }
    let bb = b.matmul(&b.adjoint());
    let a_b = Generator::new(a.matrix() - &bb)?;
    Ok(DampedSystem { a: a.clone(), b: b.clone(), a_b })
}

/// First-order energy form of `u_tt = u_xx - b(x) u_t` on `(0, 1)` with
/// Dirichlet ends and `n` interior nodes `x_j = j / (n + 1)`.
///
/// With `L` the positive second-difference matrix scaled by `(n+1)^2`, the
/// state `(L^{1/2} u, u_t)` evolves under `A = [[0, L^{1/2}], [-L^{1/2}, 0]]`
/// (skew-adjoint) and the damping enters through `B = [0; diag(sqrt(b(x_j)))]`.
pub fn build_damped_wave<T: Real>(n: usize, damping: impl Fn(T) -> T) -> Result<DampedSystem<T>> {
    if n < 2 {
        return Err(Error::Parameter { name: "n", reason: format!("need at least 2 interior nodes, got {n}") });
    }
    let h_inv = T::from_usize_lossy(n + 1);
    let scale = h_inv * h_inv;
    let two = T::lit(2.0);
    let lap = ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            real(two * scale)
        } else if i.abs_diff(j) == 1 {
            real(-scale)
        } else {
            real(T::zero())
        }
    });
    let eig = hermitian_eigen(&lap, true)?;
    let u = eig.vectors.expect("vectors requested");
    let roots: Vec<Complex<T>> = eig.values.iter().map(|&mu| real(mu.max(T::zero()).sqrt())).collect();
    let sqrt_lap = (&u.scale_cols(&roots) * &u.adjoint()).hermitian_part();

    let zero = ComplexMatrix::zeros(n, n);
    let a = ComplexMatrix::block(&[&[&zero, &sqrt_lap], &[&(-&sqrt_lap), &zero]])?;

    let mut diag = Vec::with_capacity(n);
    for j in 1..=n {
        let x = T::from_usize_lossy(j) / h_inv;
        let b = damping(x);
        if !(b >= T::zero()) || !b.is_finite() {
            return Err(Error::Parameter {
                name: "damping",
                reason: format!("damping must be nonnegative and finite, got {b} at x = {x}"),
            });
        }
        diag.push(real(b.sqrt()));
    }
    let b = ComplexMatrix::block(&[&[&zero], &[&ComplexMatrix::from_diag(&diag)]])?;
    damp(&Generator::new(a)?, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{min_hermitian_eigenvalue, vec_norm};
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_examples() {
        let g = build_diagonal(&DiagonalModelSpec::new(1, 1.0)).unwrap();
        assert_eq!(g.matrix()[(0, 0)], c(-1.0, 1.0));

        let g = build_diagonal(&DiagonalModelSpec::new(3, 2.0)).unwrap();
        assert_eq!(g.eigenvalues(), &[c(-1.0, 1.0), c(-0.25, 2.0), c(-1.0 / 9.0, 3.0)]);
        assert!(g.spectral().normal);

        let g = build_diagonal(&DiagonalModelSpec::new(200, 1.0)).unwrap();
        assert!((g.spectral_abscissa() + 1.0 / 200.0f64).abs() < 1e-16);
        assert!((g.dissipativity_margin() + 1.0 / 200.0f64).abs() < 1e-15);

        assert!(build_diagonal(&DiagonalModelSpec::new(0, 1.0)).is_err());
        assert!(build_diagonal(&DiagonalModelSpec::new(3, 0.0)).is_err());
    }

    #[test]
    fn resolvent_at_eigenfrequency() {
        let spec = DiagonalModelSpec::new(30, 1.5);
        let g = build_diagonal(&spec).unwrap();
        for k in [3usize, 10, 20] {
            let norm = g.resolvent_norm(c(0.0, k as f64)).unwrap();
            // oracle: min-distance formula over all modes
            let oracle = spec
                .eigenvalues()
                .iter()
                .map(|l| 1.0 / (c(0.0, k as f64) - l).norm())
                .fold(0.0, f64::max);
            assert!((norm - oracle).abs() < 1e-9 * oracle);
            assert!((norm - (k as f64).powf(1.5)).abs() < 1e-9 * norm);
        }
    }

    #[test]
    fn damp_examples() {
        let a = Generator::new(ComplexMatrix::new(1, 1, vec![c(0.0, 1.0)]).unwrap()).unwrap();
        let s = damp(&a, &ComplexMatrix::from_real(1, 1, &[1.0]).unwrap()).unwrap();
        assert_eq!(s.a_b.matrix()[(0, 0)], c(-1.0, 1.0));

        let a = Generator::new(ComplexMatrix::from_real(1, 1, &[-1.0]).unwrap()).unwrap();
        let s = damp(&a, &ComplexMatrix::from_real(1, 1, &[0.0]).unwrap()).unwrap();
        assert_eq!(s.a_b.matrix(), a.matrix());

        let a = Generator::new(ComplexMatrix::from_real(2, 2, &[0.0, 1.0, -1.0, 0.0]).unwrap()).unwrap();
        let s = damp(&a, &ComplexMatrix::from_real(2, 1, &[0.0, 1.0]).unwrap()).unwrap();
        assert_eq!(s.a_b.matrix(), &ComplexMatrix::from_real(2, 2, &[0.0, 1.0, -1.0, -1.0]).unwrap());
        assert!(s.a_b.dissipativity_margin() <= s.a.dissipativity_margin());

        let bad = Generator::new(ComplexMatrix::from_real(1, 1, &[0.5]).unwrap()).unwrap();
        assert!(matches!(
            damp(&bad, &ComplexMatrix::from_real(1, 1, &[1.0]).unwrap()),
            Err(Error::NotContractive { .. })
        ));
        assert!(damp(&a, &ComplexMatrix::from_real(3, 1, &[0.0, 1.0, 0.0]).unwrap()).is_err());
    }

    #[test]
    fn undamped_wave_is_conservative() {
        let s = build_damped_wave(2, |_: f64| 0.0).unwrap();
        assert_eq!(s.a.dissipativity_margin(), 0.0);
        let mut im: Vec<f64> = s.a.eigenvalues().iter().map(|l| l.im).collect();
        im.sort_by(f64::total_cmp);
        // eig L = 9 * {1, 3}
        let expect = [-27f64.sqrt(), -3.0, 3.0, 27f64.sqrt()];
        for (x, y) in im.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(s.a.eigenvalues().iter().all(|l| l.re.abs() < 1e-12));

        let s = build_damped_wave(8, |_: f64| 0.0).unwrap();
        let z: Vec<Complex64> = (0..16).map(|i| c((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let e0 = vec_norm(&z);
        for k in 0..=20 {
            let t = 0.5 * k as f64;
            let e = vec_norm(&s.a.semigroup_apply(t, &z).unwrap());
            assert!((e - e0).abs() < 1e-8 * e0);
        }
    }

    #[test]
    fn uniformly_damped_wave() {
        let s = build_damped_wave(2, |_: f64| 1.0).unwrap();
        // (A_B + A_B*)/2 = -B B* = diag(0, 0, -1, -1)
        assert!(s.a_b.dissipativity_margin().abs() < 1e-14);
        assert!((min_hermitian_eigenvalue(s.a_b.matrix()).unwrap() + 1.0).abs() < 1e-14);

        let s = build_damped_wave(40, |_: f64| 1.0).unwrap();
        assert!(s.a_b.spectral_abscissa() < 0.0);
        assert_eq!(s.b.rows(), 80);
        assert_eq!(s.b.cols(), 40);

        assert!(build_damped_wave(4, |x: f64| x - 0.5).is_err());
        assert!(build_damped_wave(1, |_: f64| 1.0).is_err());
    }
}
