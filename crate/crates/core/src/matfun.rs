//! Matrix functions of a finite-dimensional generator: spectral data, the
//! semigroup `e^{tA}`, fractional resolvent powers `(I - A)^{-beta}` and
//! resolvents `(lambda - A)^{-1}`.

use std::cmp::Ordering;

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, vec_norm, CVector, ComplexMatrix};
use crate::scalar::{cone, real, Real};

/// Eigenvector condition estimates above this are refused by spectral
/// matrix functions (fractional powers, Lyapunov) and make the semigroup fall
/// back to the dense Padé exponential.
pub const CONDITION_LIMIT: f64 = 1e6;

/// Relative Frobenius bound on the strictly upper Schur part below which a
/// matrix is treated as normal, scaled by `sqrt(n)`.
const NORMALITY_TOL: f64 = 1e3;

/// Relative tolerance used for distance-to-spectrum checks.
const SPECTRUM_TOL: f64 = 1e-12;

/// Eigenvalues and eigenvectors of a square matrix, sorted by `(Re, Im)`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition<T: Real> {
    pub eigenvalues: Vec<Complex<T>>,
    /// Eigenvectors as unit-norm columns.
    pub eigenvectors: ComplexMatrix<T>,
    /// `V^{-1}`, absent when `V` is numerically singular (defective input).
    inverse: Option<ComplexMatrix<T>>,
    /// `||V|| ||V^{-1}||` in the 2-norm; infinite when `V` is singular.
    pub condition: T,
    /// True when the Schur form is diagonal to working precision, in which
    /// case the eigenvectors are the (unitary) Schur vectors.
    pub normal: bool,
    pub iterations: usize,
}

impl<T: Real> SpectralDecomposition<T> {
    pub fn inverse_eigenvectors(&self) -> Option<&ComplexMatrix<T>> {
        self.inverse.as_ref()
    }

    /// `V diag(f(lambda_k)) V^{-1}`.
    pub fn apply_function(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Result<ComplexMatrix<T>> {
        let inv = self.well_conditioned_inverse()?;
        let d: Vec<Complex<T>> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        Ok(&self.eigenvectors.scale_cols(&d) * inv)
    }

    pub(crate) fn well_conditioned_inverse(&self) -> Result<&ComplexMatrix<T>> {
        match &self.inverse {
            Some(inv) if self.condition.as_f64() <= CONDITION_LIMIT => Ok(inv),
            _ => Err(Error::IllConditioned { condition: self.condition.as_f64(), limit: CONDITION_LIMIT }),
        }
    }

    pub fn is_well_conditioned(&self) -> bool {
        self.inverse.is_some() && self.condition.as_f64() <= CONDITION_LIMIT
    }

    /// `||A V - V diag(lambda)||_F`.
    pub fn reconstruction_residual(&self, a: &ComplexMatrix<T>) -> T {
        let av = a * &self.eigenvectors;
        let vl = self.eigenvectors.scale_cols(&self.eigenvalues);
        (&av - &vl).frobenius_norm()
    }
}

pub fn decompose<T: Real>(a: &ComplexMatrix<T>) -> Result<SpectralDecomposition<T>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("generator must be square, got {}x{}", a.rows(), a.cols())));
    }
    if !a.all_finite() {
        return Err(Error::NonFinite { row: 0, col: 0 });
    }
    let n = a.rows();
    let s = linalg::schur(a)?;
    let mut offdiag = T::zero();
    for i in 0..n {
        for j in i + 1..n {
            offdiag += s.t[(i, j)].norm_sqr();
        }
    }
    let scale = a.frobenius_norm().max(T::min_positive_value());
    let tol = T::lit(NORMALITY_TOL) * T::epsilon() * T::from_usize_lossy(n).sqrt();
    let normal = offdiag.sqrt() <= tol * scale;

    let values = s.t.diagonal();
    let vectors = if normal { s.q.clone() } else { &s.q * &linalg::triangular_eigenvectors(&s.t) };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (x, y) = (values[i], values[j]);
        x.re.partial_cmp(&y.re).unwrap_or(Ordering::Equal).then(x.im.partial_cmp(&y.im).unwrap_or(Ordering::Equal))
    });
    let eigenvalues: Vec<Complex<T>> = order.iter().map(|&i| values[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);

    let (inverse, condition) = if normal {
        let gram = eigenvectors.adjoint_mul(&eigenvectors);
        let dev = (&gram - &ComplexMatrix::identity(n)).frobenius_norm();
        let kappa = if dev < T::one() { ((T::one() + dev) / (T::one() - dev)).sqrt() } else { T::infinity() };
        (Some(eigenvectors.adjoint()), kappa)
    } else {
        match eigenvectors.inverse() {
            Ok(inv) => {
                let kappa = linalg::norm2(&eigenvectors)? * linalg::norm2(&inv)?;
                if kappa.is_finite() {
                    (Some(inv), kappa)
                } else {
                    (None, T::infinity())
                }
            }
            Err(Error::Singular) => (None, T::infinity()),
            Err(e) => return Err(e),
        }
    };

    Ok(SpectralDecomposition { eigenvalues, eigenvectors, inverse, condition, normal, iterations: s.iterations })
}

/// Finite-dimensional generator `A` with cached spectral data.
#[derive(Clone, Debug)]
pub struct Generator<T: Real> {
    matrix: ComplexMatrix<T>,
    spectral: SpectralDecomposition<T>,
    dissipativity_margin: T,
    spectral_abscissa: T,
}

/// Compact description of a generator for reports.
#[derive(Clone, Debug, Serialize)]
pub struct GeneratorSummary {
    pub dimension: usize,
    pub spectral_abscissa: f64,
    pub dissipativity_margin: f64,
    pub eigenvector_condition: f64,
    pub normal: bool,
}

impl<T: Real> Generator<T> {
    pub fn new(matrix: ComplexMatrix<T>) -> Result<Self> {
        let spectral = decompose(&matrix)?;
        let dissipativity_margin = linalg::max_hermitian_eigenvalue(&matrix)?;
        let spectral_abscissa = spectral.eigenvalues.iter().map(|l| l.re).fold(T::neg_infinity(), T::max);
        Ok(Self { matrix, spectral, dissipativity_margin, spectral_abscissa })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn spectral(&self) -> &SpectralDecomposition<T> {
        &self.spectral
    }

    pub fn eigenvalues(&self) -> &[Complex<T>] {
        &self.spectral.eigenvalues
    }

    /// Largest eigenvalue of `(A + A*)/2`.
    pub fn dissipativity_margin(&self) -> T {
        self.dissipativity_margin
    }

    /// `max Re lambda`.
    pub fn spectral_abscissa(&self) -> T {
        self.spectral_abscissa
    }

    /// The generated semigroup is contractive iff the margin is nonpositive.
    pub fn is_contractive(&self) -> bool {
        self.dissipativity_margin <= T::lit(1e3) * T::epsilon() * self.matrix.frobenius_norm()
    }

    pub fn summary(&self) -> GeneratorSummary {
        GeneratorSummary {
            dimension: self.dim(),
            spectral_abscissa: self.spectral_abscissa.as_f64(),
            dissipativity_margin: self.dissipativity_margin.as_f64(),
            eigenvector_condition: self.spectral.condition.as_f64(),
            normal: self.spectral.normal,
        }
    }

    pub(crate) fn require_stable(&self) -> Result<()> {
        if self.spectral_abscissa < T::zero() {
            Ok(())
        } else {
            Err(Error::NotStable { abscissa: self.spectral_abscissa.as_f64() })
        }
    }

    /// `min_k |lambda - lambda_k|`.
    pub fn distance_to_spectrum(&self, lambda: Complex<T>) -> T {
        self.spectral.eigenvalues.iter().map(|&l| (lambda - l).norm()).fold(T::infinity(), T::min)
    }

    fn spectrum_tolerance(&self) -> T {
        T::lit(SPECTRUM_TOL) * (T::one() + self.matrix.frobenius_norm())
    }

    /// Dense `e^{tA}`.
    pub fn semigroup(&self, t: T) -> Result<ComplexMatrix<T>> {
        check_time(t)?;
        if t == T::zero() {
            return Ok(ComplexMatrix::identity(self.dim()));
        }
        if self.spectral.is_well_conditioned() {
            self.spectral.apply_function(|l| (l * t).exp())
        } else {
            linalg::expm(&self.matrix.scale_real(t))
        }
    }

    /// `e^{tA} x`.
    pub fn semigroup_apply(&self, t: T, x: &[Complex<T>]) -> Result<CVector<T>> {
        check_time(t)?;
        self.check_vector(x)?;
        if self.spectral.is_well_conditioned() {
            let inv = self.spectral.well_conditioned_inverse()?;
            let c = inv.matvec(x);
            let z: CVector<T> = c.iter().zip(&self.spectral.eigenvalues).map(|(&ci, &l)| ci * (l * t).exp()).collect();
            Ok(self.spectral.eigenvectors.matvec(&z))
        } else {
            Ok(self.semigroup(t)?.matvec(x))
        }
    }

    /// `(I - A)^{-beta}` on the principal branch.
    pub fn fractional_operator(&self, beta: T) -> Result<FractionalOperator<T>> {
        if !(beta > T::zero()) || !beta.is_finite() {
            return Err(Error::Parameter { name: "beta", reason: format!("must be positive, got {beta}") });
        }
        let distance = self.distance_to_spectrum(cone());
        if distance <= self.spectrum_tolerance() {
            return Err(Error::FractionalSingularity { distance: distance.as_f64() });
        }
        let matrix = self.spectral.apply_function(|l| principal_power(cone::<T>() - l, -beta))?;
        Ok(FractionalOperator { beta, matrix, branch: Branch::Principal })
    }

    /// `A^{-1}`.
    pub fn inverse(&self) -> Result<ComplexMatrix<T>> {
        let distance = self.distance_to_spectrum(Complex::new(T::zero(), T::zero()));
        if distance <= self.spectrum_tolerance() {
            return Err(Error::NearSingular { distance: distance.as_f64() });
        }
        self.matrix.inverse()
    }

    fn shifted(&self, lambda: Complex<T>) -> Result<ComplexMatrix<T>> {
        let distance = self.distance_to_spectrum(lambda);
        if distance <= self.spectrum_tolerance() {
            return Err(Error::NearSingular { distance: distance.as_f64() });
        }
        Ok((-&self.matrix).shift(lambda))
    }

    /// Dense `(lambda - A)^{-1}`.
    pub fn resolvent(&self, lambda: Complex<T>) -> Result<ComplexMatrix<T>> {
        self.shifted(lambda)?.inverse().map_err(|_| Error::NearSingular {
            distance: self.distance_to_spectrum(lambda).as_f64(),
        })
    }

    /// Solves `(lambda - A) y = x`.
    pub fn resolvent_apply(&self, lambda: Complex<T>, x: &[Complex<T>]) -> Result<CVector<T>> {
        self.check_vector(x)?;
        let m = self.shifted(lambda)?;
        let distance = || Error::NearSingular { distance: self.distance_to_spectrum(lambda).as_f64() };
        let y = m.solve(x).map_err(|_| distance())?;
        let r = m.matvec(&y);
        let residual = vec_norm(&r.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>());
        if residual > T::epsilon().sqrt() * vec_norm(x) {
            return Err(distance());
        }
        Ok(y)
    }

    /// `||(lambda - A)^{-1}||_2`; uses the spectral formula
    /// `max_k 1/|lambda - lambda_k|` for normal generators.
    pub fn resolvent_norm(&self, lambda: Complex<T>) -> Result<T> {
        if self.spectral.normal {
            let distance = self.distance_to_spectrum(lambda);
            if distance <= self.spectrum_tolerance() {
                return Err(Error::NearSingular { distance: distance.as_f64() });
            }
            Ok(T::one() / distance)
        } else {
            self.resolvent_norm_dense(lambda)
        }
    }

    /// `||(lambda - A)^{-1}||_2` from the explicit inverse, for any generator.
    pub fn resolvent_norm_dense(&self, lambda: Complex<T>) -> Result<T> {
        linalg::norm2(&self.resolvent(lambda)?)
    }

    fn check_vector(&self, x: &[Complex<T>]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!("vector of length {} for generator of size {}", x.len(), self.dim())));
        }
        Ok(())
    }
}

fn check_time<T: Real>(t: T) -> Result<()> {
    if t >= T::zero() && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter { name: "t", reason: format!("must be nonnegative and finite, got {t}") })
    }
}

/// `z^p = exp(p Log z)` with the principal logarithm.
pub fn principal_power<T: Real>(z: Complex<T>, p: T) -> Complex<T> {
    (z.ln() * p).exp()
}

/// Branch of the logarithm used for fractional powers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// `(1 - lambda)^{-beta} = exp(-beta Log(1 - lambda))`, `Im Log in (-pi, pi]`.
    Principal,
}

/// `(I - A)^{-beta}`.
#[derive(Clone, Debug)]
pub struct FractionalOperator<T: Real> {
    pub beta: T,
    pub matrix: ComplexMatrix<T>,
    pub branch: Branch,
}

pub fn semigroup_apply<T: Real>(a: &Generator<T>, t: T, x: &[Complex<T>]) -> Result<CVector<T>> {
    a.semigroup_apply(t, x)
}

pub fn fractional_operator<T: Real>(a: &Generator<T>, beta: T) -> Result<FractionalOperator<T>> {
    a.fractional_operator(beta)
}

pub fn resolvent_apply<T: Real>(a: &Generator<T>, lambda: Complex<T>, x: &[Complex<T>]) -> Result<CVector<T>> {
    a.resolvent_apply(lambda, x)
}

pub fn resolvent_norm<T: Real>(a: &Generator<T>, lambda: Complex<T>) -> Result<T> {
    a.resolvent_norm(lambda)
}

/// `(I - A)^{-beta}` with the convention that `beta = 0` gives the identity.
pub(crate) fn weight<T: Real>(a: &Generator<T>, beta: T) -> Result<ComplexMatrix<T>> {
    if beta == T::zero() {
        Ok(ComplexMatrix::identity(a.dim()))
    } else {
        Ok(a.fractional_operator(beta)?.matrix)
    }
}

#[allow(dead_code)]
pub(crate) fn real_vec<T: Real>(v: &[T]) -> CVector<T> {
    v.iter().map(|&x| real(x)).collect()
}
