//! The Lyapunov operator `P = int_0^inf e^{tA*} e^{tA} dt`, its direct and
//! quadrature constructions, and weighted boundedness certificates.
//!
//! The pairing on the fractional domain is realized by the weight
//! `F_beta = (I - A)^{-beta}`: `P` is bounded from the weighted space into
//! its antidual with norm `||F_beta* P F_beta||_2`.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::fit_log_log;
use crate::linalg::{self, ComplexMatrix};
use crate::matfun::{weight, Generator};
use crate::orbits::{datko_constant, envelope, initial_horizon, semi_infinite_vec, ProbeSet, VecIntegral};
use crate::quadrature::{geometric_breakpoints, integrate_pieces, Tolerance, DEFAULT_NODE_BUDGET};
use crate::scalar::Real;

/// Successive dimension ratios inside `[1/UNIFORM_BAND, UNIFORM_BAND]`
/// count as dimension-uniform.
pub const UNIFORM_BAND: f64 = 1.25;
/// Relative tolerance on a predicted growth ratio.
pub const GROWTH_TOL: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    Direct,
    Quadrature,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureInfo<T: Real> {
    pub error: T,
    pub nodes: usize,
    pub tail_bound: T,
    pub horizon: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightedEntry<T: Real> {
    pub beta: T,
    /// `||F_beta* P F_beta||_2`.
    pub norm: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct LyapunovCertificate<T: Real> {
    #[serde(skip)]
    pub p: ComplexMatrix<T>,
    /// `||A* P + P A + I||_F`.
    pub residual: T,
    /// `||P - P*||_F / ||P||_F` before symmetrization.
    pub asymmetry: T,
    /// Smallest eigenvalue of the Hermitian part of `P`.
    pub positivity_margin: T,
    pub weighted_norms: Vec<WeightedEntry<T>>,
    pub construction: Construction,
    pub quadrature: Option<QuadratureInfo<T>>,
}

impl<T: Real> LyapunovCertificate<T> {
    pub fn weighted_norm(&self, beta: T) -> Option<T> {
        self.weighted_norms.iter().find(|w| w.beta == beta).map(|w| w.norm)
    }
}

fn lyapunov_residual<T: Real>(a: &ComplexMatrix<T>, p: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let r = &a.adjoint_mul(p) + &p.matmul(a);
    r.shift(Complex::new(T::one(), T::zero()))
}

fn certificate<T: Real>(
    a: &Generator<T>,
    raw: ComplexMatrix<T>,
    construction: Construction,
    quadrature: Option<QuadratureInfo<T>>,
) -> Result<LyapunovCertificate<T>> {
    let scale = raw.frobenius_norm().max(T::min_positive_value());
    let asymmetry = (&raw - &raw.adjoint()).frobenius_norm() / scale;
    let p = raw.hermitian_part();
    let residual = lyapunov_residual(a.matrix(), &p).frobenius_norm();
    let positivity_margin = linalg::min_hermitian_eigenvalue(&p)?;
    Ok(LyapunovCertificate {
        p,
        residual,
        asymmetry,
        positivity_margin,
        weighted_norms: Vec::new(),
        construction,
        quadrature,
    })
}

/// Solves `A* P + P A = -I` in eigencoordinates:
/// `P = V^{-*} Pt V^{-1}` with `Pt_jk = -(V*V)_jk / (conj(l_j) + l_k)`.
pub fn lyap_direct<T: Real>(a: &Generator<T>) -> Result<LyapunovCertificate<T>> {
    let p = lyapunov_direct_rhs(a, &ComplexMatrix::identity(a.dim()))?;
    certificate(a, p, Construction::Direct, None)
}

/// Solves `A* P + P A = -X` in eigencoordinates.
pub(crate) fn lyapunov_direct_rhs<T: Real>(a: &Generator<T>, x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    a.require_stable()?;
    let sp = a.spectral();
    let w = sp.well_conditioned_inverse()?;
    let v = &sp.eigenvectors;
    let q = v.adjoint_mul(&x.matmul(v));
    let l = &sp.eigenvalues;
    let n = a.dim();
    let tol = T::lit(1e-12) * (T::one() + a.matrix().frobenius_norm());
    let mut margin = T::infinity();
    let mut pt = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            let s = l[j].conj() + l[k];
            margin = margin.min(s.norm());
            pt[(j, k)] = -q[(j, k)] / s;
        }
    }
    if margin <= tol {
        return Err(Error::LyapunovSingular { margin: margin.as_f64() });
    }
    Ok(w.adjoint_mul(&pt.matmul(w)))
}

/// `int_0^inf e^{tA*} X e^{tA} dt`: direct when the eigenbasis is well
/// conditioned, by quadrature otherwise.
pub(crate) fn solve_lyapunov<T: Real>(a: &Generator<T>, x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let p = if a.spectral().is_well_conditioned() {
        lyapunov_direct_rhs(a, x)?
    } else {
        gram_integral(a, x, None, T::lit(1e-10), DEFAULT_NODE_BUDGET)?.0
    };
    Ok(p.hermitian_part())
}

fn flatten<T: Real>(m: &ComplexMatrix<T>) -> Vec<T> {
    m.as_slice().iter().flat_map(|z| [z.re, z.im]).collect()
}

fn unflatten<T: Real>(n: usize, v: &[T]) -> Result<ComplexMatrix<T>> {
    ComplexMatrix::new(n, n, v.chunks(2).map(|c| Complex::new(c[0], c[1])).collect())
}

/// `int_0^h e^{tA*} X e^{tA} dt` for `h` finite or infinite.
///
/// With a well-conditioned eigenbasis the integrand is
/// `V^{-*} [ (V* X V)_jk e^{(conj(l_j) + l_k) t} ] V^{-1}` and only the
/// bracketed matrix is integrated, to relative accuracy `rel_tol / kappa^2`;
/// otherwise the dense exponential is evaluated at every node.
pub(crate) fn gram_integral<T: Real>(
    a: &Generator<T>,
    x: &ComplexMatrix<T>,
    horizon: Option<T>,
    rel_tol: T,
    max_nodes: usize,
) -> Result<(ComplexMatrix<T>, QuadratureInfo<T>)> {
    let n = a.dim();
    if x.rows() != n || x.cols() != n {
        return Err(Error::Dimension(format!("core matrix is {}x{}, expected {n}x{n}", x.rows(), x.cols())));
    }
    if !(rel_tol > T::zero() && rel_tol < T::one()) {
        return Err(Error::Parameter { name: "rel_tol", reason: format!("must lie in (0, 1), got {rel_tol}") });
    }
    let dim = 2 * n * n;
    let sp = a.spectral();
    if sp.is_well_conditioned() {
        let w = sp.well_conditioned_inverse()?;
        let v = &sp.eigenvectors;
        let core = v.adjoint_mul(&x.matmul(v));
        let l = &sp.eigenvalues;
        let rates: Vec<Complex<T>> = (0..n).flat_map(|j| (0..n).map(move |k| l[j].conj() + l[k])).collect();
        let coeffs = core.as_slice().to_vec();
        let integrand = |t: T| -> Vec<T> {
            coeffs.iter().zip(&rates).flat_map(|(&c, &s)| {
                let z = c * (s * t).exp();
                [z.re, z.im]
            }).collect()
        };
        let kappa = sp.condition.max(T::one());
        let modal_tol = (rel_tol / (kappa * kappa)).max(T::lit(1e-14));
        let w_norm = linalg::norm2(w)?;
        let raw = match horizon {
            Some(h) => finite(integrand, dim, h, modal_tol, max_nodes)?,
            None => {
                a.require_stable()?;
                let tail = |h: T| {
                    coeffs
                        .iter()
                        .zip(&rates)
                        .map(|(&c, &s)| {
                            let e = c.norm() * (s.re * h).exp() / s.norm();
                            e * e
                        })
                        .fold(T::zero(), |acc, x| acc + x)
                        .sqrt()
                };
                semi_infinite_vec(
                    integrand,
                    dim,
                    tail,
                    initial_horizon(a.spectral_abscissa(), T::lit(2.0)),
                    modal_tol,
                    T::zero(),
                    max_nodes,
                )?
            }
        };
        let inner = unflatten(n, &raw.value)?;
        let scale = w_norm * w_norm;
        let info = QuadratureInfo {
            error: raw.error * scale,
            nodes: raw.nodes,
            tail_bound: raw.tail_bound * scale,
            horizon: raw.horizon,
        };
        return Ok((w.adjoint_mul(&inner.matmul(w)), info));
    }

    let am = a.matrix().clone();
    let integrand = |t: T| -> Vec<T> {
        match linalg::expm(&am.scale_real(t)) {
            Ok(e) => flatten(&e.adjoint_mul(&x.matmul(&e))),
            Err(_) => vec![T::nan(); dim],
        }
    };
    let raw = match horizon {
        Some(h) => finite(integrand, dim, h, rel_tol, max_nodes)?,
        None => {
            let env = envelope(a)?;
            let x_norm = linalg::norm2(x)?;
            let root_n = T::from_usize_lossy(n).sqrt();
            let tail = |h: T| {
                root_n * x_norm * env.constant * env.constant * (T::lit(2.0) * env.rate * h).exp()
                    / (T::lit(2.0) * env.rate.abs())
            };
            semi_infinite_vec(integrand, dim, tail, initial_horizon(env.rate, T::lit(2.0)), rel_tol, T::zero(), max_nodes)?
        }
    };
    if raw.value.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: 0, col: 0 });
    }
    let info = QuadratureInfo { error: raw.error, nodes: raw.nodes, tail_bound: raw.tail_bound, horizon: raw.horizon };
    Ok((unflatten(n, &raw.value)?, info))
}

fn finite<T: Real>(
    f: impl FnMut(T) -> Vec<T>,
    dim: usize,
    h: T,
    rel_tol: T,
    max_nodes: usize,
) -> Result<VecIntegral<T>> {
    if !(h > T::zero()) || !h.is_finite() {
        return Err(Error::Parameter { name: "tau", reason: format!("must be positive, got {h}") });
    }
    let r = integrate_pieces(f, &geometric_breakpoints(T::zero(), h), dim, Tolerance::relative(rel_tol).with_budget(max_nodes))?;
    Ok(VecIntegral { value: r.value, error: r.error, nodes: r.nodes, tail_bound: T::zero(), horizon: h })
}

/// `P = int_0^inf e^{tA*} e^{tA} dt` by adaptive quadrature with a
/// certified tail.
pub fn lyap_quadrature<T: Real>(a: &Generator<T>, rel_tol: T) -> Result<LyapunovCertificate<T>> {
    a.require_stable()?;
    let (p, info) = gram_integral(a, &ComplexMatrix::identity(a.dim()), None, rel_tol, DEFAULT_NODE_BUDGET)?;
    certificate(a, p, Construction::Quadrature, Some(info))
}

/// Adds `||F_beta* P F_beta||_2` for every `beta` in `betas`.
pub fn weighted_certificate<T: Real>(
    cert: &LyapunovCertificate<T>,
    a: &Generator<T>,
    betas: &[T],
) -> Result<LyapunovCertificate<T>> {
    check_dims(cert, a)?;
    let mut out = cert.clone();
    for &beta in betas {
        let f = weight(a, beta)?;
        let norm = linalg::norm2(&f.adjoint_mul(&cert.p.matmul(&f)))?;
        out.weighted_norms.retain(|w| w.beta != beta);
        out.weighted_norms.push(WeightedEntry { beta, norm });
    }
    Ok(out)
}

fn check_dims<T: Real>(cert: &LyapunovCertificate<T>, a: &Generator<T>) -> Result<()> {
    if cert.p.rows() != a.dim() {
        return Err(Error::Dimension(format!("certificate of size {} for generator of size {}", cert.p.rows(), a.dim())));
    }
    Ok(())
}

/// `||F_{beta+1}* (A* P + P A + I) F_{beta+1}||_F`.
pub fn lyap_residual_weighted<T: Real>(cert: &LyapunovCertificate<T>, a: &Generator<T>, beta: T) -> Result<T> {
    check_dims(cert, a)?;
    let f = weight(a, beta + T::one())?;
    let r = lyapunov_residual(a.matrix(), &cert.p);
    Ok(f.adjoint_mul(&r.matmul(&f)).frobenius_norm())
}

#[derive(Clone, Debug, Serialize)]
pub struct Prop31Report<T: Real> {
    pub beta: T,
    /// `K^2` of the Datko functional with `p = 2`.
    pub datko_k2: T,
    pub weighted_norm: T,
    pub residual_weighted: T,
    pub positivity_margin: T,
    /// `||P_quad - P_direct||_F / ||P_direct||_F`.
    pub construction_gap: T,
    /// `K^2 <= ||F* P F||` (the sup over all data equals the weighted norm).
    pub datko_within_weighted: bool,
    pub datko_finite: bool,
    pub lyapunov_certified: bool,
    pub unique: bool,
    pub equivalent: bool,
}

/// Both sides of the Datko/Lyapunov equivalence for one generator.
pub fn prop31_roundtrip<T: Real>(a: &Generator<T>, beta: T) -> Result<Prop31Report<T>> {
    prop31_with(a, beta, &ProbeSet::default())
}

pub fn prop31_with<T: Real>(a: &Generator<T>, beta: T, probes: &ProbeSet<T>) -> Result<Prop31Report<T>> {
    a.require_stable()?;
    let two = T::lit(2.0);
    let datko = datko_constant(a, beta, two, probes)?;
    let direct = weighted_certificate(&lyap_direct(a)?, a, &[beta])?;
    let quad = lyap_quadrature(a, T::lit(1e-8))?;
    let weighted_norm = direct.weighted_norms[0].norm;
    let residual_weighted = lyap_residual_weighted(&direct, a, beta)?;
    let construction_gap = (&quad.p - &direct.p).frobenius_norm() / direct.p.frobenius_norm();
    let datko_k2 = datko.k_pow();

    let datko_finite = datko_k2.is_finite();
    let residual_scale = T::lit(1e-8) * (T::one() + direct.p.frobenius_norm());
    let lyapunov_certified = weighted_norm.is_finite()
        && direct.positivity_margin >= -T::lit(1e-10)
        && residual_weighted <= residual_scale;
    let unique = construction_gap <= T::lit(1e-5);
    Ok(Prop31Report {
        beta,
        datko_k2,
        weighted_norm,
        residual_weighted,
        positivity_margin: direct.positivity_margin,
        construction_gap,
        datko_within_weighted: datko_k2 <= weighted_norm * (T::one() + T::lit(1e-6)),
        datko_finite,
        lyapunov_certified,
        unique,
        equivalent: datko_finite == lyapunov_certified,
    })
}

/// Ratio statistics of a positive quantity over increasing dimensions.
#[derive(Clone, Debug, Serialize)]
pub struct DimensionTable<T: Real> {
    pub dims: Vec<usize>,
    pub values: Vec<T>,
    /// `values[i+1] / values[i]`.
    pub ratios: Vec<T>,
    /// Log-log slope of value against dimension.
    pub growth_exponent: Option<T>,
}

impl<T: Real> DimensionTable<T> {
    pub fn new(dims: Vec<usize>, values: Vec<T>) -> Self {
        let ratios = values.windows(2).map(|w| w[1] / w[0]).collect();
        let xs: Vec<T> = dims.iter().map(|&n| T::from_usize_lossy(n)).collect();
        let growth_exponent = if dims.len() >= 2 { fit_log_log(&xs, &values).ok().map(|f| f.slope) } else { None };
        Self { dims, values, ratios, growth_exponent }
    }

    /// All successive ratios within `[1/1.25, 1.25]`.
    pub fn uniform(&self) -> bool {
        let band = T::lit(UNIFORM_BAND);
        self.ratios.iter().all(|&r| r >= T::one() / band && r <= band)
    }

    /// All successive ratios within 20% of `(N2/N1)^exponent`.
    pub fn matches_growth(&self, exponent: T) -> bool {
        self.dims.windows(2).zip(&self.ratios).all(|(d, &r)| {
            let expect = (T::from_usize_lossy(d[1]) / T::from_usize_lossy(d[0])).powf(exponent);
            ((r / expect) - T::one()).abs() <= T::lit(GROWTH_TOL)
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Prop31Sweep<T: Real> {
    pub beta: T,
    pub reports: Vec<Prop31Report<T>>,
    pub datko: DimensionTable<T>,
    pub weighted: DimensionTable<T>,
    /// Both sides uniform, or both non-uniform.
    pub consistent: bool,
}

/// Runs [`prop31_roundtrip`] over a family `(N, A_N)` in increasing `N`.
pub fn prop31_sweep<T: Real>(family: &[(usize, Generator<T>)], beta: T) -> Result<Prop31Sweep<T>> {
    let reports = family.iter().map(|(_, a)| prop31_roundtrip(a, beta)).collect::<Result<Vec<_>>>()?;
    let dims: Vec<usize> = family.iter().map(|(n, _)| *n).collect();
    let datko = DimensionTable::new(dims.clone(), reports.iter().map(|r| r.datko_k2).collect());
    let weighted = DimensionTable::new(dims, reports.iter().map(|r| r.weighted_norm).collect());
    let consistent = datko.uniform() == weighted.uniform();
    Ok(Prop31Sweep { beta, reports, datko, weighted, consistent })
}

#[derive(Clone, Debug, Serialize)]
pub struct Cor33Report<T: Real> {
    pub alpha: T,
    pub beta: T,
    pub threshold: T,
    pub datko: DimensionTable<T>,
    pub weighted: DimensionTable<T>,
    pub pass: bool,
}

/// For `beta > 2/alpha`, checks that the `p = 2` Datko constant and the
/// weighted Lyapunov norm are dimension-uniform over the family.
pub fn cor33_converse<T: Real>(family: &[(usize, Generator<T>)], alpha: T, beta: T) -> Result<Cor33Report<T>> {
    if !(alpha > T::zero()) {
        return Err(Error::Parameter { name: "alpha", reason: format!("must be positive, got {alpha}") });
    }
    let threshold = T::lit(2.0) / alpha;
    if !(beta > threshold) {
        return Err(Error::Precondition(format!(
            "beta = {beta} does not exceed the threshold 2/alpha = {threshold}"
        )));
    }
    if family.is_empty() {
        return Err(Error::Parameter { name: "family", reason: "dimension sweep is empty".into() });
    }
    let two = T::lit(2.0);
    let mut k2 = Vec::new();
    let mut wn = Vec::new();
    for (_, a) in family {
        k2.push(datko_constant(a, beta, two, &ProbeSet::default())?.k_pow());
        wn.push(weighted_certificate(&lyap_direct(a)?, a, &[beta])?.weighted_norms[0].norm);
    }
    let dims: Vec<usize> = family.iter().map(|(n, _)| *n).collect();
    let datko = DimensionTable::new(dims.clone(), k2);
    let weighted = DimensionTable::new(dims, wn);
    let pass = datko.uniform() && weighted.uniform();
    Ok(Cor33Report { alpha, beta, threshold, datko, weighted, pass })
}
