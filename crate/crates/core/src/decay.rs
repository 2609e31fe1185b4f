//! Power-law decay of `||e^{tA} W||`, resolvent growth along the imaginary
//! axis and the correspondence between the two exponents.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{fit_log_log, log_grid, LineFit};
use crate::linalg::{self, ComplexMatrix};
use crate::matfun::{principal_power, weight, Generator};
use crate::models::DiagonalModelSpec;
use crate::orbits::WeightedNorm;
use crate::scalar::{cone, Real};

/// Default logarithmic sampling density.
pub const SAMPLES_PER_DECADE: usize = 64;
/// Local-versus-global slope gap that flags an exponential tail.
pub const CONTAMINATION_GAP: f64 = 0.5;

#[derive(Clone, Debug, Serialize)]
pub struct DecayFit<T: Real> {
    pub window: [T; 2],
    pub samples: usize,
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
    /// Slope over the last decade of the window (or its last half in
    /// log-scale, whichever is shorter).
    pub tail_slope: T,
    pub contaminated: bool,
    /// `(t, ||e^{tA} W||)`.
    #[serde(skip)]
    pub series: Vec<(T, T)>,
}

/// Least-squares fit of `log ||e^{tA} W||` against `log t` on a logarithmic
/// grid over `window`.
pub fn decay_fit<T: Real>(
    a: &Generator<T>,
    w: &ComplexMatrix<T>,
    window: [T; 2],
    samples_per_decade: usize,
) -> Result<DecayFit<T>> {
    a.require_stable()?;
    if !w.is_square() || w.rows() != a.dim() {
        return Err(Error::Dimension(format!(
            "weight is {}x{}, generator has dimension {}",
            w.rows(),
            w.cols(),
            a.dim()
        )));
    }
    let ts = log_grid(window[0], window[1], samples_per_decade)?;
    let norm = WeightedNorm::new(a, w)?;
    let values: Vec<T> = ts.par_iter().map(|&t| norm.eval(t)).collect::<Result<_>>()?;
    let positive: Vec<(T, T)> = ts.iter().copied().zip(values.iter().copied()).filter(|&(_, v)| v > T::zero()).collect();
    if positive.len() < 2 {
        return Err(Error::Precondition("norm vanished on the fit window".into()));
    }
    let (xs, ys): (Vec<T>, Vec<T>) = positive.iter().copied().unzip();
    let global = fit_log_log(&xs, &ys)?;

    let tail_start = (window[1] / T::lit(10.0)).max((window[0] * window[1]).sqrt());
    let (tx, ty): (Vec<T>, Vec<T>) = positive.iter().copied().filter(|&(t, _)| t >= tail_start).unzip();
    let tail_slope = if tx.len() >= 2 { fit_log_log(&tx, &ty)?.slope } else { global.slope };
    let contaminated = (tail_slope - global.slope).abs() > T::lit(CONTAMINATION_GAP);

    Ok(DecayFit {
        window,
        samples: ts.len(),
        slope: global.slope,
        intercept: global.intercept,
        r_squared: global.r_squared,
        tail_slope,
        contaminated,
        series: ts.into_iter().zip(values).collect(),
    })
}

/// True when the dominant mode `k* = (a t)^{1/a}` of the diagonal family
/// stays inside the truncation over the whole window.
pub fn diagonal_window_ok<T: Real>(spec: &DiagonalModelSpec<T>, window: [T; 2]) -> bool {
    let k_star = (spec.a * window[1] * spec.frequency_scale.powf(-T::one())).powf(T::one() / spec.a);
    k_star <= T::from_usize_lossy(spec.n)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResolventSample<T: Real> {
    pub s: T,
    /// `None` when `is` lies on the spectrum to working precision.
    pub norm: Option<T>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolventSweep<T: Real> {
    pub samples: Vec<ResolventSample<T>>,
    pub excluded: Vec<T>,
    /// Fit of `log norm` against `log |s|` over the finite samples with
    /// `s != 0`; absent with fewer than two such samples.
    pub fit: Option<LineFit<T>>,
    pub window: [T; 2],
}

impl<T: Real> ResolventSweep<T> {
    pub fn exponent(&self) -> Option<T> {
        self.fit.map(|f| f.slope)
    }
}

/// `||(is - A)^{-1}||` over `s_grid`.
pub fn resolvent_sweep<T: Real>(a: &Generator<T>, s_grid: &[T]) -> Result<ResolventSweep<T>> {
    a.require_stable()?;
    if s_grid.is_empty() {
        return Err(Error::Parameter { name: "s_grid", reason: "grid is empty".into() });
    }
    let samples: Vec<ResolventSample<T>> = s_grid
        .par_iter()
        .map(|&s| match a.resolvent_norm(Complex::new(T::zero(), s)) {
            Ok(v) => Ok(ResolventSample { s, norm: Some(v) }),
            Err(Error::NearSingular { .. }) => Ok(ResolventSample { s, norm: None }),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let excluded = samples.iter().filter(|x| x.norm.is_none()).map(|x| x.s).collect();
    let (xs, ys): (Vec<T>, Vec<T>) =
        samples.iter().filter_map(|x| x.norm.filter(|_| x.s != T::zero()).map(|v| (x.s.abs(), v))).unzip();
    let fit = if xs.len() >= 2 { fit_log_log(&xs, &ys).ok() } else { None };
    let lo = s_grid.iter().map(|s| s.abs()).fold(T::infinity(), T::min);
    let hi = s_grid.iter().map(|s| s.abs()).fold(T::zero(), T::max);
    Ok(ResolventSweep { samples, excluded, fit, window: [lo, hi] })
}

/// Integer frequencies `lo..=hi`.
pub fn integer_grid<T: Real>(lo: usize, hi: usize) -> Vec<T> {
    (lo..=hi).map(T::from_usize_lossy).collect()
}

/// Logarithmic frequency grid with the default density.
pub fn log_frequency_grid<T: Real>(lo: T, hi: T) -> Result<Vec<T>> {
    log_grid(lo, hi, SAMPLES_PER_DECADE)
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderSample<T: Real> {
    pub lambda: Complex<T>,
    pub norm: T,
    pub ratio: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderReport<T: Real> {
    /// Conjugate exponent; absent for `p = 1`.
    pub q: Option<T>,
    pub max_ratio: T,
    pub argmax: Complex<T>,
    pub pass: bool,
    pub samples: Vec<HolderSample<T>>,
}

/// `||(lambda - A)^{-1} (I - A)^{-beta}||_2`.
pub(crate) fn weighted_resolvent_norm<T: Real>(
    a: &Generator<T>,
    f: &ComplexMatrix<T>,
    beta: T,
    lambda: Complex<T>,
) -> Result<T> {
    if a.spectral().normal && a.spectral().is_well_conditioned() {
        let distance = a.distance_to_spectrum(lambda);
        if distance == T::zero() {
            return Err(Error::NearSingular { distance: 0.0 });
        }
        return Ok(a
            .eigenvalues()
            .iter()
            .map(|&l| (principal_power(cone::<T>() - l, -beta) / (lambda - l)).norm())
            .fold(T::zero(), T::max));
    }
    linalg::norm2(&a.resolvent(lambda)?.matmul(f))
}

/// Checks `||(lambda - A)^{-1} (I - A)^{-beta}|| (q Re lambda)^{1/q} <= K_w`
/// on a grid in the open right half-plane (`<= K_w` when `p = 1`).
pub fn holder_halfplane_check<T: Real>(
    a: &Generator<T>,
    beta: T,
    p: T,
    lambdas: &[Complex<T>],
    k_w: T,
) -> Result<HolderReport<T>> {
    if !(p >= T::one()) {
        return Err(Error::Parameter { name: "p", reason: format!("must be at least 1, got {p}") });
    }
    if lambdas.iter().any(|l| !(l.re > T::zero())) {
        return Err(Error::Parameter { name: "lambda_grid", reason: "points must have positive real part".into() });
    }
    let q = if p > T::one() { Some(p / (p - T::one())) } else { None };
    let f = weight(a, beta)?;
    let samples: Vec<HolderSample<T>> = lambdas
        .par_iter()
        .map(|&lambda| {
            let norm = weighted_resolvent_norm(a, &f, beta, lambda)?;
            let factor = match q {
                Some(q) => (q * lambda.re).powf(T::one() / q),
                None => T::one(),
            };
            let lhs = norm * factor;
            let ratio = if k_w > T::zero() { lhs / k_w } else { T::infinity() };
            Ok(HolderSample { lambda, norm, ratio })
        })
        .collect::<Result<_>>()?;
    let best = samples
        .iter()
        .max_by(|x, y| x.ratio.as_f64().total_cmp(&y.ratio.as_f64()))
        .ok_or_else(|| Error::Parameter { name: "lambda_grid", reason: "grid is empty".into() })?;
    let (max_ratio, argmax) = (best.ratio, best.lambda);
    Ok(HolderReport { q, max_ratio, argmax, pass: max_ratio <= T::one() + T::lit(1e-6), samples })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentityResidual<T: Real> {
    /// Frobenius norm of the difference of both sides.
    pub absolute: T,
    /// `absolute / ||(lambda - A)^{-1}||_F`.
    pub relative: T,
}

/// Residual of the `n`-term resolvent expansion
/// `R(l) = sum_{k<n} (m-l)^k R(m)^{k+1} + (m-l)^n R(l) R(m)^n`.
pub fn resolvent_identity_check<T: Real>(
    a: &Generator<T>,
    lambda: Complex<T>,
    mu: Complex<T>,
    n_terms: usize,
) -> Result<IdentityResidual<T>> {
    let rl = a.resolvent(lambda)?;
    let rm = a.resolvent(mu)?;
    let d = mu - lambda;
    let n = a.dim();
    let mut rhs = ComplexMatrix::zeros(n, n);
    let mut power = rm.clone();
    let mut coeff = cone::<T>();
    for _ in 0..n_terms {
        rhs = &rhs + &power.scale(coeff);
        coeff = coeff * d;
        power = power.matmul(&rm);
    }
    // power = R(m)^{n+1} here; the remainder needs R(m)^n.
    let rm_n = if n_terms == 0 { ComplexMatrix::identity(n) } else { power.matmul(&rm.inverse()?) };
    rhs = &rhs + &rl.matmul(&rm_n).scale(coeff);
    let absolute = (&rl - &rhs).frobenius_norm();
    Ok(IdentityResidual { absolute, relative: absolute / rl.frobenius_norm() })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BtReport<T: Real> {
    pub resolvent_exponent: T,
    /// `1 / resolvent_exponent`.
    pub predicted_decay_exponent: T,
    /// `-slope` of the decay fit.
    pub observed_decay_exponent: T,
    /// `|predicted - observed| / observed`.
    pub mismatch: T,
    /// False when the decay fit is exponentially contaminated or either
    /// exponent has the wrong sign.
    pub applicable: bool,
}

pub fn bt_correspondence<T: Real>(fit: &DecayFit<T>, sweep: &ResolventSweep<T>) -> Result<BtReport<T>> {
    let resolvent_exponent = sweep
        .exponent()
        .ok_or_else(|| Error::Precondition("resolvent sweep has fewer than two usable samples".into()))?;
    let predicted = T::one() / resolvent_exponent;
    let observed = -fit.slope;
    let mismatch = (predicted - observed).abs() / observed.abs();
    let applicable = !fit.contaminated && resolvent_exponent > T::zero() && observed > T::zero();
    Ok(BtReport {
        resolvent_exponent,
        predicted_decay_exponent: predicted,
        observed_decay_exponent: observed,
        mismatch,
        applicable,
    })
}
