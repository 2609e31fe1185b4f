//! Ordinary least-squares line fits and logarithmic grids.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit<T: Real> {
    pub slope: T,
    pub intercept: T,
    /// Coefficient of determination, clamped to `[0, 1]`.
    pub r_squared: T,
    pub samples: usize,
}

/// Fits `y = slope * x + intercept`.
pub fn fit_line<T: Real>(xs: &[T], ys: &[T]) -> Result<LineFit<T>> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension(format!("{} abscissae vs {} ordinates", xs.len(), ys.len())));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::Parameter { name: "samples", reason: format!("need at least 2 points, got {n}") });
    }
    let nf = T::from_usize_lossy(n);
    let mx = xs.iter().fold(T::zero(), |a, &x| a + x) / nf;
    let my = ys.iter().fold(T::zero(), |a, &y| a + y) / nf;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == T::zero() {
        return Err(Error::Parameter { name: "samples", reason: "abscissae are all equal".into() });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == T::zero() { T::one() } else { (sxy * sxy / (sxx * syy)).min(T::one()).max(T::zero()) };
    Ok(LineFit { slope, intercept, r_squared, samples: n })
}

/// Fits `log y = slope * log x + intercept` (natural logarithms).
pub fn fit_log_log<T: Real>(xs: &[T], ys: &[T]) -> Result<LineFit<T>> {
    if xs.iter().chain(ys).any(|&v| !(v > T::zero()) || !v.is_finite()) {
        return Err(Error::Parameter { name: "samples", reason: "log-log fit needs positive finite data".into() });
    }
    let lx: Vec<T> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<T> = ys.iter().map(|y| y.ln()).collect();
    fit_line(&lx, &ly)
}

/// Logarithmically spaced points on `[lo, hi]` with `per_decade` points per
/// factor of ten (endpoints included).
pub fn log_grid<T: Real>(lo: T, hi: T, per_decade: usize) -> Result<Vec<T>> {
    if !(lo > T::zero()) || !(hi > lo) || per_decade == 0 {
        return Err(Error::Parameter { name: "window", reason: format!("need 0 < lo < hi, got [{lo}, {hi}]") });
    }
    let decades = (hi / lo).log10();
    let count = ((decades * T::from_usize_lossy(per_decade)).ceil().to_usize().unwrap_or(1)).max(1);
    let (llo, lhi) = (lo.ln(), hi.ln());
    let step = (lhi - llo) / T::from_usize_lossy(count);
    Ok((0..=count).map(|i| (llo + step * T::from_usize_lossy(i)).exp()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let xs: Vec<f64> = log_grid(1.0, 100.0, 10).unwrap();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(-1.5)).collect();
        let fit = fit_log_log(&xs, &ys).unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.samples, 21);
    }

    #[test]
    fn grid_endpoints() {
        let g: Vec<f64> = log_grid(10.0, 1000.0, 64).unwrap();
        assert_eq!(g.len(), 129);
        assert!((g[0] - 10.0).abs() < 1e-12);
        assert!((g[128] - 1000.0).abs() < 1e-9);
        assert!(log_grid(0.0, 1.0, 4).is_err());
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_line(&[1.0], &[2.0]).is_err());
        assert!(fit_line(&[1.0, 1.0], &[2.0, 3.0]).is_err());
        assert!(fit_log_log(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    }
}
