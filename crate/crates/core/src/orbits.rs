//! `L^p` integrals of strong and weak orbits, Datko constants over weighted
//! initial data and the semigroup bound `M = sup_t ||e^{tA}||`.
//!
//! Infinite-horizon integrals are split into an adaptive quadrature on
//! `[0, T]` and an analytic tail bound. The tail uses an envelope
//! `||e^{sA}|| <= C e^{rate s}`: with a well-conditioned eigenbasis `C` is the
//! eigenvector condition number and `rate` the spectral abscissa; otherwise
//! `rate` is half the abscissa and `C` the sampled sup of the shifted
//! semigroup.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, basis, vec_norm, CVector, ComplexMatrix};
use crate::matfun::{weight, Generator};
use crate::quadrature::{geometric_breakpoints, integrate_pieces, Tolerance, DEFAULT_NODE_BUDGET};
use crate::scalar::Real;

/// Seed of the default random probes.
pub const DEFAULT_SEED: u64 = 0x5EED;
/// Number of random unit probes added to the basis by default.
pub const DEFAULT_RANDOM_PROBES: usize = 32;
const DEFAULT_REL_TOL: f64 = 1e-8;
const MAX_DOUBLINGS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureResult<T: Real> {
    pub value: T,
    /// Summed quadrature error estimate on `[0, horizon]`.
    pub error: T,
    pub nodes: usize,
    /// Bound on the integral over `(horizon, inf)`, not included in `value`.
    pub tail_bound: T,
    pub horizon: T,
}

/// Tolerance and node budget for orbit integrals.
#[derive(Clone, Copy, Debug)]
pub struct OrbitOptions<T: Real> {
    pub rel_tol: T,
    pub max_nodes: usize,
}

impl<T: Real> Default for OrbitOptions<T> {
    fn default() -> Self {
        Self { rel_tol: T::lit(DEFAULT_REL_TOL), max_nodes: DEFAULT_NODE_BUDGET }
    }
}

impl<T: Real> OrbitOptions<T> {
    pub fn with_rel_tol(rel_tol: T) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > T::zero() && self.rel_tol < T::one()) {
            return Err(Error::Parameter { name: "rel_tol", reason: format!("must lie in (0, 1), got {}", self.rel_tol) });
        }
        Ok(())
    }
}

/// `||e^{sA}|| <= constant * e^{rate s}` for all `s >= 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Envelope<T: Real> {
    pub constant: T,
    pub rate: T,
}

pub fn envelope<T: Real>(a: &Generator<T>) -> Result<Envelope<T>> {
    a.require_stable()?;
    let omega = a.spectral_abscissa();
    if a.spectral().is_well_conditioned() {
        return Ok(Envelope { constant: a.spectral().condition.max(T::one()), rate: omega });
    }
    let rate = omega * T::lit(0.5);
    let shifted = Generator::new(a.matrix().shift(Complex::new(-rate, T::zero())))?;
    let constant = semigroup_bound(&shifted, T::one() / rate.abs(), 256)?;
    Ok(Envelope { constant: constant.max(T::one()), rate })
}

enum NormKind<T: Real> {
    /// Normal generator with a weight diagonal in its eigenbasis.
    Diagonal { lambdas: Vec<Complex<T>>, d: Vec<Complex<T>> },
    Modal { v: ComplexMatrix<T>, vinv_w: ComplexMatrix<T>, lambdas: Vec<Complex<T>> },
    Dense { a: ComplexMatrix<T>, w: ComplexMatrix<T> },
}

/// Evaluates `t -> ||e^{tA} W||_2`.
pub(crate) struct WeightedNorm<T: Real> {
    kind: NormKind<T>,
}

impl<T: Real> WeightedNorm<T> {
    pub(crate) fn new(a: &Generator<T>, w: &ComplexMatrix<T>) -> Result<Self> {
        if w.rows() != a.dim() {
            return Err(Error::Dimension(format!("weight has {} rows, generator has dimension {}", w.rows(), a.dim())));
        }
        let sp = a.spectral();
        let lambdas = sp.eigenvalues.clone();
        if !sp.is_well_conditioned() {
            return Ok(Self { kind: NormKind::Dense { a: a.matrix().clone(), w: w.clone() } });
        }
        let vinv_w = sp.well_conditioned_inverse()?.matmul(w);
        if sp.normal && w.is_square() {
            let c = vinv_w.matmul(&sp.eigenvectors);
            let d = c.diagonal();
            let total = c.frobenius_norm();
            let diag = vec_norm(&d);
            let off = (total * total - diag * diag).max(T::zero()).sqrt();
            if off <= T::lit(1e-12) * total {
                return Ok(Self { kind: NormKind::Diagonal { lambdas, d } });
            }
        }
        Ok(Self { kind: NormKind::Modal { v: sp.eigenvectors.clone(), vinv_w, lambdas } })
    }

    pub(crate) fn eval(&self, t: T) -> Result<T> {
        match &self.kind {
            NormKind::Diagonal { lambdas, d } => {
                Ok(lambdas.iter().zip(d).map(|(&l, &x)| ((l * t).exp() * x).norm()).fold(T::zero(), T::max))
            }
            NormKind::Modal { v, vinv_w, lambdas } => {
                let e: Vec<Complex<T>> = lambdas.iter().map(|&l| (l * t).exp()).collect();
                linalg::norm2(&v.scale_cols(&e).matmul(vinv_w))
            }
            NormKind::Dense { a, w } => linalg::norm2(&linalg::expm(&a.scale_real(t))?.matmul(w)),
        }
    }
}

enum PropKind<T: Real> {
    Modal {
        lambdas: Vec<Complex<T>>,
        coeffs: CVector<T>,
        /// `V`, or `None` when `V` is unitary and only norms are needed.
        v: Option<ComplexMatrix<T>>,
        /// `C V` for an observation operator `C`.
        cv: Option<ComplexMatrix<T>>,
    },
    Dense { a: ComplexMatrix<T>, x: CVector<T>, c: Option<ComplexMatrix<T>> },
}

/// Evaluates `||e^{tA} x||` and `C e^{tA} x` for a fixed `x`.
pub(crate) struct Propagator<T: Real> {
    kind: PropKind<T>,
}

impl<T: Real> Propagator<T> {
    pub(crate) fn new(a: &Generator<T>, x: &[Complex<T>], c: Option<&ComplexMatrix<T>>) -> Result<Self> {
        if x.len() != a.dim() {
            return Err(Error::Dimension(format!("vector of length {} for generator of size {}", x.len(), a.dim())));
        }
        if let Some(c) = c {
            if c.cols() != a.dim() {
                return Err(Error::Dimension(format!("observation has {} columns, expected {}", c.cols(), a.dim())));
            }
        }
        let sp = a.spectral();
        if !sp.is_well_conditioned() {
            return Ok(Self { kind: PropKind::Dense { a: a.matrix().clone(), x: x.to_vec(), c: c.cloned() } });
        }
        let coeffs = sp.well_conditioned_inverse()?.matvec(x);
        let v = if sp.normal { None } else { Some(sp.eigenvectors.clone()) };
        let cv = c.map(|c| c.matmul(&sp.eigenvectors));
        Ok(Self { kind: PropKind::Modal { lambdas: sp.eigenvalues.clone(), coeffs, v, cv } })
    }

    fn modal(lambdas: &[Complex<T>], coeffs: &[Complex<T>], t: T) -> CVector<T> {
        lambdas.iter().zip(coeffs).map(|(&l, &c)| c * (l * t).exp()).collect()
    }

    /// `||e^{tA} x||`.
    pub(crate) fn state_norm(&self, t: T) -> Result<T> {
        match &self.kind {
            PropKind::Modal { lambdas, coeffs, v, .. } => {
                let z = Self::modal(lambdas, coeffs, t);
                Ok(match v {
                    Some(v) => vec_norm(&v.matvec(&z)),
                    None => vec_norm(&z),
                })
            }
            PropKind::Dense { a, x, .. } => Ok(vec_norm(&linalg::expm(&a.scale_real(t))?.matvec(x))),
        }
    }

    /// `C e^{tA} x`.
    pub(crate) fn observe(&self, t: T) -> Result<CVector<T>> {
        match &self.kind {
            PropKind::Modal { lambdas, coeffs, cv, .. } => {
                let cv = cv.as_ref().ok_or_else(|| Error::Precondition("no observation operator".into()))?;
                Ok(cv.matvec(&Self::modal(lambdas, coeffs, t)))
            }
            PropKind::Dense { a, x, c } => {
                let c = c.as_ref().ok_or_else(|| Error::Precondition("no observation operator".into()))?;
                Ok(c.matvec(&linalg::expm(&a.scale_real(t))?.matvec(x)))
            }
        }
    }
}

/// `int_0^inf f` for a vector-valued integrand with
/// `tail(T) >= ||int_T^inf f||`.
#[derive(Clone, Debug)]
pub(crate) struct VecIntegral<T: Real> {
    pub value: Vec<T>,
    pub error: T,
    pub nodes: usize,
    pub tail_bound: T,
    pub horizon: T,
}

/// The horizon doubles from `t0` until the tail bound drops below half the
/// error target `max(rel_tol * ||value||, abs_floor)`.
pub(crate) fn semi_infinite_vec<T, F, G>(
    mut f: F,
    dim: usize,
    tail: G,
    t0: T,
    rel_tol: T,
    abs_floor: T,
    max_nodes: usize,
) -> Result<VecIntegral<T>>
where
    T: Real,
    F: FnMut(T) -> Vec<T>,
    G: Fn(T) -> T,
{
    let half = T::lit(0.5);
    let euclid = |v: &[T]| v.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
    let mut nodes = 0usize;
    let mut value = vec![T::zero(); dim];
    let mut error = T::zero();
    let mut lo = T::zero();
    let mut hi = t0;
    for _ in 0..=MAX_DOUBLINGS {
        let target = (rel_tol * euclid(&value)).max(abs_floor);
        let tol = Tolerance::relative(rel_tol * half)
            .with_abs(target * T::lit(0.25))
            .with_budget(max_nodes.saturating_sub(nodes));
        match integrate_pieces(&mut f, &geometric_breakpoints(lo, hi), dim, tol) {
            Ok(p) => {
                for (v, x) in value.iter_mut().zip(&p.value) {
                    *v += *x;
                }
                error += p.error;
                nodes += p.nodes;
            }
            Err(Error::Budget { budget, estimate, error: seg_err }) => {
                return Err(Error::Budget {
                    budget,
                    estimate: euclid(&value).as_f64() + estimate,
                    error: error.as_f64() + seg_err,
                })
            }
            Err(e) => return Err(e),
        }
        let tail_bound = tail(hi);
        let target = (rel_tol * euclid(&value)).max(abs_floor);
        if tail_bound <= target * half {
            return Ok(VecIntegral { value, error, nodes, tail_bound, horizon: hi });
        }
        lo = hi;
        hi = hi + hi;
    }
    Err(Error::Budget { budget: max_nodes, estimate: euclid(&value).as_f64(), error: tail(hi).as_f64() })
}

/// Scalar form of [`semi_infinite_vec`] for a nonnegative integrand.
pub(crate) fn semi_infinite<T, F, G>(
    f: F,
    tail: G,
    t0: T,
    rel_tol: T,
    abs_floor: T,
    max_nodes: usize,
) -> Result<QuadratureResult<T>>
where
    T: Real,
    F: Fn(T) -> T,
    G: Fn(T) -> T,
{
    let r = semi_infinite_vec(|t| vec![f(t)], 1, tail, t0, rel_tol, abs_floor, max_nodes)?;
    Ok(QuadratureResult {
        value: r.value[0].max(T::zero()),
        error: r.error,
        nodes: r.nodes,
        tail_bound: r.tail_bound,
        horizon: r.horizon,
    })
}

fn check_p<T: Real>(p: T) -> Result<()> {
    if p >= T::one() && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter { name: "p", reason: format!("must be at least 1, got {p}") })
    }
}

pub(crate) fn initial_horizon<T: Real>(rate: T, p: T) -> T {
    (T::one() / (p * rate.abs())).max(T::one()).min(T::lit(1e6))
}

/// Sampled `sup_{t >= 0} ||e^{tA}||_2`.
///
/// The horizon doubles until `||e^{hA}|| < 1`, after which the semigroup
/// property bounds every later time by the sup over `[0, h]`. The best grid
/// point is refined by golden-section search on its neighbouring cells.
pub fn semigroup_bound<T: Real>(a: &Generator<T>, horizon: T, samples: usize) -> Result<T> {
    a.require_stable()?;
    if !(horizon > T::zero()) || !horizon.is_finite() {
        return Err(Error::Parameter { name: "horizon", reason: format!("must be positive, got {horizon}") });
    }
    if samples < 2 {
        return Err(Error::Parameter { name: "samples", reason: format!("need at least 2, got {samples}") });
    }
    let norm = WeightedNorm::new(a, &ComplexMatrix::identity(a.dim()))?;
    let mut h = horizon;
    for _ in 0..MAX_DOUBLINGS {
        if norm.eval(h)? < T::one() {
            break;
        }
        h = h + h;
    }
    let step = h / T::from_usize_lossy(samples - 1);
    let values: Vec<T> =
        (0..samples).into_par_iter().map(|i| norm.eval(step * T::from_usize_lossy(i))).collect::<Result<_>>()?;
    let (imax, &best) =
        values.iter().enumerate().max_by(|x, y| x.1.as_f64().total_cmp(&y.1.as_f64())).expect("samples >= 2");
    let lo = step * T::from_usize_lossy(imax.saturating_sub(1));
    let hi = (step * T::from_usize_lossy(imax + 1)).min(h);
    let refined = golden_max(|t| norm.eval(t), lo, hi, 40)?;
    Ok(best.max(refined))
}

fn golden_max<T: Real>(f: impl Fn(T) -> Result<T>, mut a: T, mut b: T, iters: usize) -> Result<T> {
    let g = T::lit(0.618_033_988_749_894_8);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let mut best = fc.max(fd);
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
        best = best.max(fc).max(fd);
    }
    Ok(best)
}

/// `int_0^inf ||C e^{tA} x||^p dt` (`C = I` when absent).
pub(crate) fn observed_lp_integral<T: Real>(
    a: &Generator<T>,
    x: &[Complex<T>],
    c: Option<&ComplexMatrix<T>>,
    p: T,
    env: &Envelope<T>,
    opts: &OrbitOptions<T>,
) -> Result<QuadratureResult<T>> {
    check_p(p)?;
    opts.validate()?;
    let prop = Propagator::new(a, x, c)?;
    let c_norm = match c {
        Some(c) => linalg::norm2(c)?,
        None => T::one(),
    };
    let decay = p * env.rate.abs();
    let x_norm = vec_norm(x);
    let abs_floor = T::lit(1e-3) * opts.rel_tol * (c_norm * env.constant * x_norm).powf(p) / decay;
    let tail = |h: T| {
        let s = prop.state_norm(h).unwrap_or(T::infinity());
        (c_norm * env.constant * s).powf(p) / decay
    };
    let nan_guard = |v: T| if v.is_finite() { v } else { T::infinity() };
    match c {
        None => semi_infinite(
            |t| nan_guard(prop.state_norm(t).map(|s| s.powf(p)).unwrap_or(T::infinity())),
            tail,
            initial_horizon(env.rate, p),
            opts.rel_tol,
            abs_floor,
            opts.max_nodes,
        ),
        Some(_) => semi_infinite(
            |t| nan_guard(prop.observe(t).map(|y| vec_norm(&y).powf(p)).unwrap_or(T::infinity())),
            tail,
            initial_horizon(env.rate, p),
            opts.rel_tol,
            abs_floor,
            opts.max_nodes,
        ),
    }
}

/// `int_0^inf ||e^{tA} x||^p dt`.
pub fn orbit_lp_integral<T: Real>(a: &Generator<T>, x: &[Complex<T>], p: T, rel_tol: T) -> Result<QuadratureResult<T>> {
    let env = envelope(a)?;
    observed_lp_integral(a, x, None, p, &env, &OrbitOptions::with_rel_tol(rel_tol))
}

/// `int_0^inf |<e^{tA} x, y>|^p dt`.
pub fn weak_orbit_lp_integral<T: Real>(
    a: &Generator<T>,
    x: &[Complex<T>],
    y: &[Complex<T>],
    p: T,
    rel_tol: T,
) -> Result<QuadratureResult<T>> {
    let env = envelope(a)?;
    weak_integral(a, x, y, p, &env, &OrbitOptions::with_rel_tol(rel_tol))
}

fn weak_integral<T: Real>(
    a: &Generator<T>,
    x: &[Complex<T>],
    y: &[Complex<T>],
    p: T,
    env: &Envelope<T>,
    opts: &OrbitOptions<T>,
) -> Result<QuadratureResult<T>> {
    if y.len() != a.dim() {
        return Err(Error::Dimension(format!("vector of length {} for generator of size {}", y.len(), a.dim())));
    }
    let row = ComplexMatrix::new(1, y.len(), y.iter().map(|z| z.conj()).collect())?;
    let y_norm = vec_norm(y);
    let scaled: CVector<T>;
    // |<z, y>| <= ||z|| ||y||, so the tail only needs the state norm scaled by ||y||.
    let c = if y_norm > T::zero() {
        scaled = row.as_slice().iter().map(|&z| z / y_norm).collect();
        Some(ComplexMatrix::new(1, y.len(), scaled)?)
    } else {
        None
    };
    match c {
        Some(c) => {
            let r = observed_lp_integral(a, x, Some(&c), p, env, opts)?;
            let s = y_norm.powf(p);
            Ok(QuadratureResult { value: r.value * s, error: r.error * s, tail_bound: r.tail_bound * s, ..r })
        }
        None => Ok(QuadratureResult { value: T::zero(), error: T::zero(), nodes: 0, tail_bound: T::zero(), horizon: T::zero() }),
    }
}

/// Initial data used to estimate a sup over the unit sphere.
#[derive(Clone, Debug)]
pub struct ProbeSet<T: Real> {
    pub basis: bool,
    pub random: usize,
    pub seed: u64,
    pub explicit: Vec<CVector<T>>,
}

impl<T: Real> Default for ProbeSet<T> {
    fn default() -> Self {
        Self { basis: true, random: DEFAULT_RANDOM_PROBES, seed: DEFAULT_SEED, explicit: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProbeCoverage {
    pub basis: usize,
    pub random: usize,
    pub seed: u64,
    pub explicit: usize,
}

impl<T: Real> ProbeSet<T> {
    pub fn basis_only() -> Self {
        Self { basis: true, random: 0, seed: DEFAULT_SEED, explicit: Vec::new() }
    }

    pub fn explicit(vectors: Vec<CVector<T>>) -> Self {
        Self { basis: false, random: 0, seed: DEFAULT_SEED, explicit: vectors }
    }

    /// Labelled probe vectors in a fixed order: basis, random, explicit.
    pub fn vectors(&self, n: usize) -> Result<Vec<(String, CVector<T>)>> {
        let mut out = Vec::new();
        if self.basis {
            out.extend((0..n).map(|k| (format!("e{k}"), basis(n, k))));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for j in 0..self.random {
            out.push((format!("r{j}"), random_unit(&mut rng, n)));
        }
        for (j, v) in self.explicit.iter().enumerate() {
            if v.len() != n {
                return Err(Error::Dimension(format!("probe {j} has length {}, expected {n}", v.len())));
            }
            out.push((format!("x{j}"), v.clone()));
        }
        if out.is_empty() {
            return Err(Error::Parameter { name: "probes", reason: "probe set is empty".into() });
        }
        Ok(out)
    }

    pub fn coverage(&self, n: usize) -> ProbeCoverage {
        ProbeCoverage {
            basis: if self.basis { n } else { 0 },
            random: self.random,
            seed: self.seed,
            explicit: self.explicit.len(),
        }
    }
}

pub(crate) fn random_unit<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> CVector<T> {
    loop {
        let v: CVector<T> = (0..n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new(T::lit(re), T::lit(im))
            })
            .collect();
        let norm = vec_norm(&v);
        if norm > T::zero() {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeIntegral<T: Real> {
    pub id: String,
    pub value: T,
    pub error: T,
    pub tail: T,
    /// `||x||` of the unweighted probe.
    pub norm: T,
    /// `(value)^{1/p} / ||x||`.
    pub ratio: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct DatkoCertificate<T: Real> {
    pub p: T,
    pub beta: T,
    pub k: T,
    pub m: T,
    pub coverage: ProbeCoverage,
    pub argmax: String,
    pub probes: Vec<ProbeIntegral<T>>,
}

impl<T: Real> DatkoCertificate<T> {
    /// `K^p`.
    pub fn k_pow(&self) -> T {
        self.k.powf(self.p)
    }
}

fn default_bound_horizon<T: Real>(a: &Generator<T>) -> T {
    (T::one() / a.spectral_abscissa().abs()).min(T::lit(1e4))
}

pub fn datko_constant<T: Real>(a: &Generator<T>, beta: T, p: T, probes: &ProbeSet<T>) -> Result<DatkoCertificate<T>> {
    datko_constant_with(a, beta, p, probes, &OrbitOptions::default())
}

/// `K = sup_x (int_0^inf ||e^{tA} (I-A)^{-beta} x||^p dt)^{1/p} / ||x||` over
/// the probe set; `beta = 0` gives the unweighted functional.
pub fn datko_constant_with<T: Real>(
    a: &Generator<T>,
    beta: T,
    p: T,
    probes: &ProbeSet<T>,
    opts: &OrbitOptions<T>,
) -> Result<DatkoCertificate<T>> {
    check_p(p)?;
    if !(beta >= T::zero()) {
        return Err(Error::Parameter { name: "beta", reason: format!("must be nonnegative, got {beta}") });
    }
    let env = envelope(a)?;
    let f = weight(a, beta)?;
    let vectors = probes.vectors(a.dim())?;
    let rows: Vec<ProbeIntegral<T>> = vectors
        .par_iter()
        .map(|(id, x)| {
            let norm = vec_norm(x);
            let r = observed_lp_integral(a, &f.matvec(x), None, p, &env, opts)?;
            let ratio = if norm > T::zero() { r.value.powf(T::one() / p) / norm } else { T::zero() };
            Ok(ProbeIntegral { id: id.clone(), value: r.value, error: r.error, tail: r.tail_bound, norm, ratio })
        })
        .collect::<Result<_>>()?;
    let best = rows.iter().max_by(|x, y| x.ratio.as_f64().total_cmp(&y.ratio.as_f64())).expect("nonempty probes");
    let m = semigroup_bound(a, default_bound_horizon(a), 256)?;
    Ok(DatkoCertificate {
        p,
        beta,
        k: best.ratio,
        m,
        coverage: probes.coverage(a.dim()),
        argmax: best.id.clone(),
        probes: rows,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OnePointReport<T: Real> {
    /// `max_t t ||e^{tA} F||^p / (K^p M^p)`.
    pub max_ratio: T,
    pub argmax_t: T,
    pub bound: T,
    pub pass: bool,
}

/// Checks `t ||e^{tA} (I-A)^{-beta}||^p <= K^p M^p` on a time grid.
pub fn one_point_bound_check<T: Real>(
    a: &Generator<T>,
    beta: T,
    p: T,
    k: T,
    m: T,
    t_grid: &[T],
) -> Result<OnePointReport<T>> {
    check_p(p)?;
    let f = weight(a, beta)?;
    let norm = WeightedNorm::new(a, &f)?;
    let bound = (k * m).powf(p);
    let mut max_ratio = T::zero();
    let mut argmax_t = T::zero();
    for &t in t_grid {
        if !(t >= T::zero()) {
            return Err(Error::Parameter { name: "t_grid", reason: format!("times must be nonnegative, got {t}") });
        }
        let lhs = t * norm.eval(t)?.powf(p);
        let ratio = if bound > T::zero() {
            lhs / bound
        } else if lhs > T::zero() {
            T::infinity()
        } else {
            T::zero()
        };
        if ratio > max_ratio {
            max_ratio = ratio;
            argmax_t = t;
        }
    }
    Ok(OnePointReport { max_ratio, argmax_t, bound, pass: max_ratio <= T::one() + T::lit(1e-6) })
}

/// Pairs `(x, y)` for weak orbit functionals.
#[derive(Clone, Debug)]
pub struct PairSet<T: Real> {
    /// `(e_k, e_k)` for every `k`.
    pub basis_diagonal: bool,
    /// `(e_j, e_k)` for every `j, k`.
    pub basis_all: bool,
    pub random: usize,
    pub seed: u64,
    pub explicit: Vec<(CVector<T>, CVector<T>)>,
}

impl<T: Real> Default for PairSet<T> {
    fn default() -> Self {
        Self { basis_diagonal: true, basis_all: false, random: 8, seed: DEFAULT_SEED, explicit: Vec::new() }
    }
}

impl<T: Real> PairSet<T> {
    pub fn basis_diagonal() -> Self {
        Self { random: 0, ..Self::default() }
    }

    pub fn explicit(pairs: Vec<(CVector<T>, CVector<T>)>) -> Self {
        Self { basis_diagonal: false, basis_all: false, random: 0, seed: DEFAULT_SEED, explicit: pairs }
    }

    pub fn pairs(&self, n: usize) -> Result<Vec<(String, CVector<T>, CVector<T>)>> {
        let mut out = Vec::new();
        if self.basis_all {
            for j in 0..n {
                for k in 0..n {
                    out.push((format!("e{j},e{k}"), basis(n, j), basis(n, k)));
                }
            }
        } else if self.basis_diagonal {
            out.extend((0..n).map(|k| (format!("e{k},e{k}"), basis(n, k), basis(n, k))));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for j in 0..self.random {
            let x = random_unit(&mut rng, n);
            let y = random_unit(&mut rng, n);
            out.push((format!("r{j}"), x, y));
        }
        for (j, (x, y)) in self.explicit.iter().enumerate() {
            if x.len() != n || y.len() != n {
                return Err(Error::Dimension(format!("pair {j} does not match dimension {n}")));
            }
            out.push((format!("x{j}"), x.clone(), y.clone()));
        }
        if out.is_empty() {
            return Err(Error::Parameter { name: "pairs", reason: "pair set is empty".into() });
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PairIntegral<T: Real> {
    pub id: String,
    pub value: T,
    pub error: T,
    pub tail: T,
    pub ratio: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakDatkoResult<T: Real> {
    pub p: T,
    pub beta: T,
    pub k: T,
    pub argmax: String,
    pub pairs: Vec<PairIntegral<T>>,
}

pub fn weak_datko_constant<T: Real>(a: &Generator<T>, beta: T, p: T, pairs: &PairSet<T>) -> Result<WeakDatkoResult<T>> {
    weak_datko_constant_with(a, beta, p, pairs, &OrbitOptions::default())
}

/// `K_w = sup (int_0^inf |<e^{tA} (I-A)^{-beta} x, y>|^p dt)^{1/p} / (||x|| ||y||)`
/// over the pair set.
pub fn weak_datko_constant_with<T: Real>(
    a: &Generator<T>,
    beta: T,
    p: T,
    pairs: &PairSet<T>,
    opts: &OrbitOptions<T>,
) -> Result<WeakDatkoResult<T>> {
    check_p(p)?;
    if !(beta >= T::zero()) {
        return Err(Error::Parameter { name: "beta", reason: format!("must be nonnegative, got {beta}") });
    }
    let env = envelope(a)?;
    let f = weight(a, beta)?;
    let list = pairs.pairs(a.dim())?;
    let rows: Vec<PairIntegral<T>> = list
        .par_iter()
        .map(|(id, x, y)| {
            let scale = vec_norm(x) * vec_norm(y);
            let r = weak_integral(a, &f.matvec(x), y, p, &env, opts)?;
            let ratio = if scale > T::zero() { r.value.powf(T::one() / p) / scale } else { T::zero() };
            Ok(PairIntegral { id: id.clone(), value: r.value, error: r.error, tail: r.tail_bound, ratio })
        })
        .collect::<Result<_>>()?;
    let best = rows.iter().max_by(|x, y| x.ratio.as_f64().total_cmp(&y.ratio.as_f64())).expect("nonempty pairs");
    Ok(WeakDatkoResult { p, beta, k: best.ratio, argmax: best.id.clone(), pairs: rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_diagonal, DiagonalModelSpec};
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar(z: Complex64) -> Generator<f64> {
        Generator::new(ComplexMatrix::new(1, 1, vec![z]).unwrap()).unwrap()
    }

    fn diag(n: usize, a: f64) -> Generator<f64> {
        build_diagonal(&DiagonalModelSpec::new(n, a)).unwrap()
    }

    #[test]
    fn scalar_orbit_integrals() {
        let a = scalar(c(-1.0, 0.0));
        let r = orbit_lp_integral(&a, &[c(1.0, 0.0)], 2.0, 1e-10).unwrap();
        assert!((r.value - 0.5).abs() < 1e-9);
        assert!(r.error >= 0.0 && r.tail_bound >= 0.0);
        let r = orbit_lp_integral(&a, &[c(1.0, 0.0)], 1.0, 1e-10).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        let r = weak_orbit_lp_integral(&a, &[c(1.0, 0.0)], &[c(1.0, 0.0)], 2.0, 1e-10).unwrap();
        assert!((r.value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn diagonal_mode_integral() {
        let a = diag(10, 1.0);
        let r = orbit_lp_integral(&a, &basis(10, 3), 2.0, 1e-10).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn weak_orthogonal_and_mixed() {
        let a = diag(4, 1.0);
        let r = weak_orbit_lp_integral(&a, &basis(4, 0), &basis(4, 1), 2.0, 1e-8).unwrap();
        assert!(r.value.abs() < 1e-12);

        let s = 0.5f64.sqrt();
        let x = vec![c(s, 0.0), c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let r = weak_orbit_lp_integral(&a, &x, &x, 2.0, 1e-10).unwrap();
        // |sum_k w_k e^{l_k t}|^2 integrates to sum_{jk} w_j w_k / -(conj l_j + l_k)
        let l = [c(-1.0, 1.0), c(-0.5, 2.0)];
        let mut oracle = c(0.0, 0.0);
        for lj in l {
            for lk in l {
                oracle += 0.25 / -(lj.conj() + lk);
            }
        }
        assert!(oracle.im.abs() < 1e-15);
        assert!((r.value - oracle.re).abs() < 1e-9 * oracle.re);
    }

    #[test]
    fn semigroup_bounds() {
        assert_eq!(semigroup_bound(&scalar(c(-1.0, 0.0)), 1.0, 16).unwrap(), 1.0);
        let m = semigroup_bound(&diag(20, 1.0), 10.0, 64).unwrap();
        assert!((m - 1.0).abs() < 1e-14);

        let jordan = Generator::new(ComplexMatrix::from_real(2, 2, &[-0.1, 1.0, 0.0, -0.1]).unwrap()).unwrap();
        let m = semigroup_bound(&jordan, 5.0, 256).unwrap();
        // ||[[1, t], [0, 1]]|| = t/2 + sqrt(1 + t^2/4)
        let oracle = (0..=200_000)
            .map(|i| {
                let t = i as f64 * 1e-4;
                (-0.1 * t).exp() * (t / 2.0 + (1.0 + t * t / 4.0).sqrt())
            })
            .fold(0.0, f64::max);
        assert!(m > 1.0);
        assert!((m - oracle).abs() < 1e-8 * oracle);

        assert!(matches!(semigroup_bound(&scalar(c(0.0, 1.0)), 1.0, 8), Err(Error::NotStable { .. })));
    }

    #[test]
    fn datko_scalar() {
        let a = scalar(c(-1.0, 0.0));
        let cert = datko_constant(&a, 1.0, 2.0, &ProbeSet::explicit(vec![vec![c(1.0, 0.0)]])).unwrap();
        assert!((cert.k - 0.125f64.sqrt()).abs() < 1e-9);
        assert_eq!(cert.m, 1.0);
        let w = weak_datko_constant(&a, 1.0, 2.0, &PairSet::basis_diagonal()).unwrap();
        assert!((w.k - 0.125f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn datko_diagonal_closed_form() {
        let n = 30;
        let spec = DiagonalModelSpec::new(n, 1.0);
        let a = build_diagonal(&spec).unwrap();
        let oracle = |beta: f64| {
            (1..=n)
                .map(|k| {
                    let l = spec.eigenvalue(k);
                    (c(1.0, 0.0) - l).norm().powf(-2.0 * beta) * k as f64 / 2.0
                })
                .fold(0.0, f64::max)
        };
        let cert = datko_constant(&a, 0.6, 2.0, &ProbeSet::default()).unwrap();
        assert!((cert.k_pow() - oracle(0.6)).abs() < 1e-7 * oracle(0.6));
        assert_eq!(cert.argmax, "e2");
        assert_eq!(cert.probes.len(), n + DEFAULT_RANDOM_PROBES);

        let cert = datko_constant(&a, 0.0, 2.0, &ProbeSet::basis_only()).unwrap();
        assert!((cert.k_pow() - n as f64 / 2.0).abs() < 1e-7 * n as f64);

        let w = weak_datko_constant(&a, 0.6, 2.0, &PairSet::basis_diagonal()).unwrap();
        assert!((w.k * w.k - oracle(0.6)).abs() < 1e-7 * oracle(0.6));
    }

    #[test]
    fn one_point_checks() {
        let a = scalar(c(-1.0, 0.0));
        let grid: Vec<f64> = (0..=400).map(|i| i as f64 * 0.01).collect();
        let r = one_point_bound_check(&a, 1.0, 2.0, 0.125f64.sqrt(), 1.0, &grid).unwrap();
        let expect = 0.25 / (2.0 * std::f64::consts::E) / 0.125;
        assert!((r.max_ratio - expect).abs() < 1e-12);
        assert!((r.argmax_t - 0.5).abs() < 1e-12);
        assert!(r.pass);
        let r = one_point_bound_check(&a, 1.0, 2.0, 0.1, 1.0, &[0.0]).unwrap();
        assert_eq!(r.max_ratio, 0.0);

        let a = diag(50, 1.0);
        let cert = datko_constant(&a, 0.6, 2.0, &ProbeSet::basis_only()).unwrap();
        let grid: Vec<f64> = (0..=500).map(|i| i as f64 * 0.5).collect();
        let r = one_point_bound_check(&a, 0.6, 2.0, cert.k, cert.m, &grid).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn nonnormal_uses_condition_envelope() {
        let a = Generator::new(ComplexMatrix::from_real(2, 2, &[-1.0, 5.0, 0.0, -2.0]).unwrap()).unwrap();
        let x = vec![c(0.0, 0.0), c(1.0, 0.0)];
        let r = orbit_lp_integral(&a, &x, 2.0, 1e-10).unwrap();
        // e^{tA} e2 = (5 (e^{-t} - e^{-2t}), e^{-2t})
        let oracle = 25.0 * (0.5 - 2.0 / 3.0 + 0.25) + 0.25;
        assert!((r.value - oracle).abs() < 1e-9 * oracle);
    }

    #[test]
    fn defective_generator_falls_back_to_dense() {
        let a = Generator::new(ComplexMatrix::from_real(2, 2, &[-1.0, 1.0, 0.0, -1.0]).unwrap()).unwrap();
        assert!(!a.spectral().is_well_conditioned());
        let x = vec![c(0.0, 0.0), c(1.0, 0.0)];
        let r = orbit_lp_integral(&a, &x, 2.0, 1e-9).unwrap();
        // ||(t e^{-t}, e^{-t})||^2 integrates to 1/4 + 1/2
        assert!((r.value - 0.75).abs() < 1e-8);
    }

    #[test]
    fn probe_sets_are_deterministic() {
        let p = ProbeSet::<f64>::default();
        let a = p.vectors(5).unwrap();
        let b = p.vectors(5).unwrap();
        assert_eq!(a.len(), 5 + DEFAULT_RANDOM_PROBES);
        for ((ia, va), (ib, vb)) in a.iter().zip(&b) {
            assert_eq!(ia, ib);
            assert_eq!(va, vb);
            assert!((vec_norm(va) - 1.0).abs() < 1e-14);
        }
        assert!(ProbeSet::<f64>::explicit(vec![]).vectors(3).is_err());
        assert!(ProbeSet::explicit(vec![vec![c(1.0, 0.0)]]).vectors(3).is_err());
    }
}
