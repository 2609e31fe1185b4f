//! Observability Gramians, the weighted observability constant, and the
//! chain that turns observability of a damped system into polynomial decay.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::decay::{decay_fit, DecayFit, SAMPLES_PER_DECADE};
use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_eigen, inner, vec_norm, CVector, ComplexMatrix};
use crate::lyapunov::{gram_integral, solve_lyapunov};
use crate::matfun::{weight, Generator};
use crate::models::DampedSystem;
use crate::orbits::{envelope, observed_lp_integral, OrbitOptions, ProbeSet, Propagator};
use crate::quadrature::{geometric_breakpoints, integrate_pieces, Tolerance, DEFAULT_NODE_BUDGET};
use crate::scalar::{real, Real};

/// Gramians with `min eig < FEASIBILITY_RATIO * max eig` are treated as
/// singular.
pub const FEASIBILITY_RATIO: f64 = 1e-12;
/// Default quadrature tolerance for Gramians.
pub const GRAMIAN_REL_TOL: f64 = 1e-10;
/// Slack on inequalities that are tight up to quadrature error.
pub const CHAIN_SLACK: f64 = 1e-6;

fn check_tau<T: Real>(tau: T) -> Result<()> {
    if tau > T::zero() && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter { name: "tau", reason: format!("must be positive, got {tau}") })
    }
}

/// `G_tau = int_0^tau e^{tA*} B B* e^{tA} dt`.
pub fn gramian<T: Real>(a: &Generator<T>, b: &ComplexMatrix<T>, tau: T, rel_tol: T) -> Result<ComplexMatrix<T>> {
    check_tau(tau)?;
    if b.rows() != a.dim() {
        return Err(Error::Dimension(format!("B has {} rows, generator has dimension {}", b.rows(), a.dim())));
    }
    let bb = b.matmul(&b.adjoint());
    let (g, _) = gram_integral(a, &bb, Some(tau), rel_tol, DEFAULT_NODE_BUDGET)?;
    Ok(g.hermitian_part())
}

#[derive(Clone, Debug, Serialize)]
pub struct ObservabilityCertificate<T: Real> {
    pub tau: T,
    pub beta: T,
    /// Largest eigenvalue of the pencil `(F* F, G)`; infinite when
    /// infeasible.
    pub k: T,
    #[serde(skip)]
    pub gramian: ComplexMatrix<T>,
    pub min_eigenvalue: T,
    pub max_eigenvalue: T,
    pub feasible: bool,
    /// Eigenvector of the smallest Gramian eigenvalue when infeasible.
    pub null_direction: Option<CVector<T>>,
}

/// `max_x (x* F x) / (x* G x)` for Hermitian `F` and positive definite `G`.
/// Returns `None` when `G` is singular to the feasibility ratio, together
/// with the extreme eigenvalues of `G` and its weakest direction.
fn pencil_max<T: Real>(f: &ComplexMatrix<T>, g: &ComplexMatrix<T>) -> Result<(Option<T>, T, T, CVector<T>)> {
    let eig = hermitian_eigen(g, true)?;
    let u = eig.vectors.expect("vectors requested");
    let lo = eig.values[0];
    let hi = *eig.values.last().expect("nonempty");
    let weakest = u.column(0);
    if !(hi > T::zero()) || lo < T::lit(FEASIBILITY_RATIO) * hi {
        return Ok((None, lo, hi, weakest));
    }
    let scale: Vec<Complex<T>> = eig.values.iter().map(|&l| real(T::one() / l.sqrt())).collect();
    let us = u.scale_cols(&scale);
    let m = us.adjoint_mul(&f.matmul(&us));
    Ok((Some(linalg::max_hermitian_eigenvalue(&m)?), lo, hi, weakest))
}

fn certificate_from_gramian<T: Real>(
    a: &Generator<T>,
    g: ComplexMatrix<T>,
    tau: T,
    beta: T,
) -> Result<ObservabilityCertificate<T>> {
    let f = weight(a, beta)?;
    let ff = f.adjoint_mul(&f);
    let (k, lo, hi, weakest) = pencil_max(&ff, &g)?;
    Ok(ObservabilityCertificate {
        tau,
        beta,
        k: k.unwrap_or(T::infinity()),
        gramian: g,
        min_eigenvalue: lo,
        max_eigenvalue: hi,
        feasible: k.is_some(),
        null_direction: if k.is_none() { Some(weakest) } else { None },
    })
}

/// Smallest `K` with `||(I-A)^{-beta} x||^2 <= K int_0^tau ||B* e^{tA} x||^2 dt`.
pub fn obs_constant<T: Real>(a: &Generator<T>, b: &ComplexMatrix<T>, tau: T, beta: T) -> Result<ObservabilityCertificate<T>> {
    if !(beta > T::zero() && beta <= T::one()) {
        return Err(Error::Parameter { name: "beta", reason: format!("must lie in (0, 1], got {beta}") });
    }
    let g = gramian(a, b, tau, T::lit(GRAMIAN_REL_TOL))?;
    certificate_from_gramian(a, g, tau, beta)
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonProbe<T: Real> {
    pub id: String,
    /// `int_0^tau ||B* e^{tA} x||^2`.
    pub undamped: T,
    /// `int_0^tau ||B* e^{tA_B} x||^2`.
    pub damped: T,
    /// `None` when both sides vanish.
    pub ratio: Option<T>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport<T: Real> {
    pub tau: T,
    /// Max probe ratio; zero when every probe is excluded.
    pub c_emp: T,
    /// Max over all data, from the pencil of the two Gramians; absent when
    /// the damped Gramian is singular.
    pub c_pencil: Option<T>,
    pub violated: bool,
    pub probes: Vec<ComparisonProbe<T>>,
}

/// Empirical constant in `int ||B* T(t) x||^2 <= C int ||B* T_B(t) x||^2`.
pub fn damping_comparison<T: Real>(system: &DampedSystem<T>, tau: T, probes: &ProbeSet<T>) -> Result<ComparisonReport<T>> {
    let rel = T::lit(GRAMIAN_REL_TOL);
    let g_a = gramian(&system.a, &system.b, tau, rel)?;
    let g_b = gramian(&system.a_b, &system.b, tau, rel)?;
    let floor = T::lit(1e-14);
    let mut rows = Vec::new();
    let mut c_emp = T::zero();
    let mut violated = false;
    for (id, x) in probes.vectors(system.a.dim())? {
        let undamped = inner(&g_a.matvec(&x), &x).re.max(T::zero());
        let damped = inner(&g_b.matvec(&x), &x).re.max(T::zero());
        let ratio = if undamped < floor && damped < floor {
            None
        } else if damped < floor {
            violated = true;
            Some(T::infinity())
        } else {
            Some(undamped / damped)
        };
        if let Some(r) = ratio {
            c_emp = c_emp.max(r);
        }
        rows.push(ComparisonProbe { id, undamped, damped, ratio });
    }
    let (c_pencil, ..) = pencil_max(&g_a, &g_b)?;
    Ok(ComparisonReport { tau, c_emp, c_pencil, violated, probes: rows })
}

#[derive(Clone, Debug, Serialize)]
pub struct DissipationReport<T: Real> {
    /// `max_t 2 Re<A_B z, z> + 2 ||B* z||^2` with `z = e^{tA_B} x`.
    pub max_violation: T,
    pub argmax_t: T,
    pub values: Vec<(T, T)>,
}

/// Evaluates `d/dt ||z||^2 + 2 ||B* z||^2` along the damped orbit.
pub fn dissipation_check<T: Real>(system: &DampedSystem<T>, x: &[Complex<T>], t_grid: &[T]) -> Result<DissipationReport<T>> {
    if t_grid.is_empty() {
        return Err(Error::Parameter { name: "t_grid", reason: "grid is empty".into() });
    }
    let ab = system.a_b.matrix();
    let bstar = system.b.adjoint();
    let values: Vec<(T, T)> = t_grid
        .par_iter()
        .map(|&t| {
            let z = system.a_b.semigroup_apply(t, x)?;
            let two = T::lit(2.0);
            let bz = vec_norm(&bstar.matvec(&z));
            Ok((t, two * inner(&ab.matvec(&z), &z).re + two * bz * bz))
        })
        .collect::<Result<_>>()?;
    let (argmax_t, max_violation) =
        values.iter().copied().max_by(|x, y| x.1.as_f64().total_cmp(&y.1.as_f64())).expect("nonempty grid");
    Ok(DissipationReport { max_violation, argmax_t, values })
}

#[derive(Clone, Debug, Serialize)]
pub struct BudgetReport<T: Real> {
    /// `max (int_0^T ||sqrt(2) B* z||^2 - ||x||^2 + ||z(T)||^2) / ||x||^2`.
    pub max_violation: T,
    pub pass: bool,
}

/// Energy budget `int_0^T ||sqrt(2) B* e^{tA_B} x||^2 dt <= ||x||^2 - ||e^{TA_B} x||^2`
/// over probes and horizons.
pub fn energy_budget_check<T: Real>(system: &DampedSystem<T>, probes: &ProbeSet<T>, horizons: &[T]) -> Result<BudgetReport<T>> {
    let vectors = probes.vectors(system.a.dim())?;
    let sqrt2_b = system.b.scale_real(T::lit(2.0).sqrt());
    let mut max_violation = T::neg_infinity();
    for &h in horizons {
        let g = gramian(&system.a_b, &sqrt2_b, h, T::lit(GRAMIAN_REL_TOL))?;
        for (_, x) in &vectors {
            let x2 = inner(x, x).re;
            let lhs = inner(&g.matvec(x), x).re;
            let zt = vec_norm(&system.a_b.semigroup_apply(h, x)?);
            max_violation = max_violation.max((lhs - x2 + zt * zt) / x2);
        }
    }
    Ok(BudgetReport { max_violation, pass: max_violation <= T::lit(1e-8) })
}

#[derive(Clone, Debug)]
pub struct PipelineOptions<T: Real> {
    pub decay_window: [T; 2],
    /// Probes for the quadrature cross-checks.
    pub probes: ProbeSet<T>,
    pub rel_tol: T,
}

impl<T: Real> Default for PipelineOptions<T> {
    fn default() -> Self {
        Self {
            decay_window: [T::one(), T::lit(100.0)],
            probes: ProbeSet { basis: false, random: 8, ..ProbeSet::default() },
            rel_tol: T::lit(1e-8),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainLink<T: Real> {
    pub name: &'static str,
    pub pass: bool,
    /// Measured left-hand side (or ratio) of the inequality.
    pub value: T,
    /// Right-hand side it is compared against.
    pub bound: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma41Report<T: Real> {
    pub beta: T,
    pub p: T,
    pub tau: T,
    pub k: T,
    pub observability: Option<ObservabilityCertificate<T>>,
    pub links: Vec<ChainLink<T>>,
    pub first_failure: Option<&'static str>,
    pub decay: Option<DecayFit<T>>,
    /// `-1 / (p beta)`.
    pub predicted_slope: T,
}

impl<T: Real> Lemma41Report<T> {
    pub fn all_pass(&self) -> bool {
        self.first_failure.is_none()
    }
}

fn finite_observed_integral<T: Real>(
    a: &Generator<T>,
    x: &[Complex<T>],
    c: &ComplexMatrix<T>,
    p: T,
    tau: T,
    rel_tol: T,
) -> Result<T> {
    let prop = Propagator::new(a, x, Some(c))?;
    let r = integrate_pieces(
        |t| vec![prop.observe(t).map(|y| vec_norm(&y).powf(p)).unwrap_or(T::nan())],
        &geometric_breakpoints(T::zero(), tau),
        1,
        Tolerance::relative(rel_tol),
    )?;
    Ok(r.value[0])
}

/// The chain from `d/dt ||T(t)x||^p <= -||C T(t)x||^p` and weighted
/// observability on `[0, tau]` to
/// `int_0^inf ||T(t) (I-A)^{-beta} x||^p dt <= K tau ||x||^p`.
///
/// Links, in order: the differential inequality, observability (constant
/// `K`), the weighted integral bound, the energy budget
/// `int_0^inf ||C T(t) x||^p <= ||x||^p`. For `p = 2` the first two are
/// exact matrix inequalities and the last two are checked over all data via
/// Lyapunov solves and cross-checked by quadrature on probes; otherwise all
/// links are probe estimates. A decay fit of `||T(t) A^{-1}||` is attached
/// when every link passes.
pub fn lemma41_pipeline<T: Real>(
    a: &Generator<T>,
    c: &ComplexMatrix<T>,
    beta: T,
    p: T,
    tau: T,
) -> Result<Lemma41Report<T>> {
    lemma41_with(a, c, beta, p, tau, &PipelineOptions::default())
}

pub fn lemma41_with<T: Real>(
    a: &Generator<T>,
    c: &ComplexMatrix<T>,
    beta: T,
    p: T,
    tau: T,
    opts: &PipelineOptions<T>,
) -> Result<Lemma41Report<T>> {
    check_tau(tau)?;
    if !(p >= T::one()) {
        return Err(Error::Parameter { name: "p", reason: format!("must be at least 1, got {p}") });
    }
    if !(beta > T::zero()) {
        return Err(Error::Parameter { name: "beta", reason: format!("must be positive, got {beta}") });
    }
    if c.cols() != a.dim() {
        return Err(Error::Dimension(format!("C has {} columns, generator has dimension {}", c.cols(), a.dim())));
    }
    let n = a.dim();
    let two = T::lit(2.0);
    let is_p2 = (p - two).abs() <= T::epsilon();
    let slack = T::lit(CHAIN_SLACK);
    let mut report = Lemma41Report {
        beta,
        p,
        tau,
        k: T::infinity(),
        observability: None,
        links: Vec::new(),
        first_failure: None,
        decay: None,
        predicted_slope: -T::one() / (p * beta),
    };
    let push = |report: &mut Lemma41Report<T>, link: ChainLink<T>| {
        let ok = link.pass;
        if !ok && report.first_failure.is_none() {
            report.first_failure = Some(link.name);
        }
        report.links.push(link);
        ok
    };
    let probes = opts.probes.vectors(n)?;
    let ctc = c.adjoint_mul(c);

    // Differential inequality.
    let scale = T::one() + a.matrix().frobenius_norm() + ctc.frobenius_norm();
    let tol = T::lit(1e-10) * scale;
    let link = if is_p2 {
        let sym = &(a.matrix() + &a.matrix().adjoint()) + &ctc;
        let top = linalg::max_hermitian_eigenvalue(&sym)?;
        ChainLink { name: "differential_inequality", pass: top <= tol, value: top, bound: T::zero() }
    } else {
        let mut worst = T::neg_infinity();
        for (_, x) in &probes {
            for k in 0..=32 {
                let t = tau * T::from_usize_lossy(k) / T::lit(32.0);
                let z = a.semigroup_apply(t, x)?;
                let zn = vec_norm(&z);
                let cz = vec_norm(&c.matvec(&z));
                let deriv = if zn > T::zero() { p * zn.powf(p - two) * inner(&a.matrix().matvec(&z), &z).re } else { T::zero() };
                worst = worst.max(deriv + cz.powf(p));
            }
        }
        ChainLink { name: "differential_inequality", pass: worst <= tol, value: worst, bound: T::zero() }
    };
    if !push(&mut report, link) {
        return Ok(report);
    }

    // Observability.
    let f = weight(a, beta)?;
    let link = if is_p2 {
        let g = gram_integral(a, &ctc, Some(tau), T::lit(GRAMIAN_REL_TOL), DEFAULT_NODE_BUDGET)?.0.hermitian_part();
        let cert = certificate_from_gramian(a, g, tau, beta)?;
        report.k = cert.k;
        let link = ChainLink {
            name: "observability",
            pass: cert.feasible,
            value: cert.min_eigenvalue,
            bound: T::lit(FEASIBILITY_RATIO) * cert.max_eigenvalue,
        };
        report.observability = Some(cert);
        link
    } else {
        let mut k = T::zero();
        for (_, x) in &probes {
            let lhs = vec_norm(&f.matvec(x)).powf(p);
            let rhs = finite_observed_integral(a, x, c, p, tau, opts.rel_tol)?;
            k = k.max(if rhs > T::zero() { lhs / rhs } else { T::infinity() });
        }
        report.k = k;
        ChainLink { name: "observability", pass: k.is_finite(), value: k, bound: T::infinity() }
    };
    if !push(&mut report, link) {
        return Ok(report);
    }
    let k_tau = report.k * tau;

    // Weighted integral bound, then energy budget.
    let orbit_opts = OrbitOptions::with_rel_tol(opts.rel_tol);
    let env = envelope(a)?;
    let mut probe_weighted = T::zero();
    let mut probe_budget = T::zero();
    for (_, x) in &probes {
        let x_p = vec_norm(x).powf(p);
        let wv = observed_lp_integral(a, &f.matvec(x), None, p, &env, &orbit_opts)?;
        probe_weighted = probe_weighted.max((wv.value + wv.tail_bound) / (k_tau * x_p));
        let bv = observed_lp_integral(a, x, Some(c), p, &env, &orbit_opts)?;
        probe_budget = probe_budget.max(bv.value / x_p);
    }
    let (weighted, budget) = if is_p2 {
        let p_id = solve_lyapunov(a, &ComplexMatrix::identity(n))?;
        let weighted = linalg::norm2(&f.adjoint_mul(&p_id.matmul(&f)))? / k_tau;
        let p_c = solve_lyapunov(a, &ctc)?;
        let budget = linalg::max_hermitian_eigenvalue(&p_c)?;
        (weighted.max(probe_weighted), budget.max(probe_budget))
    } else {
        (probe_weighted, probe_budget)
    };
    let link = ChainLink { name: "weighted_integral_bound", pass: weighted <= T::one() + slack, value: weighted, bound: T::one() };
    if !push(&mut report, link) {
        return Ok(report);
    }
    let link = ChainLink { name: "energy_budget", pass: budget <= T::one() + slack, value: budget, bound: T::one() };
    if !push(&mut report, link) {
        return Ok(report);
    }

    let inv = a.inverse()?;
    report.decay = Some(decay_fit(a, &inv, opts.decay_window, SAMPLES_PER_DECADE)?);
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Hypothesis holds and every link of the chain passes.
    Pass,
    /// The undamped system is not observable in the weighted sense.
    HypothesisFails,
    /// The chain for the damped system breaks.
    ChainFails,
}

#[derive(Clone, Debug, Serialize)]
pub struct Thm42Report<T: Real> {
    pub beta: T,
    pub tau: T,
    pub hypothesis: ObservabilityCertificate<T>,
    pub comparison: Option<ComparisonReport<T>>,
    /// `||F_{A_B} F_A^{-1}||` and `||F_A F_{A_B}^{-1}||`.
    pub norm_equivalence: Option<[T; 2]>,
    /// `K` carried to the damped system through the comparison and the
    /// norm equivalence.
    pub transferred_k: Option<T>,
    pub pipeline: Option<Lemma41Report<T>>,
    /// Pipeline constant does not exceed the transferred one.
    pub transfer_consistent: Option<bool>,
    pub predicted_slope: T,
    pub observed_slope: Option<T>,
    /// The decay fit only sees the exponential tail of a finite system.
    pub exponential_only: Option<bool>,
    pub verdict: Verdict,
}

/// Observability of the undamped semigroup, carried through the damping
/// comparison to the decay chain for `A_B = A - B B*` with `C = sqrt(2) B*`.
pub fn thm42_verdict<T: Real>(system: &DampedSystem<T>, beta: T, tau: T) -> Result<Thm42Report<T>> {
    thm42_with(system, beta, tau, &PipelineOptions::default())
}

pub fn thm42_with<T: Real>(
    system: &DampedSystem<T>,
    beta: T,
    tau: T,
    opts: &PipelineOptions<T>,
) -> Result<Thm42Report<T>> {
    if !system.a.is_contractive() {
        return Err(Error::Precondition(format!(
            "undamped generator is not contractive (margin {})",
            system.a.dissipativity_margin()
        )));
    }
    let hypothesis = obs_constant(&system.a, &system.b, tau, beta)?;
    let predicted_slope = -T::one() / (T::lit(2.0) * beta);
    let mut report = Thm42Report {
        beta,
        tau,
        hypothesis,
        comparison: None,
        norm_equivalence: None,
        transferred_k: None,
        pipeline: None,
        transfer_consistent: None,
        predicted_slope,
        observed_slope: None,
        exponential_only: None,
        verdict: Verdict::HypothesisFails,
    };
    if !report.hypothesis.feasible {
        return Ok(report);
    }
    let comparison = damping_comparison(system, tau, &ProbeSet::default())?;

    let f_a = weight(&system.a, beta)?;
    let f_b = weight(&system.a_b, beta)?;
    let up = linalg::norm2(&f_b.matmul(&f_a.inverse()?))?;
    let down = linalg::norm2(&f_a.matmul(&f_b.inverse()?))?;
    report.norm_equivalence = Some([up, down]);
    let transferred = comparison.c_pencil.map(|c| up * up * report.hypothesis.k * c / T::lit(2.0));
    report.transferred_k = transferred;
    report.comparison = Some(comparison);

    let c = system.b.adjoint().scale_real(T::lit(2.0).sqrt());
    let pipeline = lemma41_with(&system.a_b, &c, beta, T::lit(2.0), tau, opts)?;
    report.transfer_consistent = transferred.map(|k| pipeline.k <= k * (T::one() + T::lit(CHAIN_SLACK)));
    if let Some(fit) = &pipeline.decay {
        report.observed_slope = Some(fit.slope);
        report.exponential_only = Some(fit.contaminated);
    }
    report.verdict = if pipeline.all_pass() { Verdict::Pass } else { Verdict::ChainFails };
    report.pipeline = Some(pipeline);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_damped_wave, damp};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar(z: Complex64) -> Generator<f64> {
        Generator::new(ComplexMatrix::new(1, 1, vec![z]).unwrap()).unwrap()
    }

    fn one() -> ComplexMatrix<f64> {
        ComplexMatrix::from_real(1, 1, &[1.0]).unwrap()
    }

    #[test]
    fn scalar_gramians() {
        let g = gramian(&scalar(c(-1.0, 0.0)), &one(), 1.0, 1e-12).unwrap();
        assert!((g[(0, 0)].re - 0.432_332_358_381_693_6).abs() < 1e-10);
        let g = gramian(&scalar(c(0.0, 0.0)), &one(), 3.0, 1e-12).unwrap();
        assert!((g[(0, 0)].re - 3.0).abs() < 1e-10);
        let g = gramian(&scalar(c(0.0, 1.0)), &one(), 2.0 * PI, 1e-12).unwrap();
        assert!((g[(0, 0)].re - 2.0 * PI).abs() < 1e-10);
        assert!(gramian(&scalar(c(0.0, 1.0)), &one(), 0.0, 1e-12).is_err());
    }

    #[test]
    fn scalar_constants() {
        let cert = obs_constant(&scalar(c(-1.0, 0.0)), &one(), 1.0, 1.0).unwrap();
        assert!((cert.k - 0.25 / 0.432_332_358_381_693_6).abs() < 1e-9);
        assert!(cert.feasible);
        let cert = obs_constant(&scalar(c(0.0, 1.0)), &one(), 2.0 * PI, 1.0).unwrap();
        assert!((cert.k - 1.0 / (4.0 * PI)).abs() < 1e-10);
        assert!(obs_constant(&scalar(c(0.0, 1.0)), &one(), 1.0, 1.5).is_err());
    }

    #[test]
    fn unobservable_mode() {
        let a = Generator::new(ComplexMatrix::from_diag(&[c(0.0, 1.0), c(0.0, 2.0)])).unwrap();
        let b = ComplexMatrix::from_real(2, 1, &[1.0, 0.0]).unwrap();
        let cert = obs_constant(&a, &b, 1.0, 1.0).unwrap();
        assert!(!cert.feasible);
        assert!(cert.k.is_infinite());
        let null = cert.null_direction.unwrap();
        assert!(null[0].norm() < 1e-12 && (null[1].norm() - 1.0).abs() < 1e-12);

        let sys = damp(&a, &b).unwrap();
        let c_obs = b.adjoint().scale_real(2f64.sqrt());
        let r = lemma41_pipeline(&sys.a_b, &c_obs, 1.0, 2.0, 1.0).unwrap();
        assert_eq!(r.first_failure, Some("observability"));
        assert!(!r.observability.unwrap().feasible);
    }

    #[test]
    fn scalar_comparison() {
        let sys = damp(&scalar(c(0.0, 1.0)), &one()).unwrap();
        let r = damping_comparison(&sys, 1.0, &ProbeSet::basis_only()).unwrap();
        assert!((r.c_emp - 1.0 / 0.432_332_358_381_693_6).abs() < 1e-9);
        assert!(!r.violated);

        let zero = ComplexMatrix::from_real(1, 1, &[0.0]).unwrap();
        let sys = damp(&scalar(c(0.0, 1.0)), &zero).unwrap();
        let r = damping_comparison(&sys, 1.0, &ProbeSet::basis_only()).unwrap();
        assert_eq!(r.c_emp, 0.0);
        assert!(r.probes[0].ratio.is_none());
    }

    #[test]
    fn dissipation_examples() {
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.25).collect();
        let sys = damp(&scalar(c(0.0, 1.0)), &one()).unwrap();
        let r = dissipation_check(&sys, &[c(1.0, 0.0)], &grid).unwrap();
        assert!(r.values.iter().all(|v| v.1.abs() < 1e-10));

        let zero = ComplexMatrix::from_real(1, 1, &[0.0]).unwrap();
        let sys = damp(&scalar(c(-1.0, 0.0)), &zero).unwrap();
        let r = dissipation_check(&sys, &[c(1.0, 0.0)], &grid).unwrap();
        for &(t, v) in &r.values {
            assert!((v + 2.0 * (-2.0 * t).exp()).abs() < 1e-12);
        }
        assert!(r.max_violation < 0.0);
    }

    #[test]
    fn scalar_lemma_chain() {
        let a = scalar(c(-1.0, 1.0));
        let c_obs = ComplexMatrix::from_real(1, 1, &[2f64.sqrt()]).unwrap();
        let r = lemma41_pipeline(&a, &c_obs, 1.0, 2.0, 1.0).unwrap();
        assert!(r.all_pass(), "{:?}", r.links);
        let budget = r.links.iter().find(|l| l.name == "energy_budget").unwrap();
        assert!((budget.value - 1.0).abs() < 1e-8);
        assert!((r.k - 0.2 / (1.0 - (-2f64).exp())).abs() < 1e-9);
        assert!(r.decay.unwrap().contaminated);
    }

    #[test]
    fn general_p_chain_runs() {
        let a = scalar(c(-1.0, 1.0));
        let c_obs = ComplexMatrix::from_real(1, 1, &[1.0]).unwrap();
        // d/dt |z|^3 = -3 |z|^3 <= -|z|^3
        let r = lemma41_pipeline(&a, &c_obs, 1.0, 3.0, 1.0).unwrap();
        assert!(r.all_pass(), "{:?}", r.links);
    }

    #[test]
    fn scalar_verdict() {
        let sys = damp(&scalar(c(0.0, 1.0)), &one()).unwrap();
        let r = thm42_verdict(&sys, 1.0, 2.0 * PI).unwrap();
        assert!((r.hypothesis.k - 1.0 / (4.0 * PI)).abs() < 1e-10);
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.exponential_only, Some(true));
        assert_eq!(r.transfer_consistent, Some(true));

        let bad = Generator::new(ComplexMatrix::from_real(1, 1, &[0.5]).unwrap()).unwrap();
        let sys = DampedSystem { a: bad.clone(), b: one(), a_b: bad };
        assert!(matches!(thm42_verdict(&sys, 1.0, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn small_wave_budget_and_dissipation() {
        let sys = build_damped_wave(6, |_: f64| 1.0).unwrap();
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 * 0.3).collect();
        let x: Vec<Complex64> = (0..12).map(|i| c(1.0 / (1.0 + i as f64), 0.0)).collect();
        assert!(dissipation_check(&sys, &x, &grid).unwrap().max_violation <= 1e-8);
        let r = energy_budget_check(&sys, &ProbeSet::default(), &[0.5, 1.0, 2.0]).unwrap();
        assert!(r.pass, "{r:?}");
        let g = gramian(&sys.a_b, &sys.b, 2.0, 1e-10).unwrap();
        assert!(linalg::min_hermitian_eigenvalue(&g).unwrap() > 0.0);
    }
}
