//! Numerical lab for non-uniform (polynomial) stability of finite-dimensional
//! contraction semigroups `T(t) = e^{tA}`.
//!
//! The crate measures how fractional-power weighted orbit integrals,
//! resolvent growth along the imaginary axis, weighted Lyapunov operators and
//! weighted observability constants behave as the dimension of a model family
//! grows. Quantities that stay bounded in `N` are the finite-dimensional
//! shadow of polynomial decay of the limiting semigroup.
//!
//! Every routine is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix `f64`.
//!
//! ```
//! use semistab::{orbits, DiagonalModelSpec};
//!
//! let a = semistab::models::build_diagonal(&DiagonalModelSpec::new(20, 1.0)).unwrap();
//! let cert = orbits::datko_constant(&a, 0.6, 2.0, &orbits::ProbeSet::basis_only()).unwrap();
//! assert!(cert.k.is_finite());
//! ```

pub mod decay;
pub mod error;
pub mod fit;
pub mod linalg;
pub mod lyapunov;
pub mod matfun;
pub mod models;
pub mod mtx;
pub mod observability;
pub mod orbits;
pub mod quadrature;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix = linalg::ComplexMatrix<f64>;
pub type Vector = linalg::CVector<f64>;
pub type Generator = matfun::Generator<f64>;
pub type DampedSystem = models::DampedSystem<f64>;
pub type DiagonalModelSpec = models::DiagonalModelSpec<f64>;
pub type DatkoCertificate = orbits::DatkoCertificate<f64>;
pub type LyapunovCertificate = lyapunov::LyapunovCertificate<f64>;
pub type ObservabilityCertificate = observability::ObservabilityCertificate<f64>;
pub type DecayFit = decay::DecayFit<f64>;
