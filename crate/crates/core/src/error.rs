use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("eigenvector matrix too ill-conditioned (condition estimate {condition:e} > {limit:e})")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("near-singular resolvent: distance to spectrum {distance:e}")]
    NearSingular { distance: f64 },

    #[error("fractional power undefined: eigenvalue at distance {distance:e} from 1")]
    FractionalSingularity { distance: f64 },

    #[error("near-singular Lyapunov operator: min |conj(l_j) + l_k| = {margin:e}")]
    LyapunovSingular { margin: f64 },

    #[error("spectral abscissa {abscissa} is not negative; boundedness and decay cannot be certified")]
    NotStable { abscissa: f64 },

    #[error("generator is not contractive: dissipativity margin {margin} > 0")]
    NotContractive { margin: f64 },

    #[error("quadrature node budget {budget} exhausted: best estimate {estimate:e}, error {error:e}")]
    Budget { budget: usize, estimate: f64, error: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("matrix market: {0}")]
    MatrixMarket(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
