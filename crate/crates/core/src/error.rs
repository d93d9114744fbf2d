//! Error type shared across the library.

pub type Result<T> = std::result::Result<T, Error>;

/// Which no-arbitrage bound a price violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Lower,
    Upper,
}

impl std::fmt::Display for BoundSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundSide::Lower => write!(f, "lower"),
            BoundSide::Upper => write!(f, "upper"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The price does not admit an implied volatility: it sits on or outside
    /// the no-arbitrage range of normalized put prices.
    #[error("price {price:e} violates the {side} no-arbitrage bound {bound:e} for normalized puts")]
    Arbitrage {
        price: f64,
        bound: f64,
        side: BoundSide,
    },

    /// The second-order implied-vol expansion produced a non-positive value;
    /// the (theta, z) point is outside the expansion's domain of validity.
    #[error("implied-vol expansion out of domain at theta={theta}, z={z}: value {value:e} <= 0")]
    ExpansionOutOfDomain { theta: f64, z: f64, value: f64 },

    /// A quadrature routine could not reach its accuracy target.
    #[error("quadrature did not converge: achieved relative error {achieved:e}, requested {requested:e}")]
    QuadratureAccuracy { achieved: f64, requested: f64 },

    /// A covariance matrix failed its Cholesky factorization. This usually
    /// means the exponent h is too small for the grid resolution; adding a
    /// diagonal jitter of about 1e-12 is the standard workaround.
    #[error("covariance not positive definite at pivot {pivot}; h may be too small for this grid resolution (consider a diagonal jitter of ~1e-12)")]
    NotPositiveDefinite { pivot: usize },

    /// The requested estimator cannot run with the given parameters.
    #[error("estimator unavailable: {0}")]
    EstimatorUnavailable(String),
}
