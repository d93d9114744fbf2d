//! Monte Carlo engine: exact joint-Gaussian simulation of the Volterra
//! process driving rough Bergomi variance, a conditional-Gaussian put
//! pricer, an independent Euler cross-check, smile and at-the-money skew
//! estimation, and statistical checks of the Wiener–Itô conditional-
//! expectation identities that underpin the expansion.

pub mod appendix;
pub mod covariance;
pub mod engine;
pub(crate) mod stats;

pub use appendix::{
    appendix_full_report, appendix_identity_check, IdentityKind, KernelChoice, ProjectionRow,
};
pub use covariance::{build_covariance, GaussianFactorization, MAX_STEPS};
pub use engine::{
    martingale_check, mc_atm_skew, mc_smile, price_put_conditional, price_put_euler,
    simulate_variance_paths, ConditionalGaussianState, Estimator, MCConfig, McEstimate,
    McSmilePoint, PathStats, SkewReport,
};
