//! Small-time expansions of option prices and Black-Scholes implied
//! volatility under stochastic volatility models, together with the model
//! coefficient calculators (Markovian and rough Bergomi) and a Monte Carlo
//! engine for validating the expansions.

pub mod blackscholes;
pub mod coeffs_rbergomi;
pub mod coeffs_regular;
pub mod error;
pub mod expansion;
pub mod mc;
pub mod presets;
pub mod quad;
pub mod specfun;

pub use error::{Error, Result};
