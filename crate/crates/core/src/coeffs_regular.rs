//! Expansion coefficients for regular Markov stochastic-volatility models.
//!
//! For a volatility process v_t = v(X_t) driven by a Markov diffusion
//! dX = b dt + c dW and spot-vol correlation rho, the second-order expansion
//! holds with H = 1/2 and coefficients determined by three point values at
//! the initial state: f0 = sqrt(v(X0)), g0 = (f'c)(X0) and (g'c)(X0), where
//! f = sqrt(v) and g = f'c. The generator term Lv(X0) enters only through an
//! O(theta) correction to the annualized level kappa2 and is optional.
//!
//! Presets do the calculus symbolically for two standard models (a
//! Heston-type square-root variance and a lognormal-volatility model), so
//! the caller supplies model parameters, not derivatives.

use crate::error::{Error, Result};

/// Point evaluations at the initial state that determine the expansion
/// coefficients of a regular Markov stochastic-volatility model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularSVInputs {
    f0: f64,
    g0: f64,
    gprime_c0: f64,
    rho: f64,
    lv0: Option<f64>,
}

impl RegularSVInputs {
    pub fn new(f0: f64, g0: f64, gprime_c0: f64, rho: f64, lv0: Option<f64>) -> Result<Self> {
        if !(f0 > 0.0) || !f0.is_finite() {
            return Err(Error::Domain(format!(
                "spot volatility f0 must be positive and finite, got {f0}"
            )));
        }
        if !g0.is_finite() || !gprime_c0.is_finite() {
            return Err(Error::Domain(format!(
                "g0 and g'c must be finite, got {g0} and {gprime_c0}"
            )));
        }
        if !(rho.abs() < 1.0) {
            return Err(Error::Domain(format!(
                "correlation must satisfy |rho| < 1, got {rho}"
            )));
        }
        if let Some(lv) = lv0 {
            if !lv.is_finite() {
                return Err(Error::Domain(format!(
                    "generator term Lv(X0) must be finite, got {lv}"
                )));
            }
        }
        Ok(Self {
            f0,
            g0,
            gprime_c0,
            rho,
            lv0,
        })
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn g0(&self) -> f64 {
        self.g0
    }

    pub fn gprime_c0(&self) -> f64 {
        self.gprime_c0
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn lv0(&self) -> Option<f64> {
        self.lv0
    }

    /// Third-order coefficient kappa3 = (rho/2) g0/f0.
    pub fn kappa3(&self) -> f64 {
        0.5 * self.rho * self.g0 / self.f0
    }

    /// Fourth-order coefficient
    /// kappa4 = (g'c)0/f0 * rho^2/6 + (g0/f0)^2 (1 + 2 rho^2)/6.
    pub fn kappa4(&self) -> f64 {
        let ratio = self.g0 / self.f0;
        self.gprime_c0 / self.f0 * self.rho * self.rho / 6.0
            + ratio * ratio * (1.0 + 2.0 * self.rho * self.rho) / 6.0
    }

    /// Annualized level kappa2 = sigma0(theta)/sqrt(theta): the spot vol f0,
    /// plus the O(theta) generator correction Lv(X0) theta/(4 f0) when the
    /// generator term was supplied.
    pub fn kappa2(&self, theta: f64) -> Result<f64> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::Domain(format!(
                "time to maturity must be positive and finite, got {theta}"
            )));
        }
        Ok(match self.lv0 {
            None => self.f0,
            Some(lv) => self.f0 + 0.25 * lv * theta / self.f0,
        })
    }
}

/// Named regular-SV models with the state-space calculus done symbolically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegularPreset {
    /// Square-root variance dv = lambda (mu - v) dt + xi sqrt(v) dW started
    /// at v0. Then f = sqrt(v) gives g = f'c = xi/2 (constant), g'c = 0 and
    /// Lv(X0) = lambda (mu - v0).
    HestonLike {
        v0: f64,
        lambda: f64,
        mu: f64,
        xi: f64,
        rho: f64,
    },
    /// Lognormal volatility alpha = sqrt(v) started at alpha0, with nu the
    /// volatility of the instantaneous VARIANCE: dv = nu v dW (driftless
    /// variance, so Lv(X0) = 0; the classical vol-of-vol of alpha itself is
    /// nu/2). In state x = log v: f = e^{x/2}, c = nu, g = (nu/2) e^{x/2},
    /// g'c = (nu^2/4) e^{x/2}.
    LognormalSabr { alpha0: f64, nu: f64, rho: f64 },
}

impl RegularPreset {
    /// Evaluate the preset's point inputs at its spot state. The presets
    /// restrict to parameters where v is smooth and bounded away from zero
    /// at the initial state (positive spot variance).
    pub fn inputs(&self) -> Result<RegularSVInputs> {
        match *self {
            RegularPreset::HestonLike {
                v0,
                lambda,
                mu,
                xi,
                rho,
            } => {
                if !(v0 > 0.0) || !v0.is_finite() {
                    return Err(Error::Domain(format!(
                        "spot variance must be positive and finite, got {v0}"
                    )));
                }
                if !(xi >= 0.0) || !xi.is_finite() {
                    return Err(Error::Domain(format!(
                        "vol-of-vol xi must be nonnegative and finite, got {xi}"
                    )));
                }
                if !(lambda >= 0.0) || !(mu >= 0.0) || !lambda.is_finite() || !mu.is_finite() {
                    return Err(Error::Domain(format!(
                        "mean reversion requires lambda >= 0 and mu >= 0, got {lambda} and {mu}"
                    )));
                }
                RegularSVInputs::new(
                    v0.sqrt(),
                    0.5 * xi,
                    0.0,
                    rho,
                    Some(lambda * (mu - v0)),
                )
            }
            RegularPreset::LognormalSabr { alpha0, nu, rho } => {
                if !(alpha0 > 0.0) || !alpha0.is_finite() {
                    return Err(Error::Domain(format!(
                        "spot volatility alpha0 must be positive and finite, got {alpha0}"
                    )));
                }
                if !(nu >= 0.0) || !nu.is_finite() {
                    return Err(Error::Domain(format!(
                        "variance vol-of-vol nu must be nonnegative and finite, got {nu}"
                    )));
                }
                RegularSVInputs::new(
                    alpha0,
                    0.5 * nu * alpha0,
                    0.25 * nu * nu * alpha0,
                    rho,
                    Some(0.0),
                )
            }
        }
    }
}
