//! Normalized Black–Scholes put prices and their inversion to implied vol.
//!
//! Prices are normalized by the forward and by sqrt(theta):
//! P(theta, z, sigma) = (1/sqrt(theta)) * [Phi(z/sigma + sigma*sqrt(theta)/2) e^{sqrt(theta) z}
//!                                         - Phi(z/sigma - sigma*sqrt(theta)/2)],
//! where the log-moneyness is k = sqrt(theta) * z. For fixed (theta, z) the
//! price increases strictly in sigma from (e^k - 1)_+/sqrt(theta) (the sigma = 0
//! intrinsic value) to e^k/sqrt(theta).
//!
//! Two moneyness conventions appear in the expansions: z with k = sqrt(theta) z
//! (annualized, used for smiles) and z with k = sigma0 z (used by the price
//! expansion). `NormalizedQuote` carries the convention tag explicitly and
//! converts between the two.

use crate::error::{BoundSide, Error, Result};
use crate::specfun::{norm_cdf, norm_pdf};

/// Moneyness convention tag: which scale factor turns z into log-moneyness k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Moneyness {
    /// k = sqrt(theta) * z; prices are normalized by sqrt(theta).
    SqrtTheta,
    /// k = sigma0 * z; prices are normalized by sigma0.
    Sigma0,
}

/// A normalized option quote together with its moneyness convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedQuote {
    pub theta: f64,
    pub z: f64,
    pub value: f64,
    pub convention: Moneyness,
}

impl NormalizedQuote {
    /// Re-express the quote in the other convention. Both z and the value
    /// scale by sigma0/sqrt(theta) when moving from Sigma0 to SqrtTheta
    /// (the log-moneyness k and the unnormalized price are invariant).
    pub fn convert_to(&self, target: Moneyness, sigma0: f64) -> Result<NormalizedQuote> {
        if !(self.theta > 0.0) {
            return Err(Error::Domain(format!(
                "quote conversion requires theta > 0, got {}",
                self.theta
            )));
        }
        if !(sigma0 > 0.0) {
            return Err(Error::Domain(format!(
                "quote conversion requires sigma0 > 0, got {sigma0}"
            )));
        }
        if target == self.convention {
            return Ok(*self);
        }
        let ratio = sigma0 / self.theta.sqrt(); // = kappa2
        let factor = match target {
            Moneyness::SqrtTheta => ratio,
            Moneyness::Sigma0 => 1.0 / ratio,
        };
        Ok(NormalizedQuote {
            theta: self.theta,
            z: self.z * factor,
            value: self.value * factor,
            convention: target,
        })
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::Domain(format!(
            "time to maturity must be positive and finite, got {theta}"
        )));
    }
    Ok(())
}

/// Normalized Black–Scholes put price in the sqrt(theta) convention.
/// sigma = 0 returns the intrinsic value (e^k - 1)_+/sqrt(theta).
pub fn normalized_put(theta: f64, z: f64, sigma: f64) -> Result<f64> {
    check_theta(theta)?;
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!(
            "volatility must be nonnegative and finite, got {sigma}"
        )));
    }
    let sqrt_theta = theta.sqrt();
    let k = sqrt_theta * z;
    if sigma == 0.0 {
        return Ok((k.exp() - 1.0).max(0.0) / sqrt_theta);
    }
    let d1 = z / sigma + 0.5 * sigma * sqrt_theta;
    let d2 = z / sigma - 0.5 * sigma * sqrt_theta;
    let value = if z <= 0.0 {
        norm_cdf(d1) * k.exp() - norm_cdf(d2)
    } else {
        // time-value form: accurate deep in the money, where the direct
        // difference of two numbers near e^k and 1 would cancel
        (k.exp() - 1.0) + norm_cdf(-d2) - k.exp() * norm_cdf(-d1)
    };
    Ok(value / sqrt_theta)
}

/// Derivative of the normalized put with respect to sigma. By the identity
/// phi(d1) e^k = phi(d2) the usual vega collapses to phi(d2).
pub fn normalized_vega(theta: f64, z: f64, sigma: f64) -> Result<f64> {
    check_theta(theta)?;
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!(
            "vega requires sigma > 0, got {sigma}"
        )));
    }
    Ok(norm_pdf(z / sigma - 0.5 * sigma * theta.sqrt()))
}

/// The two standardized arguments of the Black–Scholes distribution terms,
/// f1 = k/(sqrt(theta) sigma) - sqrt(theta) sigma/2 and
/// f2 = k/(sqrt(theta) sigma) + sqrt(theta) sigma/2,
/// which drive the digital-based skew representation. f1 vanishes exactly at
/// k = theta sigma^2 / 2.
pub fn bs_derivative_terms(theta: f64, k: f64, sigma: f64) -> Result<(f64, f64)> {
    check_theta(theta)?;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!(
            "bs_derivative_terms requires sigma > 0, got {sigma}"
        )));
    }
    let st = theta.sqrt();
    let base = k / (st * sigma);
    let half = 0.5 * st * sigma;
    Ok((base - half, base + half))
}

/// No-arbitrage range (open interval) of normalized put prices at (theta, z).
pub fn no_arbitrage_bounds(theta: f64, z: f64) -> Result<(f64, f64)> {
    check_theta(theta)?;
    let sqrt_theta = theta.sqrt();
    let k = sqrt_theta * z;
    Ok((
        (k.exp() - 1.0).max(0.0) / sqrt_theta,
        k.exp() / sqrt_theta,
    ))
}

/// Invert the normalized put price to an implied volatility.
///
/// The price must lie strictly inside the open no-arbitrage interval; a price
/// on or beyond a bound raises an arbitrage error identifying that bound.
/// The solver brackets the root, bisects the bracket down to width 1e-3, then
/// runs safeguarded Newton steps with the analytic vega, falling back to
/// bisection whenever a Newton step would leave the bracket. Iteration stops
/// at a machine-precision fixpoint, so round-tripping a representable price
/// recovers sigma to well below 1e-10.
pub fn implied_vol(theta: f64, z: f64, price: f64) -> Result<f64> {
    let (lower, upper) = no_arbitrage_bounds(theta, z)?;
    if !price.is_finite() || price <= lower {
        return Err(Error::Arbitrage {
            price,
            bound: lower,
            side: BoundSide::Lower,
        });
    }
    if price >= upper {
        return Err(Error::Arbitrage {
            price,
            bound: upper,
            side: BoundSide::Upper,
        });
    }

    let eval = |sigma: f64| normalized_put(theta, z, sigma).expect("sigma >= 0 by construction");

    // bracket: P(0) = lower < price, expand hi until P(hi) >= price
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut f_hi = eval(hi) - price;
    let mut guard = 0;
    while f_hi < 0.0 {
        lo = hi;
        hi *= 2.0;
        f_hi = eval(hi) - price;
        guard += 1;
        if guard > 60 {
            // price < upper strictly, so a finite bracket exists; reaching
            // here means the price is within rounding of the bound
            return Err(Error::Arbitrage {
                price,
                bound: upper,
                side: BoundSide::Upper,
            });
        }
    }

    // phase 1: plain bisection down to an interval of width 1e-3
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if eval(mid) - price < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // phase 2: safeguarded Newton inside [lo, hi]
    let mut sigma = 0.5 * (lo + hi);
    let mut last_step = f64::INFINITY;
    for _ in 0..200 {
        let residual = eval(sigma) - price;
        if residual == 0.0 {
            break;
        }
        if residual < 0.0 {
            lo = lo.max(sigma);
        } else {
            hi = hi.min(sigma);
        }
        let vega = norm_pdf(z / sigma - 0.5 * sigma * theta.sqrt());
        let newton = sigma - residual / vega;
        let next = if vega > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - sigma).abs();
        sigma = next;
        if step <= 1e-15 * sigma.max(1.0) && last_step <= 1e-14 * sigma.max(1.0) {
            break;
        }
        last_step = step;
        if hi - lo <= 1e-16 * sigma.max(1.0) {
            break;
        }
    }
    Ok(sigma)
}
