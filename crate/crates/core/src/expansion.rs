//! Second-order small-time expansions driven by the cumulant-like
//! coefficients (sigma0, kappa3, kappa4).
//!
//! The density of the normalized log return X (log S_theta/F = sigma0 * X) is
//! approximated by a shifted Gaussian with Hermite-polynomial corrections:
//!
//!   q(x) = phi(x + sigma0/2) {1 + kappa3 [H3(x + sigma0/2)
//!            - sigma0 H2(x + sigma0/2)] theta^H}
//!          + phi(x) [kappa4 H4(x) + (kappa3^2/2) H6(x)] theta^{2H},
//!
//! from which closed-form expansions of the normalized put price, of the
//! Black-Scholes implied volatility, and of the at-the-money digital price,
//! density, skew and curvature all follow. The remainder of each formula is
//! o(theta^{2H}) in its own scale; nothing here controls the constants, so
//! callers own the choice of theta small enough for the asymptotic regime
//! (see `implied_vol_expansion`, which fails loudly when it leaves it).
//!
//! Two moneyness conventions appear, mirroring the two natural scales:
//! `put_price_expansion` takes z with k = sigma0 * z while
//! `implied_vol_expansion` and the smile outputs take z with k = sqrt(theta) * z.
//! `blackscholes::NormalizedQuote` converts between them.

use crate::error::{Error, Result};
use crate::specfun::{hermite, norm_cdf, norm_pdf};

/// Expansion coefficient set for one maturity: the exponent H, the total
/// standard deviation sigma0 = sigma0(theta), its annualized form
/// kappa2 = sigma0/sqrt(theta), and the dimensionless third- and fourth-order
/// coefficients kappa3, kappa4. Constructed only through `new`, which derives
/// kappa2, so the invariant sigma0 = kappa2 * sqrt(theta) holds exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionCoefficients {
    theta: f64,
    h: f64,
    sigma0: f64,
    kappa2: f64,
    kappa3: f64,
    kappa4: f64,
}

impl ExpansionCoefficients {
    pub fn new(theta: f64, h: f64, sigma0: f64, kappa3: f64, kappa4: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::Domain(format!(
                "time to maturity must be positive and finite, got {theta}"
            )));
        }
        if !(h > 0.0 && h <= 0.5) {
            return Err(Error::Domain(format!(
                "exponent H must lie in (0, 1/2], got {h}"
            )));
        }
        if !(sigma0 > 0.0) || !sigma0.is_finite() {
            return Err(Error::Domain(format!(
                "total standard deviation sigma0 must be positive and finite, got {sigma0}"
            )));
        }
        if !kappa3.is_finite() || !kappa4.is_finite() {
            return Err(Error::Domain(format!(
                "kappa3 and kappa4 must be finite, got {kappa3} and {kappa4}"
            )));
        }
        Ok(Self {
            theta,
            h,
            sigma0,
            kappa2: sigma0 / theta.sqrt(),
            kappa3,
            kappa4,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn hurst(&self) -> f64 {
        self.h
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn kappa2(&self) -> f64 {
        self.kappa2
    }

    pub fn kappa3(&self) -> f64 {
        self.kappa3
    }

    pub fn kappa4(&self) -> f64 {
        self.kappa4
    }

    /// theta^H, the scale of the third-order correction.
    pub fn theta_pow_h(&self) -> f64 {
        self.theta.powf(self.h)
    }

    /// Approximate density q(x) of the normalized log return at x.
    pub fn density_q(&self, x: f64) -> f64 {
        let th = self.theta_pow_h();
        let xs = x + 0.5 * self.sigma0;
        let third = self.kappa3 * (hermite(3, xs) - self.sigma0 * hermite(2, xs)) * th;
        let fourth =
            (self.kappa4 * hermite(4, x) + 0.5 * self.kappa3 * self.kappa3 * hermite(6, x))
                * th
                * th;
        norm_pdf(xs) * (1.0 + third) + norm_pdf(x) * fourth
    }

    /// Normalized put price expansion at log-moneyness k = sigma0 * z; the
    /// price is normalized by forward, discount factor and sigma0, so the
    /// leading term is the Black-Scholes put in the same normalization.
    pub fn put_price_expansion(&self, z: f64) -> f64 {
        let s = self.sigma0;
        let th = self.theta_pow_h();
        let zp = z + 0.5 * s;
        let zm = z - 0.5 * s;
        let growth = (s * z).exp();
        let leading = (norm_cdf(zp) * growth - norm_cdf(zm)) / s;
        let third = self.kappa3 * norm_pdf(zp) * zp * growth * th;
        let fourth = norm_pdf(z)
            * (self.kappa4 * hermite(2, z) + 0.5 * self.kappa3 * self.kappa3 * hermite(4, z))
            * th
            * th;
        leading + third + fourth
    }

    /// Implied-volatility expansion at log-moneyness k = sqrt(theta) * z.
    /// A nonpositive value signals that theta is too large for the asymptotic
    /// regime at this moneyness and is returned as an error, never clamped.
    pub fn implied_vol_expansion(&self, z: f64) -> Result<f64> {
        let th = self.theta_pow_h();
        let third = self.kappa3 * (z / self.kappa2 + 0.5 * self.kappa2 * self.theta.sqrt()) * th;
        let k3sq = 3.0 * self.kappa3 * self.kappa3;
        let fourth = (0.5 * k3sq - self.kappa4
            + (self.kappa4 - k3sq) * (z / self.kappa2) * (z / self.kappa2))
            * th
            * th;
        let value = self.kappa2 * (1.0 + third + fourth);
        if !(value > 0.0) {
            return Err(Error::ExpansionOutOfDomain {
                theta: self.theta,
                z,
                value,
            });
        }
        Ok(value)
    }

    /// At-the-money implied-volatility skew d(sigma_BS)/dk at k = 0.
    pub fn atm_skew(&self) -> f64 {
        self.kappa3 * self.theta.powf(self.h - 0.5)
    }

    /// At-the-money implied-volatility curvature d^2(sigma_BS)/dk^2 at k = 0.
    pub fn atm_curvature(&self) -> f64 {
        2.0 * (self.kappa4 - 3.0 * self.kappa3 * self.kappa3) / self.kappa2
            * self.theta.powf(2.0 * self.h - 1.0)
    }

    /// At-the-money digital put price Q(X <= 0) to order theta^H.
    pub fn atm_digital(&self) -> f64 {
        let half = 0.5 * self.sigma0;
        norm_cdf(half) + self.kappa3 * norm_pdf(half) * self.theta_pow_h()
    }

    /// Density of the normalized log return at the money (x = 0), in the
    /// three-term closed form (it agrees with density_q(0) to o(theta^{2H})
    /// but not exactly: the closed form drops O(sigma0^2) Hermite residue).
    pub fn atm_density(&self) -> f64 {
        let th = self.theta_pow_h();
        norm_pdf(0.5 * self.sigma0)
            * (1.0 - 0.5 * self.kappa3 * self.sigma0 * th
                + (3.0 * self.kappa4 - 7.5 * self.kappa3 * self.kappa3) * th * th)
    }
}

/// Where a smile point came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmileSource {
    Expansion,
    MonteCarlo,
}

/// One point of an implied-volatility smile in annualized coordinates
/// (k = sqrt(theta) * z), tagged with its source and, for Monte Carlo
/// points, the standard error of the implied vol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmilePoint {
    pub theta: f64,
    pub z: f64,
    pub k: f64,
    pub iv: f64,
    pub source: SmileSource,
    pub stderr: Option<f64>,
}

impl SmilePoint {
    pub fn new(theta: f64, z: f64, iv: f64, source: SmileSource, stderr: Option<f64>) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::Domain(format!(
                "smile point requires theta > 0, got {theta}"
            )));
        }
        if !(iv > 0.0) || !iv.is_finite() {
            return Err(Error::Domain(format!(
                "smile point requires iv > 0, got {iv}"
            )));
        }
        Ok(Self {
            theta,
            z,
            k: theta.sqrt() * z,
            iv,
            source,
            stderr,
        })
    }
}
