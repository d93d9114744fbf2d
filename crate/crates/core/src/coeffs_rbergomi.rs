//! Expansion coefficients for the rough Bergomi model.
//!
//! The model is v_t = v0(t) exp{eta sqrt(2H) int_0^t (t-s)^{H-1/2} dW_s
//! - (eta^2/2) t^{2H}} with spot correlation rho. Its coefficients are
//!
//!   kappa3(theta) = rho eta sqrt(H/2) / (theta^H sigma0^3)
//!                   * int_0^theta int_0^t (t-s)^{H-1/2} sqrt(v0(s)) ds v0(t) dt,
//!   kappa4       = (1+2 rho^2) eta^2 H / ((2H+1)^2 (2H+2))
//!                   + rho^2 eta^2 H B(H+3/2, H+3/2) / (2 (H+1/2)^2),
//!
//! where B is the beta function and kappa4 does not depend on the curve.
//!
//! Forward variance curves are piecewise constant (variance-swap strips), so
//! the singular inner integral has a closed form per segment and is never
//! sampled numerically; only the outer integral needs quadrature, and its
//! integrand is continuous. For flat curves kappa3 collapses to a closed
//! form, which is both a fast path for presets and the oracle for the
//! quadrature.

use crate::error::{Error, Result};
use crate::expansion::ExpansionCoefficients;
use crate::quad::adaptive_gauss_legendre;
use crate::specfun::beta_fn;

/// Piecewise-constant forward variance curve t -> v0(t) on [0, inf), with
/// the last value held flat beyond the final breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardVarianceCurve {
    starts: Vec<f64>,
    values: Vec<f64>,
}

impl ForwardVarianceCurve {
    /// Constant curve v0(t) = v.
    pub fn flat(v: f64) -> Result<Self> {
        Self::piecewise(&[(0.0, v)])
    }

    /// Curve from ordered (start time, value) records; the first start must
    /// be 0 and each piece extends to the next start (the last to infinity).
    pub fn piecewise(points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain(
                "forward variance curve needs at least one piece".to_string(),
            ));
        }
        if points[0].0 != 0.0 {
            return Err(Error::Domain(format!(
                "the first curve piece must start at t = 0, got {}",
                points[0].0
            )));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Domain(format!(
                    "curve breakpoints must be strictly increasing, got {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        for &(t, v) in points {
            if !t.is_finite() || !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!(
                    "curve values must be positive and finite, got v0({t}) = {v}"
                )));
            }
        }
        Ok(Self {
            starts: points.iter().map(|p| p.0).collect(),
            values: points.iter().map(|p| p.1).collect(),
        })
    }

    pub fn starts(&self) -> &[f64] {
        &self.starts
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// v0(t); times before 0 read the first piece.
    pub fn value(&self, t: f64) -> f64 {
        let idx = self.starts.partition_point(|&s| s <= t);
        self.values[idx.saturating_sub(1)]
    }

    /// Exact integral of v0 over [0, theta].
    pub fn integral(&self, theta: f64) -> Result<f64> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::Domain(format!(
                "curve integration requires theta > 0, got {theta}"
            )));
        }
        let mut acc = 0.0;
        for (j, &a) in self.starts.iter().enumerate() {
            if a >= theta {
                break;
            }
            let b = match self.starts.get(j + 1) {
                Some(&next) => next.min(theta),
                None => theta,
            };
            acc += self.values[j] * (b - a);
        }
        Ok(acc)
    }

    /// Total standard deviation sigma0(theta) = sqrt(int_0^theta v0).
    pub fn sigma0(&self, theta: f64) -> Result<f64> {
        Ok(self.integral(theta)?.sqrt())
    }

    /// int_0^t (t-s)^{exponent-1} sqrt(v0(s)) ds, exact per piece; the
    /// kernel singularity at s = t is integrated analytically.
    fn singular_inner_integral(&self, t: f64, exponent: f64) -> f64 {
        let mut acc = 0.0;
        for (j, &a) in self.starts.iter().enumerate() {
            if a >= t {
                break;
            }
            let b = match self.starts.get(j + 1) {
                Some(&next) => next.min(t),
                None => t,
            };
            acc += self.values[j].sqrt() * ((t - a).powf(exponent) - (t - b).powf(exponent))
                / exponent;
        }
        acc
    }
}

fn check_model_params(h: f64, eta: f64, rho: f64) -> Result<()> {
    if !(h > 0.0 && h <= 0.5) {
        return Err(Error::Domain(format!(
            "Hurst parameter must lie in (0, 1/2], got {h}"
        )));
    }
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::Domain(format!(
            "vol-of-vol eta must be nonnegative and finite, got {eta}"
        )));
    }
    if !(rho.abs() < 1.0) {
        return Err(Error::Domain(format!(
            "correlation must satisfy |rho| < 1, got {rho}"
        )));
    }
    Ok(())
}

/// Closed-form kappa3 for a flat curve:
/// rho eta sqrt(2H) / (2 (H+1/2)(H+3/2)), independent of theta and of the
/// variance level.
pub fn kappa3_flat(h: f64, eta: f64, rho: f64) -> Result<f64> {
    check_model_params(h, eta, rho)?;
    Ok(rho * eta * (2.0 * h).sqrt() / (2.0 * (h + 0.5) * (h + 1.5)))
}

/// Closed-form kappa4. It does not depend on the forward-variance curve:
/// only (h, eta, rho) enter.
pub fn kappa4(h: f64, eta: f64, rho: f64) -> Result<f64> {
    check_model_params(h, eta, rho)?;
    let b = beta_fn(h + 1.5, h + 1.5).expect("beta arguments are positive");
    let two_h1 = 2.0 * h + 1.0;
    Ok(
        (1.0 + 2.0 * rho * rho) * eta * eta * h / (two_h1 * two_h1 * (2.0 * h + 2.0))
            + rho * rho * eta * eta * h * b / (2.0 * (h + 0.5) * (h + 0.5)),
    )
}

/// Rough Bergomi model parameters over a piecewise-constant forward
/// variance curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RoughBergomiParams {
    h: f64,
    eta: f64,
    rho: f64,
    curve: ForwardVarianceCurve,
}

/// Assembled coefficients plus the usability diagnostic eta theta^H (the
/// standard deviation of log spot variance at theta); values >= 1 put theta
/// outside the regime where the expansion is expected to be accurate.
#[derive(Debug, Clone, PartialEq)]
pub struct RoughBergomiCoefficients {
    pub coefficients: ExpansionCoefficients,
    pub eta_theta_h: f64,
    pub regime_warning: bool,
}

impl RoughBergomiParams {
    /// eta = 0 is accepted as the deterministic-volatility (Black-Scholes)
    /// limit; it is useful for validating the Monte Carlo engine against
    /// closed forms and simply yields kappa3 = kappa4 = 0.
    pub fn new(h: f64, eta: f64, rho: f64, curve: ForwardVarianceCurve) -> Result<Self> {
        check_model_params(h, eta, rho)?;
        Ok(Self { h, eta, rho, curve })
    }

    pub fn hurst(&self) -> f64 {
        self.h
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn curve(&self) -> &ForwardVarianceCurve {
        &self.curve
    }

    pub fn sigma0(&self, theta: f64) -> Result<f64> {
        self.curve.sigma0(theta)
    }

    fn kappa3_quadrature(&self, theta: f64, damped: bool) -> Result<f64> {
        let sigma0 = self.curve.sigma0(theta)?;
        let exponent = self.h + 0.5;
        let eta_sq_8 = self.eta * self.eta / 8.0;
        let integrand = |t: f64| {
            let inner = self.curve.singular_inner_integral(t, exponent);
            let damp = if damped {
                (-eta_sq_8 * t.powf(2.0 * self.h)).exp()
            } else {
                1.0
            };
            inner * self.curve.value(t) * damp
        };
        // split the outer integral at the curve breakpoints, where the
        // integrand has kinks (it is continuous throughout)
        let mut cuts = vec![0.0];
        for &s in self.curve.starts().iter().skip(1) {
            if s < theta {
                cuts.push(s);
            }
        }
        cuts.push(theta);
        let mut outer = 0.0;
        for w in cuts.windows(2) {
            outer += adaptive_gauss_legendre(&integrand, w[0], w[1], 1e-10)?;
        }
        Ok(self.rho * self.eta * (0.5 * self.h).sqrt() * outer
            / (theta.powf(self.h) * sigma0 * sigma0 * sigma0))
    }

    /// kappa3(theta) by closed-form inner integral and adaptive quadrature
    /// over the outer time variable.
    pub fn kappa3(&self, theta: f64) -> Result<f64> {
        self.kappa3_quadrature(theta, false)
    }

    /// Diagnostic variant keeping the exp(-eta^2 t^{2H}/8) damping factor
    /// that [`RoughBergomiParams::kappa3`] drops (the two agree to
    /// o(theta^{2H})); their gap measures the dropped term at finite theta.
    pub fn kappa3_damped(&self, theta: f64) -> Result<f64> {
        self.kappa3_quadrature(theta, true)
    }

    /// Assemble the full coefficient set at theta, with the eta theta^H
    /// regime diagnostic.
    pub fn coefficients(&self, theta: f64) -> Result<RoughBergomiCoefficients> {
        let sigma0 = self.curve.sigma0(theta)?;
        let k3 = self.kappa3(theta)?;
        let k4 = kappa4(self.h, self.eta, self.rho)?;
        let coefficients = ExpansionCoefficients::new(theta, self.h, sigma0, k3, k4)?;
        let eta_theta_h = self.eta * theta.powf(self.h);
        Ok(RoughBergomiCoefficients {
            coefficients,
            eta_theta_h,
            regime_warning: eta_theta_h >= 1.0,
        })
    }
}
