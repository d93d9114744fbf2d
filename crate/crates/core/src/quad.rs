//! Quadrature building blocks: adaptive Simpson, Gauss–Legendre rules with an
//! adaptive panel driver, and Gauss–Jacobi rules for integrands with an
//! algebraic singularity w^beta at the left endpoint.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Adaptive Simpson integration with Richardson extrapolation, targeting the
/// given absolute tolerance. Best effort: recursion stops at a depth cap.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fb, fm) = (f(a), f(b), f(m));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(&f, a, fa, b, fb, m, fm, whole, tol, 48)
}

/// Fixed-order Gauss–Legendre rule on [-1, 1]. Nodes are the Legendre roots,
/// found by Newton iteration on the three-term recurrence.
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "Gauss-Legendre order must be at least 2");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut deriv = 0.0;
            for _ in 0..100 {
                // evaluate P_n and P_{n-1} by recurrence
                let mut p0 = 1.0;
                let mut p1 = x;
                for j in 2..=n {
                    let jf = j as f64;
                    let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                    p0 = p1;
                    p1 = p2;
                }
                deriv = nf * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / deriv;
                x -= dx;
                if dx.abs() <= 1e-15 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * deriv * deriv);
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrate f over [a, b].
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// Adaptive Gauss–Legendre integration to a relative tolerance. Panels are
/// bisected until each one's G7-vs-G15 discrepancy fits its share of the
/// error budget; returns an accuracy error if the budget cannot be met.
pub fn adaptive_gauss_legendre<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64> {
    if !(b > a) {
        return Ok(0.0);
    }
    let g7 = GaussLegendre::new(7);
    let g15 = GaussLegendre::new(15);
    let rough = g15.integrate(&f, a, b).abs();
    let scale = rough.max(1e-300);

    const MAX_DEPTH: u32 = 60;
    let mut stack = vec![(a, b, 0u32)];
    let mut total = 0.0;
    let mut err_accepted = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let i15 = g15.integrate(&f, lo, hi);
        let i7 = g7.integrate(&f, lo, hi);
        let err = (i15 - i7).abs();
        let budget = 0.5 * rel_tol * scale * (hi - lo) / (b - a);
        if err <= budget || depth >= MAX_DEPTH {
            total += i15;
            err_accepted += err;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    let achieved = err_accepted / total.abs().max(scale);
    if achieved > rel_tol {
        return Err(Error::QuadratureAccuracy {
            achieved,
            requested: rel_tol,
        });
    }
    Ok(total)
}

/// Gauss–Jacobi rule for the weight (1+x)^beta on [-1, 1] (alpha = 0),
/// built by the Golub–Welsch eigenvalue method. Exposed as an integrator for
/// integrals of the form `int_0^p w^beta g(w) dw` with g smooth, which is the
/// shape of the singular covariance integrals of the fractional kernel.
pub struct GaussJacobi {
    beta: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussJacobi {
    pub fn new(n: usize, beta: f64) -> Result<Self> {
        if !(beta > -1.0) {
            return Err(Error::Domain(format!(
                "Gauss-Jacobi weight exponent must exceed -1, got {beta}"
            )));
        }
        assert!(n >= 2, "Gauss-Jacobi order must be at least 2");
        // symmetric tridiagonal Jacobi matrix for alpha = 0
        let mut m = DMatrix::<f64>::zeros(n, n);
        m[(0, 0)] = beta / (beta + 2.0);
        for k in 1..n {
            let kf = k as f64;
            let denom = (2.0 * kf + beta) * (2.0 * kf + beta + 2.0);
            m[(k, k)] = beta * beta / denom;
            let off = if k == 1 {
                (4.0 * (1.0 + beta) / ((beta + 2.0) * (beta + 2.0) * (beta + 3.0))).sqrt()
            } else {
                let s = 2.0 * kf + beta;
                2.0 * kf * (kf + beta) / (s * (s * s - 1.0).sqrt())
            };
            m[(k, k - 1)] = off;
            m[(k - 1, k)] = off;
        }
        let eig = nalgebra::SymmetricEigen::new(m);
        // total weight mass: int_{-1}^{1} (1+x)^beta dx = 2^{beta+1}/(beta+1)
        let mu0 = 2f64.powf(beta + 1.0) / (beta + 1.0);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let node = eig.eigenvalues[i];
                let w = mu0 * eig.eigenvectors[(0, i)] * eig.eigenvectors[(0, i)];
                (node, w)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(GaussJacobi {
            beta,
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        })
    }

    /// Integral of w^beta * g(w) over [0, p]; the singular factor is absorbed
    /// into the rule's weights, so g is only ever evaluated on (0, p).
    pub fn integrate_power_weight<F: Fn(f64) -> f64>(&self, g: F, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        let scale = (0.5 * p).powf(self.beta + 1.0);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * g(0.5 * p * (1.0 + x));
        }
        scale * acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_handles_smooth_targets() {
        let v = adaptive_simpson(|x| (-0.5 * x * x).exp(), -12.0, 12.0, 1e-10);
        let want = (2.0 * std::f64::consts::PI).sqrt();
        assert!((v - want).abs() <= 1e-9, "{v} vs {want}");
        let v = adaptive_simpson(|x| x.cos(), 0.0, 1.0, 1e-12);
        assert!((v - 1f64.sin()).abs() <= 1e-12);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let g7 = GaussLegendre::new(7);
        // degree 13 is within the exactness range of a 7-point rule
        let v = g7.integrate(|x| x.powi(13) + 3.0 * x.powi(8) + x, -1.0, 1.0);
        let want = 3.0 * 2.0 / 9.0;
        assert!((v - want).abs() <= 1e-13, "{v} vs {want}");
        let g15 = GaussLegendre::new(15);
        let v = g15.integrate(|x| x.powi(4), 0.0, 2.0);
        assert!((v - 32.0 / 5.0).abs() <= 1e-12);
    }

    #[test]
    fn adaptive_gauss_legendre_reaches_tight_tolerances() {
        let v = adaptive_gauss_legendre(|x| (4.0 * x).sin().exp(), 0.0, 2.0, 1e-10).unwrap();
        // reference from a much finer fixed rule
        let want = GaussLegendre::new(60).integrate(|x| (4.0 * x).sin().exp(), 0.0, 2.0);
        assert!(((v - want) / want).abs() <= 1e-10, "{v} vs {want}");
        // endpoint with a fractional-power derivative singularity, as in the
        // outer integrals of the skew coefficient
        let v = adaptive_gauss_legendre(|x| x.powf(0.57), 0.0, 1.0, 1e-10).unwrap();
        assert!(((v - 1.0 / 1.57) / (1.0 / 1.57)).abs() <= 1e-9, "{v}");
    }

    #[test]
    fn gauss_jacobi_integrates_singular_weights_exactly() {
        // against closed forms: int_0^p w^beta (c0 + c1 w + c2 w^2) dw
        for beta in [-0.43, -0.45, -0.25, 0.0] {
            let rule = GaussJacobi::new(8, beta).unwrap();
            for p in [0.3, 1.0, 2.5] {
                let (c0, c1, c2) = (0.7, -1.3, 0.4);
                let got = rule.integrate_power_weight(|w| c0 + c1 * w + c2 * w * w, p);
                let want = c0 * p.powf(beta + 1.0) / (beta + 1.0)
                    + c1 * p.powf(beta + 2.0) / (beta + 2.0)
                    + c2 * p.powf(beta + 3.0) / (beta + 3.0);
                assert!(
                    ((got - want) / want).abs() <= 1e-12,
                    "beta={beta} p={p}: {got} vs {want}"
                );
            }
        }
        assert!(GaussJacobi::new(8, -1.0).is_err());
    }

    #[test]
    fn gauss_jacobi_converges_on_smooth_factors() {
        // int_0^1 w^{-0.43} e^{-w} dw, doubling the order must agree tightly
        let r16 = GaussJacobi::new(16, -0.43).unwrap();
        let r32 = GaussJacobi::new(32, -0.43).unwrap();
        let a = r16.integrate_power_weight(|w| (-w).exp(), 1.0);
        let b = r32.integrate_power_weight(|w| (-w).exp(), 1.0);
        assert!(((a - b) / b).abs() <= 1e-13, "{a} vs {b}");
    }
}
