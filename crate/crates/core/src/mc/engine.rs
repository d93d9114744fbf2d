//! Path generation and estimators.
//!
//! Paths are drawn in fixed-size batches; batch b seeds its own RNG
//! substream (seed, stream b+1), so results are independent of thread
//! count and bit-identical across runs: the per-batch partial sums are
//! folded in batch order with compensated summation.
//!
//! Two put-price estimators share the same discrete sampled law:
//!
//! * ConditionalGaussian: given the variance-driving path, the terminal
//!   log price is exactly Gaussian with mean sigma0 U and variance
//!   sigma0^2 V, where U = -<M>/(2 sigma0) + rho mart/sigma0 and
//!   V = (1 - rho^2)<M>/sigma0^2 with the left-point quadratic variation
//!   <M> = sum v_{t_i} delta and mart = sum sqrt(v_{t_i}) dW_{i+1}; each
//!   path contributes a closed-form put value.
//! * Euler: simulates the log price with an independent second Brownian
//!   motion. Conditionally on the variance path its terminal value has the
//!   same Gaussian law as above, so the two estimators target the identical
//!   quantity and the conditional one is a pure variance reduction.
//!
//! Prices are normalized put values in the sqrt(theta) convention (the
//! quoted strike coordinate is z with k = sqrt(theta) z), directly
//! comparable with `blackscholes::normalized_put`.

use crate::blackscholes::{bs_derivative_terms, implied_vol, normalized_vega};
use crate::coeffs_rbergomi::RoughBergomiParams;
use crate::error::{Error, Result};
use crate::expansion::{SmilePoint, SmileSource};
use crate::mc::covariance::{GaussianFactorization, MAX_STEPS};
use crate::mc::stats::{batch_rng, CrossAcc, MomentAcc, BATCH_SIZE};
use crate::specfun::norm_cdf;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Which put-price estimator a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Euler,
    ConditionalGaussian,
}

/// Monte Carlo run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MCConfig {
    pub n_paths: u64,
    pub n_steps: usize,
    pub seed: u64,
    pub estimator: Estimator,
    pub antithetic: bool,
}

impl MCConfig {
    fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Domain("n_paths must be at least 1".into()));
        }
        if self.n_steps == 0 || self.n_steps > MAX_STEPS {
            return Err(Error::Domain(format!(
                "n_steps must lie in 1..={MAX_STEPS}, got {}",
                self.n_steps
            )));
        }
        if self.antithetic && self.n_paths % 2 != 0 {
            return Err(Error::Domain(
                "antithetic sampling evaluates paths in pairs; n_paths must be even".into(),
            ));
        }
        Ok(())
    }

    /// Number of statistical samples: an antithetic pair counts as one.
    fn n_samples(&self) -> u64 {
        if self.antithetic {
            self.n_paths / 2
        } else {
            self.n_paths
        }
    }
}

/// A Monte Carlo estimate with its standard error and the number of
/// independent samples behind it (antithetic pairs count once).
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
}

/// Conditional law of the normalized log price given the variance path:
/// X_theta | path ~ N(u, v). v > 0 whenever |rho| < 1 and the curve is
/// positive, which the model parameters guarantee.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalGaussianState {
    pub u: f64,
    pub v: f64,
}

/// One smile point estimated by Monte Carlo: the raw normalized price with
/// its standard error, plus the implied-vol point when the price admits one.
/// `point` is None when the sampled price falls on or outside the
/// no-arbitrage bounds (deep wings at low path counts); such points are
/// reported as unavailable rather than failing the run.
#[derive(Debug, Clone)]
pub struct McSmilePoint {
    pub theta: f64,
    pub z: f64,
    pub k: f64,
    pub price: f64,
    pub price_stderr: f64,
    pub n_samples: u64,
    pub point: Option<SmilePoint>,
}

/// At-the-money skew estimated two ways from one set of paths: the
/// digital-based identity (primary) and a central finite difference of the
/// smile (cross-check). Standard errors are delta-method propagations that
/// keep the sampled covariance between the inputs.
#[derive(Debug, Clone, Copy)]
pub struct SkewReport {
    pub theta: f64,
    pub bump: f64,
    pub skew: f64,
    pub stderr: f64,
    pub fd_skew: f64,
    pub fd_stderr: f64,
    pub digital: f64,
    pub digital_stderr: f64,
    pub atm_iv: f64,
    pub atm_iv_stderr: f64,
    pub n_samples: u64,
}

/// Per-node sample statistics of the simulated variance paths.
#[derive(Debug, Clone)]
pub struct PathStats {
    /// Grid nodes t_1..t_N.
    pub grid: Vec<f64>,
    pub mean_v: Vec<f64>,
    pub stderr_mean_v: Vec<f64>,
    /// Sample variance of the Volterra process G at each node.
    pub var_g: Vec<f64>,
    /// Normal-theory standard error of that variance (G is exactly
    /// Gaussian): s^2 sqrt(2/(n-1)).
    pub stderr_var_g: Vec<f64>,
    pub n_paths: u64,
}

fn to_estimate(acc: &MomentAcc) -> McEstimate {
    McEstimate {
        value: acc.mean(),
        stderr: acc.stderr(),
        n_samples: acc.n,
    }
}

// ---------------------------------------------------------------------------
// path context and per-path evaluations

struct PathCtx {
    fac: GaussianFactorization,
    n: usize,
    sqrt_theta: f64,
    delta: f64,
    sigma0: f64,
    rho: f64,
    rho_bar: f64,
    eta: f64,
    /// v0 at t = 0 (the left endpoint of the first cell).
    v0_at_0: f64,
    /// v0(t_i) for i = 1..N.
    v0_node: Vec<f64>,
    /// Lognormal compensator eta^2 t_i^{2h} / 2 for i = 1..N.
    comp_node: Vec<f64>,
}

fn build_ctx(params: &RoughBergomiParams, cfg: &MCConfig, theta: f64) -> Result<PathCtx> {
    cfg.validate()?;
    let sigma0 = params.sigma0(theta)?;
    let fac = GaussianFactorization::uniform(params.hurst(), theta, cfg.n_steps)?;
    let n = cfg.n_steps;
    let grid = fac.grid().to_vec();
    let eta = params.eta();
    let two_h = 2.0 * params.hurst();
    let v0_node: Vec<f64> = grid.iter().map(|&t| params.curve().value(t)).collect();
    let comp_node: Vec<f64> = grid
        .iter()
        .map(|&t| 0.5 * eta * eta * t.powf(two_h))
        .collect();
    let rho = params.rho();
    Ok(PathCtx {
        delta: fac.delta(),
        fac,
        n,
        sqrt_theta: theta.sqrt(),
        sigma0,
        rho,
        rho_bar: (1.0 - rho * rho).sqrt(),
        eta,
        v0_at_0: params.curve().value(0.0),
        v0_node,
        comp_node,
    })
}

impl PathCtx {
    /// Spot variance at node i (1-based) given the sampled G values.
    #[inline]
    fn v_at_node(&self, g: &[f64], i: usize) -> f64 {
        self.v0_node[i - 1] * (self.eta * g[i - 1] - self.comp_node[i - 1]).exp()
    }

    /// Conditional mean/variance of the normalized log price given one path.
    fn conditional_state(&self, dw: &[f64], g: &[f64]) -> ConditionalGaussianState {
        let mut qv = self.v0_at_0;
        let mut mart = self.v0_at_0.sqrt() * dw[0];
        for i in 1..self.n {
            let vi = self.v_at_node(g, i);
            qv += vi;
            mart += vi.sqrt() * dw[i];
        }
        qv *= self.delta;
        let u = (-0.5 * qv + self.rho * mart) / self.sigma0;
        let v = (1.0 - self.rho * self.rho) * qv / (self.sigma0 * self.sigma0);
        ConditionalGaussianState { u, v }
    }

    /// Exact put value conditional on the path, normalized by sqrt(theta).
    ///
    /// For k > 0 the put is in the money and its per-path value is dominated
    /// by the conditional forward, whose sampling noise dwarfs the remaining
    /// optionality; pricing the out-of-the-money call and adding the parity
    /// constant is mean-preserving (the conditional forward averages to one
    /// exactly), keeps the per-path spread proportional to the time value,
    /// and keeps the sample mean strictly above the no-arbitrage floor.
    fn conditional_put(&self, k: f64, state: &ConditionalGaussianState) -> f64 {
        let m = self.sigma0 * state.u;
        let s = self.sigma0 * state.v.sqrt();
        let d = (k - m) / s;
        let fwd = (m + 0.5 * s * s).exp();
        if k > 0.0 {
            let call = fwd * norm_cdf(s - d) - k.exp() * norm_cdf(-d);
            (call + k.exp_m1()) / self.sqrt_theta
        } else {
            (k.exp() * norm_cdf(d) - fwd * norm_cdf(d - s)) / self.sqrt_theta
        }
    }

    /// P(X_theta <= 0 | path): the conditional at-the-money digital.
    fn conditional_digital(&self, state: &ConditionalGaussianState) -> f64 {
        norm_cdf(-state.u / state.v.sqrt())
    }

    /// E[e^{sigma0 X_theta} | path]; averages to 1 exactly under the
    /// discrete sampled law.
    fn conditional_martingale(&self, state: &ConditionalGaussianState) -> f64 {
        (self.sigma0 * state.u + 0.5 * self.sigma0 * self.sigma0 * state.v).exp()
    }

    /// Terminal log price of the Euler scheme with an independent second
    /// Brownian motion supplying the unspanned noise. `dw` carries
    /// increments of variance delta; `wp` carries standard normals and is
    /// scaled here.
    fn euler_terminal_log(&self, dw: &[f64], g: &[f64], wp: &[f64]) -> f64 {
        let sd = self.delta.sqrt();
        let mut z = 0.0;
        let mut vi = self.v0_at_0;
        for i in 0..self.n {
            if i >= 1 {
                vi = self.v_at_node(g, i);
            }
            z += -0.5 * vi * self.delta
                + vi.sqrt() * (self.rho * dw[i] + self.rho_bar * sd * wp[i]);
        }
        z
    }
}

// ---------------------------------------------------------------------------
// batched driver

/// A per-sample evaluation: computes a fixed-length vector of values from
/// one path realization, and folds (possibly antithetically averaged)
/// sample values into an accumulator.
trait SampleEval: Sync {
    type Acc: Default + Send;

    fn n_values(&self) -> usize;
    fn needs_second_brownian(&self) -> bool {
        false
    }
    fn path_values(&self, ctx: &PathCtx, dw: &[f64], g: &[f64], wp: &[f64], out: &mut [f64]);
    fn push(&self, acc: &mut Self::Acc, values: &[f64]);
    fn merge(&self, into: &mut Self::Acc, other: Self::Acc);
}

fn run_mc<E: SampleEval>(ctx: &PathCtx, cfg: &MCConfig, eval: &E) -> E::Acc {
    let n_samples = cfg.n_samples();
    let n_batches = n_samples.div_ceil(BATCH_SIZE);
    let dim = ctx.fac.dim();
    let nv = eval.n_values();
    let needs_wp = eval.needs_second_brownian();

    let partials: Vec<E::Acc> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_rng(cfg.seed, b);
            let count = (n_samples - b * BATCH_SIZE).min(BATCH_SIZE);
            let mut acc = E::Acc::default();
            let mut z = vec![0.0f64; dim];
            let mut x = vec![0.0f64; dim];
            let mut wp = vec![0.0f64; if needs_wp { ctx.n } else { 0 }];
            let mut vals = vec![0.0f64; nv];
            let mut anti = vec![0.0f64; if cfg.antithetic { nv } else { 0 }];
            for _ in 0..count {
                for v in z.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                for v in wp.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                ctx.fac.sample_into(&z, &mut x);
                {
                    let (dw, g) = x.split_at(ctx.n);
                    eval.path_values(ctx, dw, g, &wp, &mut vals);
                }
                if cfg.antithetic {
                    for v in x.iter_mut() {
                        *v = -*v;
                    }
                    for v in wp.iter_mut() {
                        *v = -*v;
                    }
                    let (dw, g) = x.split_at(ctx.n);
                    eval.path_values(ctx, dw, g, &wp, &mut anti);
                    for (a, b) in vals.iter_mut().zip(&anti) {
                        *a = 0.5 * (*a + *b);
                    }
                }
                eval.push(&mut acc, &vals);
            }
            acc
        })
        .collect();

    let mut total = E::Acc::default();
    for p in partials {
        eval.merge(&mut total, p);
    }
    total
}

// ---------------------------------------------------------------------------
// concrete evaluations

/// Conditional-Gaussian put prices on a strike grid, plus the martingale
/// and at-the-money digital diagnostics when requested by the consumer.
struct CondValuesEval {
    ks: Vec<f64>,
}

#[derive(Default)]
struct VecMoments {
    accs: Vec<MomentAcc>,
}

impl VecMoments {
    fn ensure(&mut self, n: usize) {
        if self.accs.is_empty() {
            self.accs = vec![MomentAcc::default(); n];
        }
    }
}

impl SampleEval for CondValuesEval {
    type Acc = VecMoments;

    fn n_values(&self) -> usize {
        self.ks.len()
    }

    fn path_values(&self, ctx: &PathCtx, dw: &[f64], g: &[f64], _wp: &[f64], out: &mut [f64]) {
        let state = ctx.conditional_state(dw, g);
        for (o, &k) in out.iter_mut().zip(&self.ks) {
            *o = ctx.conditional_put(k, &state);
        }
    }

    fn push(&self, acc: &mut VecMoments, values: &[f64]) {
        acc.ensure(values.len());
        for (a, &v) in acc.accs.iter_mut().zip(values) {
            a.push(v);
        }
    }

    fn merge(&self, into: &mut VecMoments, other: VecMoments) {
        if other.accs.is_empty() {
            return;
        }
        into.ensure(other.accs.len());
        for (a, b) in into.accs.iter_mut().zip(&other.accs) {
            a.merge(b);
        }
    }
}

/// Euler put prices on a strike grid.
struct EulerValuesEval {
    ks: Vec<f64>,
}

impl SampleEval for EulerValuesEval {
    type Acc = VecMoments;

    fn n_values(&self) -> usize {
        self.ks.len()
    }

    fn needs_second_brownian(&self) -> bool {
        true
    }

    fn path_values(&self, ctx: &PathCtx, dw: &[f64], g: &[f64], wp: &[f64], out: &mut [f64]) {
        let zt = ctx.euler_terminal_log(dw, g, wp);
        let ez = zt.exp();
        for (o, &k) in out.iter_mut().zip(&self.ks) {
            *o = (k.exp() - ez).max(0.0) / ctx.sqrt_theta;
        }
    }

    fn push(&self, acc: &mut VecMoments, values: &[f64]) {
        acc.ensure(values.len());
        for (a, &v) in acc.accs.iter_mut().zip(values) {
            a.push(v);
        }
    }

    fn merge(&self, into: &mut VecMoments, other: VecMoments) {
        if other.accs.is_empty() {
            return;
        }
        into.ensure(other.accs.len());
        for (a, b) in into.accs.iter_mut().zip(&other.accs) {
            a.merge(b);
        }
    }
}

/// Martingale diagnostic: per-path conditional mean of e^{sigma0 X}.
struct MartingaleEval;

impl SampleEval for MartingaleEval {
    type Acc = VecMoments;

    fn n_values(&self) -> usize {
        1
    }

    fn path_values(&self, ctx: &PathCtx, dw: &[f64], g: &[f64], _wp: &[f64], out: &mut [f64]) {
        let state = ctx.conditional_state(dw, g);
        out[0] = ctx.conditional_martingale(&state);
    }

    fn push(&self, acc: &mut VecMoments, values: &[f64]) {
        acc.ensure(1);
        acc.accs[0].push(values[0]);
    }

    fn merge(&self, into: &mut VecMoments, other: VecMoments) {
        if other.accs.is_empty() {
            return;
        }
        into.ensure(1);
        into.accs[0].merge(&other.accs[0]);
    }
}

/// Digital and three put prices (at k = -bump, 0, +bump) with the cross
/// moments needed for delta-method skew errors. Values are produced either
/// from the conditional law (smooth) or from Euler indicators/payoffs.
struct SkewEval {
    bump: f64,
    euler: bool,
}

#[derive(Default)]
struct SkewAcc {
    digital: MomentAcc,
    p0: MomentAcc,
    pm: MomentAcc,
    pp: MomentAcc,
    d_p0: CrossAcc,
    pm_pp: CrossAcc,
}

impl SampleEval for SkewEval {
    type Acc = SkewAcc;

    fn n_values(&self) -> usize {
        4
    }

    fn needs_second_brownian(&self) -> bool {
        self.euler
    }

    fn path_values(&self, ctx: &PathCtx, dw: &[f64], g: &[f64], wp: &[f64], out: &mut [f64]) {
        if self.euler {
            let zt = ctx.euler_terminal_log(dw, g, wp);
            let ez = zt.exp();
            out[0] = if zt <= 0.0 { 1.0 } else { 0.0 };
            out[1] = (1.0 - ez).max(0.0) / ctx.sqrt_theta;
            out[2] = ((-self.bump).exp() - ez).max(0.0) / ctx.sqrt_theta;
            out[3] = (self.bump.exp() - ez).max(0.0) / ctx.sqrt_theta;
        } else {
            let state = ctx.conditional_state(dw, g);
            out[0] = ctx.conditional_digital(&state);
            out[1] = ctx.conditional_put(0.0, &state);
            out[2] = ctx.conditional_put(-self.bump, &state);
            out[3] = ctx.conditional_put(self.bump, &state);
        }
    }

    fn push(&self, acc: &mut SkewAcc, values: &[f64]) {
        acc.digital.push(values[0]);
        acc.p0.push(values[1]);
        acc.pm.push(values[2]);
        acc.pp.push(values[3]);
        acc.d_p0.push(values[0], values[1]);
        acc.pm_pp.push(values[2], values[3]);
    }

    fn merge(&self, into: &mut SkewAcc, other: SkewAcc) {
        into.digital.merge(&other.digital);
        into.p0.merge(&other.p0);
        into.pm.merge(&other.pm);
        into.pp.merge(&other.pp);
        into.d_p0.merge(&other.d_p0);
        into.pm_pp.merge(&other.pm_pp);
    }
}

/// Per-node spot variance and Volterra values for path statistics.
struct NodeStatsEval {
    n: usize,
}

impl SampleEval for NodeStatsEval {
    type Acc = VecMoments;

    fn n_values(&self) -> usize {
        2 * self.n
    }

    fn path_values(&self, ctx: &PathCtx, _dw: &[f64], g: &[f64], _wp: &[f64], out: &mut [f64]) {
        for i in 1..=ctx.n {
            out[i - 1] = ctx.v_at_node(g, i);
        }
        out[ctx.n..].copy_from_slice(g);
    }

    fn push(&self, acc: &mut VecMoments, values: &[f64]) {
        acc.ensure(values.len());
        for (a, &v) in acc.accs.iter_mut().zip(values) {
            a.push(v);
        }
    }

    fn merge(&self, into: &mut VecMoments, other: VecMoments) {
        if other.accs.is_empty() {
            return;
        }
        into.ensure(other.accs.len());
        for (a, b) in into.accs.iter_mut().zip(&other.accs) {
            a.merge(b);
        }
    }
}

// ---------------------------------------------------------------------------
// public operations

fn check_z(z: f64) -> Result<()> {
    if !z.is_finite() {
        return Err(Error::Domain(format!("moneyness z must be finite, got {z}")));
    }
    Ok(())
}

fn guard_conditional(params: &RoughBergomiParams) -> Result<()> {
    if params.rho().abs() >= 1.0 {
        return Err(Error::EstimatorUnavailable(
            "the conditional-Gaussian estimator needs |rho| < 1 (the conditional variance \
             vanishes at rho = ±1); use the Euler estimator instead"
                .into(),
        ));
    }
    Ok(())
}

/// Price a normalized put by the conditional-Gaussian estimator.
/// The configuration must select `Estimator::ConditionalGaussian`.
pub fn price_put_conditional(
    params: &RoughBergomiParams,
    cfg: &MCConfig,
    theta: f64,
    z: f64,
) -> Result<McEstimate> {
    if cfg.estimator != Estimator::ConditionalGaussian {
        return Err(Error::Domain(
            "price_put_conditional requires estimator = ConditionalGaussian".into(),
        ));
    }
    guard_conditional(params)?;
    check_z(z)?;
    let ctx = build_ctx(params, cfg, theta)?;
    let eval = CondValuesEval {
        ks: vec![ctx.sqrt_theta * z],
    };
    let mut acc = run_mc(&ctx, cfg, &eval);
    acc.ensure(1);
    Ok(to_estimate(&acc.accs[0]))
}

/// Price a normalized put by the Euler scheme. The configured estimator
/// field is not consulted: this entry point always runs Euler, so it can
/// serve as an independent cross-check against the conditional estimator
/// under the same seed budget.
pub fn price_put_euler(
    params: &RoughBergomiParams,
    cfg: &MCConfig,
    theta: f64,
    z: f64,
) -> Result<McEstimate> {
    check_z(z)?;
    let ctx = build_ctx(params, cfg, theta)?;
    let eval = EulerValuesEval {
        ks: vec![ctx.sqrt_theta * z],
    };
    let mut acc = run_mc(&ctx, cfg, &eval);
    acc.ensure(1);
    Ok(to_estimate(&acc.accs[0]))
}

/// Sample mean of e^{sigma0 X_theta} via the conditional closed form; the
/// discrete sampled law makes its expectation exactly 1, so the estimate
/// must sit within a few standard errors of 1 for any correct run.
pub fn martingale_check(
    params: &RoughBergomiParams,
    cfg: &MCConfig,
    theta: f64,
) -> Result<McEstimate> {
    guard_conditional(params)?;
    let ctx = build_ctx(params, cfg, theta)?;
    let mut acc = run_mc(&ctx, cfg, &MartingaleEval);
    acc.ensure(1);
    Ok(to_estimate(&acc.accs[0]))
}

/// Estimate the smile on a z grid from one shared set of paths (common
/// random numbers across strikes). Prices that fall on or outside the
/// no-arbitrage bounds yield points marked unavailable rather than errors.
/// Implied-vol standard errors are price errors divided by vega.
pub fn mc_smile(
    params: &RoughBergomiParams,
    cfg: &MCConfig,
    theta: f64,
    z_grid: &[f64],
) -> Result<Vec<McSmilePoint>> {
    if z_grid.is_empty() {
        return Err(Error::Domain("z_grid must be nonempty".into()));
    }
    for &z in z_grid {
        check_z(z)?;
    }
    let ctx = build_ctx(params, cfg, theta)?;
    let ks: Vec<f64> = z_grid.iter().map(|&z| ctx.sqrt_theta * z).collect();
    let mut acc = match cfg.estimator {
        Estimator::ConditionalGaussian => {
            guard_conditional(params)?;
            run_mc(&ctx, cfg, &CondValuesEval { ks: ks.clone() })
        }
        Estimator::Euler => run_mc(&ctx, cfg, &EulerValuesEval { ks: ks.clone() }),
    };
    acc.ensure(ks.len());

    let mut out = Vec::with_capacity(z_grid.len());
    for (idx, &z) in z_grid.iter().enumerate() {
        let est = to_estimate(&acc.accs[idx]);
        let point = match implied_vol(theta, z, est.value) {
            Ok(iv) => {
                let vega = normalized_vega(theta, z, iv)?;
                Some(SmilePoint::new(
                    theta,
                    z,
                    iv,
                    SmileSource::MonteCarlo,
                    Some(est.stderr / vega),
                )?)
            }
            Err(Error::Arbitrage { .. }) => None,
            Err(e) => return Err(e),
        };
        out.push(McSmilePoint {
            theta,
            z,
            k: ks[idx],
            price: est.value,
            price_stderr: est.stderr,
            n_samples: est.n_samples,
            point,
        });
    }
    Ok(out)
}

/// Estimate the at-the-money implied-vol skew from one set of paths.
///
/// Primary estimator: the digital identity
/// skew = (Q(X_theta <= 0) - Phi(f2)) / (sqrt(theta) phi(f2)) with f2
/// evaluated at the Monte Carlo at-the-money vol. Cross-check: a central
/// finite difference of the implied smile with half-width `bump` in k.
/// Both standard errors propagate the sampled covariance of the inputs.
pub fn mc_atm_skew(
    params: &RoughBergomiParams,
    cfg: &MCConfig,
    theta: f64,
    bump: f64,
) -> Result<SkewReport> {
    if !(bump > 0.0) || !bump.is_finite() {
        return Err(Error::Domain(format!(
            "finite-difference bump must be positive and finite, got {bump}"
        )));
    }
    let euler = match cfg.estimator {
        Estimator::Euler => true,
        Estimator::ConditionalGaussian => {
            guard_conditional(params)?;
            false
        }
    };
    let ctx = build_ctx(params, cfg, theta)?;
    let acc = run_mc(&ctx, cfg, &SkewEval { bump, euler });

    let st = ctx.sqrt_theta;
    let digital = to_estimate(&acc.digital);
    let p0 = to_estimate(&acc.p0);
    let pm = to_estimate(&acc.pm);
    let pp = to_estimate(&acc.pp);

    // at-the-money vol and the digital-identity skew
    let atm_iv = implied_vol(theta, 0.0, p0.value)?;
    let vega0 = normalized_vega(theta, 0.0, atm_iv)?;
    let atm_iv_stderr = p0.stderr / vega0;
    let (_, f2) = bs_derivative_terms(theta, 0.0, atm_iv)?;
    let phi_f2 = crate::specfun::norm_pdf(f2);
    let skew = (digital.value - norm_cdf(f2)) / (st * phi_f2);
    // delta method: dskew/dD = 1/(sqrt(theta) phi(f2));
    // dskew/dP = (-1 + sqrt(theta) f2 skew) / (2 vega)
    let g_d = 1.0 / (st * phi_f2);
    let g_p = (-1.0 + st * f2 * skew) / (2.0 * vega0);
    let var_d = acc.digital.sample_variance();
    let var_p = acc.p0.sample_variance();
    let cov_dp = acc.d_p0.sample_cov(&acc.digital, &acc.p0);
    let n = digital.n_samples as f64;
    let skew_var = (g_d * g_d * var_d + g_p * g_p * var_p + 2.0 * g_d * g_p * cov_dp) / n;
    let stderr = skew_var.max(0.0).sqrt();

    // finite-difference cross-check on the same paths
    let z_b = bump / st;
    let iv_m = implied_vol(theta, -z_b, pm.value)?;
    let iv_p = implied_vol(theta, z_b, pp.value)?;
    let vega_m = normalized_vega(theta, -z_b, iv_m)?;
    let vega_p = normalized_vega(theta, z_b, iv_p)?;
    let fd_skew = (iv_p - iv_m) / (2.0 * bump);
    let var_pm = acc.pm.sample_variance();
    let var_pp = acc.pp.sample_variance();
    let cov_mp = acc.pm_pp.sample_cov(&acc.pm, &acc.pp);
    let fd_var = (var_pp / (vega_p * vega_p) + var_pm / (vega_m * vega_m)
        - 2.0 * cov_mp / (vega_p * vega_m))
        / (n * 4.0 * bump * bump);
    let fd_stderr = fd_var.max(0.0).sqrt();

    Ok(SkewReport {
        theta,
        bump,
        skew,
        stderr,
        fd_skew,
        fd_stderr,
        digital: digital.value,
        digital_stderr: digital.stderr,
        atm_iv,
        atm_iv_stderr,
        n_samples: digital.n_samples,
    })
}

/// Simulate variance paths and return per-node sample statistics. The paths
/// are consumed streamingly (only moments are kept), and antithetic pairing
/// is deliberately not applied: pair averaging would bias the per-node
/// variance estimate toward zero, so every path counts as one sample.
pub fn simulate_variance_paths(
    params: &RoughBergomiParams,
    cfg: &MCConfig,
    theta: f64,
) -> Result<PathStats> {
    let plain = MCConfig {
        antithetic: false,
        ..*cfg
    };
    let ctx = build_ctx(params, &plain, theta)?;
    let n = ctx.n;
    let mut acc = run_mc(&ctx, &plain, &NodeStatsEval { n });
    acc.ensure(2 * n);

    let mut stats = PathStats {
        grid: ctx.fac.grid().to_vec(),
        mean_v: Vec::with_capacity(n),
        stderr_mean_v: Vec::with_capacity(n),
        var_g: Vec::with_capacity(n),
        stderr_var_g: Vec::with_capacity(n),
        n_paths: plain.n_paths,
    };
    for i in 0..n {
        let v = &acc.accs[i];
        stats.mean_v.push(v.mean());
        stats.stderr_mean_v.push(v.stderr());
        let g = &acc.accs[n + i];
        let var = g.sample_variance();
        stats.var_g.push(var);
        let m = plain.n_paths as f64;
        stats.stderr_var_g.push(var * (2.0 / (m - 1.0)).sqrt());
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blackscholes::normalized_put;
    use crate::coeffs_rbergomi::ForwardVarianceCurve;
    use crate::expansion::ExpansionCoefficients;

    fn flat_params(h: f64, eta: f64, rho: f64) -> RoughBergomiParams {
        RoughBergomiParams::new(h, eta, rho, ForwardVarianceCurve::flat(0.04).unwrap()).unwrap()
    }

    fn fig1() -> RoughBergomiParams {
        flat_params(0.07, 0.9, -0.9)
    }

    fn cfg(n_paths: u64, n_steps: usize, seed: u64) -> MCConfig {
        MCConfig {
            n_paths,
            n_steps,
            seed,
            estimator: Estimator::ConditionalGaussian,
            antithetic: false,
        }
    }

    #[test]
    fn config_validation() {
        let params = fig1();
        let bad = MCConfig {
            n_paths: 0,
            ..cfg(8, 8, 1)
        };
        assert!(price_put_conditional(&params, &bad, 0.1, 0.0).is_err());
        let bad = MCConfig {
            n_steps: MAX_STEPS + 1,
            ..cfg(8, 8, 1)
        };
        assert!(price_put_conditional(&params, &bad, 0.1, 0.0).is_err());
        let bad = MCConfig {
            antithetic: true,
            n_paths: 7,
            ..cfg(7, 8, 1)
        };
        assert!(price_put_conditional(&params, &bad, 0.1, 0.0).is_err());
        let bad = MCConfig {
            estimator: Estimator::Euler,
            ..cfg(8, 8, 1)
        };
        assert!(matches!(
            price_put_conditional(&params, &bad, 0.1, 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn deterministic_volatility_collapses_to_black_scholes() {
        // eta = 0, rho = 0: conditioning removes all randomness, so every
        // path returns the same closed-form value and the error is zero
        let params = flat_params(0.07, 0.0, 0.0);
        let c = cfg(64, 32, 11);
        for z in [-1.0, 0.0, 0.7] {
            let est = price_put_conditional(&params, &c, 0.1, z).unwrap();
            let bs = normalized_put(0.1, z, 0.2).unwrap();
            assert!(
                (est.value - bs).abs() <= 1e-12,
                "z = {z}: mc {} vs bs {bs}",
                est.value
            );
            assert!(est.stderr <= 1e-13);
        }
    }

    #[test]
    fn deterministic_volatility_with_correlation_is_unbiased() {
        // eta = 0 with rho != 0 leaves per-path noise, but the sampled law
        // of the terminal log price is exactly the Black-Scholes one at any
        // step count, for both estimators
        let params = flat_params(0.07, 0.0, -0.9);
        let c = cfg(20_000, 16, 5);
        let bs = normalized_put(0.1, -0.3, 0.2).unwrap();

        let cond = price_put_conditional(&params, &c, 0.1, -0.3).unwrap();
        assert!(cond.stderr > 0.0);
        assert!((cond.value - bs).abs() <= 4.0 * cond.stderr);

        let eul = price_put_euler(&params, &c, 0.1, -0.3).unwrap();
        assert!((eul.value - bs).abs() <= 4.0 * eul.stderr);
    }

    #[test]
    fn same_seed_reproduces_bit_identical_results() {
        let params = fig1();
        let c = cfg(4_000, 16, 42);
        let a = price_put_conditional(&params, &c, 0.1, -0.5).unwrap();
        let b = price_put_conditional(&params, &c, 0.1, -0.5).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());

        let other = MCConfig { seed: 43, ..c };
        let d = price_put_conditional(&params, &other, 0.1, -0.5).unwrap();
        assert_ne!(a.value.to_bits(), d.value.to_bits());
    }

    #[test]
    fn martingale_identity_holds_at_all_figure_presets() {
        let presets = [
            (0.07, 0.9, -0.9),
            (0.07, 0.9, -0.7),
            (0.05, 2.3, -0.9),
            (0.07, 1.9, -0.9),
        ];
        for (h, eta, rho) in presets {
            let params = flat_params(h, eta, rho);
            let est = martingale_check(&params, &cfg(20_000, 32, 17), 0.1).unwrap();
            assert!(
                (est.value - 1.0).abs() <= 4.0 * est.stderr,
                "preset ({h}, {eta}, {rho}): martingale mean {} ± {}",
                est.value,
                est.stderr
            );
        }
    }

    #[test]
    fn euler_and_conditional_estimators_agree() {
        let params = fig1();
        let c = cfg(30_000, 32, 23);
        let cond = price_put_conditional(&params, &c, 0.1, 0.0).unwrap();
        let eul = price_put_euler(&params, &c, 0.1, 0.0).unwrap();
        let joint = (cond.stderr.powi(2) + eul.stderr.powi(2)).sqrt();
        assert!(
            (cond.value - eul.value).abs() <= 3.0 * joint,
            "conditional {} ± {} vs euler {} ± {}",
            cond.value,
            cond.stderr,
            eul.value,
            eul.stderr
        );
        // conditioning must strictly reduce variance at equal path count
        assert!(cond.stderr < eul.stderr);
    }

    #[test]
    fn antithetic_does_not_increase_error_at_equal_path_count() {
        let params = fig1();
        let plain = cfg(20_000, 16, 31);
        let anti = MCConfig {
            antithetic: true,
            ..plain
        };
        let a = price_put_conditional(&params, &plain, 0.1, 0.0).unwrap();
        let b = price_put_conditional(&params, &anti, 0.1, 0.0).unwrap();
        assert_eq!(a.n_samples, 20_000);
        assert_eq!(b.n_samples, 10_000);
        assert!(
            b.stderr <= 1.05 * a.stderr,
            "antithetic stderr {} vs plain {}",
            b.stderr,
            a.stderr
        );
    }

    #[test]
    fn smile_prices_are_monotone_in_z_and_flat_when_deterministic() {
        let params = fig1();
        let zs: Vec<f64> = (-8..=8).map(|i| i as f64 / 4.0).collect();
        let smile = mc_smile(&params, &cfg(8_000, 32, 3), 0.1, &zs).unwrap();
        // common random numbers make the per-path put monotone in k, hence
        // the averaged prices are monotone without any noise allowance
        for w in smile.windows(2) {
            assert!(w[1].price >= w[0].price);
        }
        for p in &smile {
            if p.z.abs() <= 0.5 {
                let pt = p.point.as_ref().expect("interior prices invert");
                assert!(pt.stderr.unwrap() > 0.0);
                assert!((pt.stderr.unwrap()
                    - p.price_stderr / normalized_vega(0.1, p.z, pt.iv).unwrap())
                .abs()
                    <= 1e-15);
            }
        }
        // ten total-vol standard deviations out, the remaining call value is
        // below one ulp of the parity constant: every path rounds to the
        // arbitrage floor, so the price cannot invert and the spread is zero
        let deep = smile.last().unwrap();
        assert!(deep.point.is_none());
        assert_eq!(deep.price_stderr, 0.0);

        // eta = 0, rho = 0: flat smile at kappa2 = sqrt(v0)
        let det = flat_params(0.3, 0.0, 0.0);
        let smile = mc_smile(&det, &cfg(64, 16, 3), 0.25, &[-1.0, 0.0, 1.0]).unwrap();
        for p in smile {
            let iv = p.point.unwrap().iv;
            assert!((iv - 0.2).abs() <= 1e-9, "iv {iv} should be 0.2");
        }
    }

    #[test]
    fn smile_marks_unpriceable_wings_unavailable() {
        let params = fig1();
        let smile = mc_smile(&params, &cfg(128, 8, 9), 0.1, &[-12.0, 0.0]).unwrap();
        assert!(
            smile[0].point.is_none(),
            "z = -12 price {} should not invert",
            smile[0].price
        );
        assert!(smile[1].point.is_some());
    }

    #[test]
    fn skew_vanishes_for_deterministic_volatility() {
        let params = flat_params(0.07, 0.0, -0.9);
        let rep = mc_atm_skew(&params, &cfg(20_000, 16, 13), 0.1, 0.01).unwrap();
        assert!(
            rep.skew.abs() <= 4.0 * rep.stderr,
            "skew {} ± {}",
            rep.skew,
            rep.stderr
        );
        assert!((rep.atm_iv - 0.2).abs() <= 4.0 * rep.atm_iv_stderr + 1e-6);
    }

    #[test]
    fn digital_and_finite_difference_skews_agree() {
        let params = fig1();
        let theta = 0.1f64;
        let bump = 0.02 * theta.sqrt();
        let rep = mc_atm_skew(&params, &cfg(40_000, 32, 29), theta, bump).unwrap();
        let joint = (rep.stderr.powi(2) + rep.fd_stderr.powi(2)).sqrt();
        assert!(
            (rep.skew - rep.fd_skew).abs() <= 3.0 * joint + 0.02 * rep.skew.abs(),
            "digital {} ± {} vs fd {} ± {}",
            rep.skew,
            rep.stderr,
            rep.fd_skew,
            rep.fd_stderr
        );
        assert!(rep.skew < 0.0, "figure-1 preset has negative skew");
    }

    #[test]
    fn mc_skew_matches_expansion_at_short_maturity() {
        let params = fig1();
        let theta = 0.02;
        let out = params.coefficients(theta).unwrap();
        let want = out.coefficients.atm_skew();
        let rep = mc_atm_skew(
            &params,
            &cfg(60_000, 64, 37),
            theta,
            0.02 * theta.sqrt(),
        )
        .unwrap();
        let tol = (3.0 * rep.stderr).max(0.15 * want.abs());
        assert!(
            (rep.skew - want).abs() <= tol,
            "mc skew {} ± {} vs expansion {want}",
            rep.skew,
            rep.stderr
        );
    }

    #[test]
    fn variance_path_statistics_match_the_model_law() {
        let params = fig1();
        let stats = simulate_variance_paths(&params, &cfg(30_000, 16, 41), 0.1).unwrap();
        let two_h = 2.0 * params.hurst();
        for i in 0..stats.grid.len() {
            let t = stats.grid[i];
            // lognormal compensator is exact: E[v_t] = v0(t)
            assert!(
                (stats.mean_v[i] - 0.04).abs() <= 4.0 * stats.stderr_mean_v[i],
                "node {t}: mean v {} ± {}",
                stats.mean_v[i],
                stats.stderr_mean_v[i]
            );
            // Var(G_t) = t^{2h}
            let want = t.powf(two_h);
            assert!(
                (stats.var_g[i] - want).abs() <= 4.0 * stats.stderr_var_g[i],
                "node {t}: var G {} ± {} vs {want}",
                stats.var_g[i],
                stats.stderr_var_g[i]
            );
        }
    }

    #[test]
    fn mc_smile_tracks_the_expansion_at_short_maturity() {
        // a light version of the figure reproduction: theta = 0.05, modest
        // paths, strikes spanning two total-vol standard deviations (the
        // expansion is asymptotic in that standardized variable; further out
        // its truncation error is no longer small)
        let params = fig1();
        let theta = 0.05;
        let out = params.coefficients(theta).unwrap();
        let zs = [-0.4, -0.2, 0.0, 0.2, 0.4];
        let smile = mc_smile(&params, &cfg(40_000, 256, 53), theta, &zs).unwrap();
        for p in &smile {
            let iv_mc = p.point.as_ref().unwrap();
            let iv_exp = expansion_iv(&out.coefficients, p.z);
            let tol = (3.0 * iv_mc.stderr.unwrap()).max(0.006);
            assert!(
                (iv_mc.iv - iv_exp).abs() <= tol,
                "z = {}: mc {} ± {:?} vs expansion {iv_exp}",
                p.z,
                iv_mc.iv,
                iv_mc.stderr
            );
        }
    }

    fn expansion_iv(c: &ExpansionCoefficients, z: f64) -> f64 {
        c.implied_vol_expansion(z).unwrap()
    }
}
