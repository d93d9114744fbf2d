//! Shared accumulation primitives for the Monte Carlo drivers.
//!
//! All estimators reduce path values with Neumaier-compensated sums inside
//! fixed-size batches and fold the per-batch partials in batch order, so a
//! result depends only on (seed, configuration), never on thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of samples (paths, or antithetic pairs) per RNG substream.
pub(crate) const BATCH_SIZE: u64 = 4096;

/// The RNG for batch b: one substream per batch derived from the run seed.
pub(crate) fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch + 1);
    rng
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompSum {
    sum: f64,
    comp: f64,
}

impl CompSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub(crate) fn merge(&mut self, other: &CompSum) {
        self.add(other.sum);
        self.add(other.comp);
    }
}

/// Streaming first and second moments of one scalar quantity.
#[derive(Debug, Clone, Default)]
pub(crate) struct MomentAcc {
    pub(crate) n: u64,
    sum: CompSum,
    sumsq: CompSum,
}

impl MomentAcc {
    pub(crate) fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum.add(x);
        self.sumsq.add(x * x);
    }

    pub(crate) fn merge(&mut self, other: &MomentAcc) {
        self.n += other.n;
        self.sum.merge(&other.sum);
        self.sumsq.merge(&other.sumsq);
    }

    pub(crate) fn mean(&self) -> f64 {
        self.sum.value() / self.n as f64
    }

    pub(crate) fn sample_variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let mean = self.mean();
        ((self.sumsq.value() - n * mean * mean) / (n - 1.0)).max(0.0)
    }

    pub(crate) fn stderr(&self) -> f64 {
        (self.sample_variance() / self.n as f64).sqrt()
    }
}

/// Cross-moment tracker for the sample covariance of two quantities that
/// are pushed together.
#[derive(Debug, Clone, Default)]
pub(crate) struct CrossAcc {
    xy: CompSum,
}

impl CrossAcc {
    pub(crate) fn push(&mut self, x: f64, y: f64) {
        self.xy.add(x * y);
    }

    pub(crate) fn merge(&mut self, other: &CrossAcc) {
        self.xy.merge(&other.xy);
    }

    pub(crate) fn sample_cov(&self, x: &MomentAcc, y: &MomentAcc) -> f64 {
        if x.n < 2 {
            return 0.0;
        }
        let n = x.n as f64;
        (self.xy.value() - n * x.mean() * y.mean()) / (n - 1.0)
    }
}
