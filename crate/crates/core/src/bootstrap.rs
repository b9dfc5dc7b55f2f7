//! Unit-level bootstrap with bias-corrected and accelerated (BCa) intervals.
//!
//! A statistic sees a resample as a multiplicity vector: `counts[i]` copies of unit `i`.
//! Replicate `b`, attempt `k` draws its units from the stream `("bootstrap", b, k)`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::kinematics::quantile_sorted;
use crate::rng::stream;

pub const DEFAULT_REPLICATIONS: usize = 10_000;
pub const DEFAULT_LEVEL: f64 = 0.5;
/// Redraws of a replicate on which the statistic is undefined.
pub const MAX_RETRIES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replications: usize,
    /// Central coverage of the interval.
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replications: DEFAULT_REPLICATIONS,
            level: DEFAULT_LEVEL,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 100 {
            return Err(Error::Config(format!("B = {} below 100", self.replications)));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("level {} outside (0, 1)", self.level)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInterval {
    pub lo: f64,
    pub hi: f64,
    pub point: f64,
    pub level: f64,
    pub z0: f64,
    pub accel: f64,
    /// All replicates equal (or none usable): the interval collapses to the point.
    pub degenerate: bool,
    /// Replicates still undefined after [`MAX_RETRIES`] redraws; excluded.
    pub dropped_replicates: usize,
}

/// Multiplicities of `n` units drawn with replacement for replicate `b`, attempt `attempt`.
pub fn resample_counts(n: usize, seed: u64, b: usize, attempt: usize) -> Vec<u32> {
    let mut rng = stream(seed, &["bootstrap", &b.to_string(), &attempt.to_string()]);
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1;
    }
    counts
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Replicate values in replicate order; `None` marks a replicate dropped after retries.
pub fn replicates<F>(n: usize, statistic: &F, cfg: &BootstrapConfig) -> Vec<Option<f64>>
where
    F: Fn(&[u32]) -> Option<f64> + Sync,
{
    (0..cfg.replications)
        .into_par_iter()
        .map(|b| (0..=MAX_RETRIES).find_map(|k| statistic(&resample_counts(n, cfg.seed, b, k))))
        .collect()
}

/// Leave-one-unit-out values; units whose removal leaves the statistic undefined are skipped.
pub fn jackknife<F>(n: usize, statistic: &F) -> Vec<f64>
where
    F: Fn(&[u32]) -> Option<f64> + Sync,
{
    (0..n)
        .into_par_iter()
        .filter_map(|i| {
            let mut c = vec![1u32; n];
            c[i] = 0;
            statistic(&c)
        })
        .collect()
}

/// Jackknife acceleration `Σ(θ̄−θ_i)³ / (6 [Σ(θ̄−θ_i)²]^{3/2})`; 0 when undefined.
pub fn acceleration(jack: &[f64]) -> f64 {
    if jack.len() < 2 {
        return 0.0;
    }
    let mean = jack.iter().sum::<f64>() / jack.len() as f64;
    let (s2, s3) = jack.iter().fold((0.0, 0.0), |(s2, s3), &t| {
        let d = mean - t;
        (s2 + d * d, s3 + d * d * d)
    });
    if s2 == 0.0 {
        0.0
    } else {
        s3 / (6.0 * s2.powf(1.5))
    }
}

/// BCa interval for `statistic` over `n` resampling units.
pub fn bootstrap_ci<F>(n: usize, statistic: F, cfg: &BootstrapConfig) -> Result<BootstrapInterval>
where
    F: Fn(&[u32]) -> Option<f64> + Sync,
{
    cfg.validate()?;
    if n < 2 {
        return Err(Error::EmptyInput("bootstrap needs at least 2 units"));
    }
    let point = statistic(&vec![1u32; n]).ok_or(Error::EmptyInput("statistic undefined on the full sample"))?;
    let reps = replicates(n, &statistic, cfg);
    let dropped_replicates = reps.iter().filter(|r| r.is_none()).count();
    let mut thetas: Vec<f64> = reps.into_iter().flatten().collect();
    thetas.sort_by(f64::total_cmp);
    let collapsed = BootstrapInterval {
        lo: point,
        hi: point,
        point,
        level: cfg.level,
        z0: 0.0,
        accel: 0.0,
        degenerate: true,
        dropped_replicates,
    };
    if thetas.is_empty() || thetas[0] == thetas[thetas.len() - 1] {
        return Ok(collapsed);
    }
    let nb = thetas.len() as f64;
    let below = thetas.iter().filter(|&&t| t < point).count() as f64;
    let phi = std_normal();
    let z0 = phi.inverse_cdf((below / nb).clamp(0.5 / nb, 1.0 - 0.5 / nb));
    let accel = acceleration(&jackknife(n, &statistic));
    let alpha = 0.5 * (1.0 - cfg.level);
    let adjusted = |z: f64| {
        let w = z0 + z;
        let denom = 1.0 - accel * w;
        if denom <= 0.0 {
            return if w > 0.0 { 1.0 } else { 0.0 };
        }
        phi.cdf(z0 + w / denom)
    };
    let a_lo = adjusted(phi.inverse_cdf(alpha));
    let a_hi = adjusted(phi.inverse_cdf(1.0 - alpha));
    Ok(BootstrapInterval {
        lo: quantile_sorted(&thetas, a_lo),
        hi: quantile_sorted(&thetas, a_hi),
        degenerate: false,
        z0,
        accel,
        ..collapsed
    })
}

/// BCa interval for `θ_A − θ_B`, both statistics evaluated on the same resamples.
pub fn paired_difference_ci<A, B>(n: usize, stat_a: A, stat_b: B, cfg: &BootstrapConfig) -> Result<BootstrapInterval>
where
    A: Fn(&[u32]) -> Option<f64> + Sync,
    B: Fn(&[u32]) -> Option<f64> + Sync,
{
    bootstrap_ci(n, |c| Some(stat_a(c)? - stat_b(c)?), cfg)
}

/// Weighted mean of per-unit values under a multiplicity vector.
pub fn weighted_mean(values: &[f64], counts: &[u32]) -> Option<f64> {
    let (s, w) = values
        .iter()
        .zip(counts)
        .fold((0.0, 0u64), |(s, w), (&v, &c)| (s + v * c as f64, w + c as u64));
    (w > 0).then(|| s / w as f64)
}

/// Weighted mean over per-unit `(sum, count)` aggregates, i.e. the pooled mean of all
/// observations in the resampled units.
pub fn pooled_mean(sums: &[(f64, usize)], counts: &[u32]) -> Option<f64> {
    let (s, w) = sums
        .iter()
        .zip(counts)
        .fold((0.0, 0u64), |(s, w), (&(v, k), &c)| (s + v * c as f64, w + (k as u64) * c as u64));
    (w > 0).then(|| s / w as f64)
}
