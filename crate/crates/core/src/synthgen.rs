//! Surrogate NR demand from a reference LTE series.
//!
//! Moving-block bootstrap keeps short-range temporal structure of the
//! reference; optional Gaussian jitter is added and the result is clamped at
//! zero. All randomness comes from a ChaCha stream seeded with
//! [`SynthConfig::seed`], so output is reproducible across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{self, PrbSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub block_len: usize,
    /// Standard deviation of the additive jitter, in PRBs.
    pub jitter_std: f64,
    pub target_len: usize,
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.block_len == 0 {
            return Err(Error::invalid("block_len must be >= 1"));
        }
        if self.target_len == 0 {
            return Err(Error::invalid("target_len must be >= 1"));
        }
        if !(self.jitter_std >= 0.0 && self.jitter_std.is_finite()) {
            return Err(Error::invalid(format!(
                "jitter_std must be finite and >= 0, got {}",
                self.jitter_std
            )));
        }
        Ok(())
    }
}

pub fn generate_surrogate(reference: &PrbSeries, config: &SynthConfig) -> Result<PrbSeries> {
    config.validate()?;
    let n = reference.values.len();
    if n < config.block_len {
        return Err(Error::invalid(format!(
            "reference has {n} values, shorter than block_len {}",
            config.block_len
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let last_start = n - config.block_len;
    let mut values = Vec::with_capacity(config.target_len + config.block_len);
    while values.len() < config.target_len {
        let start = rng.random_range(0..=last_start);
        values.extend_from_slice(&reference.values[start..start + config.block_len]);
    }
    values.truncate(config.target_len);

    if config.jitter_std > 0.0 {
        let noise = Normal::new(0.0, config.jitter_std)
            .map_err(|e| Error::invalid(format!("jitter distribution: {e}")))?;
        for v in &mut values {
            *v = (*v + noise.sample(&mut rng)).max(0.0);
        }
    }

    Ok(PrbSeries {
        start_time_ms: reference.start_time_ms,
        granularity_ms: reference.granularity_ms,
        values,
        label: "NR".into(),
        gap_count: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalStats {
    pub mean: f64,
    pub variance: f64,
    pub maximum: f64,
}

/// Two empirical CDFs evaluated on a shared value grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub value: f64,
    pub cdf_a: f64,
    pub cdf_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub a: MarginalStats,
    pub b: MarginalStats,
    /// Kolmogorov-Smirnov statistic: the largest gap between the two
    /// empirical CDFs.
    pub ks_statistic: f64,
    /// `n_bins` evenly spaced points spanning both supports, for plotting.
    pub cdf: Vec<CdfPoint>,
}

pub fn similarity_report(a: &PrbSeries, b: &PrbSeries, n_bins: usize) -> Result<SimilarityReport> {
    if a.values.is_empty() || b.values.is_empty() {
        return Err(Error::invalid("similarity needs two non-empty series"));
    }
    if n_bins == 0 {
        return Err(Error::invalid("n_bins must be >= 1"));
    }
    let sa = sorted(&a.values);
    let sb = sorted(&b.values);

    let lo = sa[0].min(sb[0]);
    let hi = sa[sa.len() - 1].max(sb[sb.len() - 1]);
    let cdf = (0..n_bins)
        .map(|i| {
            let value = if n_bins == 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n_bins - 1) as f64
            };
            CdfPoint {
                value,
                cdf_a: ecdf(&sa, value),
                cdf_b: ecdf(&sb, value),
            }
        })
        .collect();

    Ok(SimilarityReport {
        a: marginal(&a.values),
        b: marginal(&b.values),
        ks_statistic: ks_statistic(&sa, &sb),
        cdf,
    })
}

fn marginal(values: &[f64]) -> MarginalStats {
    MarginalStats {
        mean: series::mean(values),
        variance: series::variance(values),
        maximum: series::max(values),
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Fraction of `sorted` that is <= x.
fn ecdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|v| *v <= x) as f64 / sorted.len() as f64
}

/// Two-sample KS statistic by a merge walk over both sorted samples.
fn ks_statistic(sa: &[f64], sb: &[f64]) -> f64 {
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}
