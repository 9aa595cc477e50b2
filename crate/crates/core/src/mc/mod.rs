//! Seeded Monte Carlo estimators for the discrete and Gaussian schemes.
//!
//! Trials are split over `shards` independent ChaCha8 substreams
//! (`seed`, stream = shard index). Shards run on the rayon pool and are
//! aggregated in shard order, so results depend only on `(seed, shards)`.

mod dpc;
mod gp;

pub use dpc::{dpc_geometry_prob, dpc_spectrum_samples, dpc_spectrum_tail, DpcPair};
pub use gp::{
    canonical_pair, gp_full_sim, gp_hit_prob, gp_hit_prob_exact, gp_spectrum_samples, gp_spectrum_samples_at,
    gp_spectrum_tail, joint_type_counts, sample_joint_type_pair, threshold_bound_terms, DecoderMode, SimConfig,
    SimOutcome, ThresholdTerms, TypeRecord,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Seed and shard count; estimates are a deterministic function of both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub shards: usize,
}

impl RngSpec {
    pub fn new(seed: u64, shards: usize) -> Result<Self> {
        if shards == 0 {
            return Err(domain("at least one shard is required"));
        }
        Ok(Self { seed, shards })
    }

    fn shard_rng(&self, shard: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(shard as u64);
        rng
    }

    /// Runs `work(rng, trials_in_shard)` on every shard and returns the
    /// results in shard order.
    pub(crate) fn run<R, F>(&self, trials: usize, work: F) -> Vec<R>
    where
        R: Send,
        F: Fn(&mut ChaCha8Rng, usize) -> R + Sync,
    {
        let base = trials / self.shards;
        let extra = trials % self.shards;
        (0..self.shards)
            .into_par_iter()
            .map(|k| {
                let mut rng = self.shard_rng(k);
                work(&mut rng, base + usize::from(k < extra))
            })
            .collect()
    }

    /// Like [`RngSpec::run`] with fallible work; the first error in shard
    /// order is returned.
    pub(crate) fn try_run<R, F>(&self, trials: usize, work: F) -> Result<Vec<R>>
    where
        R: Send,
        F: Fn(&mut ChaCha8Rng, usize) -> Result<R> + Sync,
    {
        self.run(trials, work).into_iter().collect()
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub trials: usize,
}

impl Estimate {
    /// Fraction of successes with the binomial standard error.
    pub fn binary(hits: usize, trials: usize) -> Self {
        if trials == 0 {
            return Self { value: f64::NAN, std_error: f64::NAN, trials };
        }
        let p = hits as f64 / trials as f64;
        Self {
            value: p,
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
        }
    }

    /// Sample mean with the empirical standard error of the mean.
    pub fn mean(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self { value: f64::NAN, std_error: f64::NAN, trials: 0 };
        }
        let m = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self { value: m, std_error: (var / n as f64).sqrt(), trials: n }
    }
}

/// Empirical mean and variance of a sample, each with a standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMoments {
    pub mean: Estimate,
    /// Unbiased variance; the standard error uses the fourth central moment.
    pub variance: Estimate,
}

pub fn sample_moments(samples: &[f64]) -> SampleMoments {
    let n = samples.len();
    let mean = Estimate::mean(samples);
    let nf = n as f64;
    let m2 = samples.iter().map(|x| (x - mean.value).powi(2)).sum::<f64>() / nf;
    let m4 = samples.iter().map(|x| (x - mean.value).powi(4)).sum::<f64>() / nf;
    let var = if n > 1 { m2 * nf / (nf - 1.0) } else { 0.0 };
    SampleMoments {
        mean,
        variance: Estimate {
            value: var,
            std_error: ((m4 - m2 * m2).max(0.0) / nf).sqrt(),
            trials: n,
        },
    }
}

/// Fraction of `samples` at or below `gamma`.
pub fn tail_fraction(samples: &[f64], gamma: f64) -> Estimate {
    Estimate::binary(samples.iter().filter(|&&x| x <= gamma).count(), samples.len())
}

/// `(1 - p1)^L` evaluated as `exp(L log1p(-p1))`.
pub fn encoder_failure_prob(p1: f64, l: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p1) || !(l >= 1.0) {
        return Err(domain(format!("need 0 <= p1 <= 1 and L >= 1, got p1 = {p1}, L = {l}")));
    }
    Ok((l * (-p1).ln_1p()).exp())
}

/// Two-sample Kolmogorov–Smirnov statistic and its asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    (d, kolmogorov_q(lambda))
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
