//! Source-arm distributions and deterministic per-trial sample streams.
//!
//! A trial's stream is a ChaCha8 generator seeded from a 64-bit trial seed,
//! which is itself a SplitMix64 hash of `(base_seed, trial_index)`. Streams
//! are independent of scheduling, so batches reproduce bit-for-bit at any
//! degree of parallelism.
//!
//! Gaussian draws use the inverse normal CDF (Acklam's rational
//! approximation, relative error below 1.2e-9) applied to a 53-bit uniform
//! strictly inside (0, 1). It consumes exactly one `u64` per draw.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("arm {arm}: {message}")]
    BadArm { arm: usize, message: String },
    #[error("arm {arm} is not {sigma}-sub-Gaussian (its scale is {scale})")]
    NotSubGaussian { arm: usize, sigma: f64, scale: f64 },
    #[error("environment has no arms")]
    Empty,
}

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial_index` in a batch keyed by `base_seed`.
pub fn trial_seed(base_seed: u64, trial_index: u64) -> u64 {
    splitmix64(splitmix64(base_seed) ^ trial_index)
}

/// A deterministic random stream.
#[derive(Debug, Clone)]
pub struct SampleStream {
    rng: ChaCha8Rng,
}

impl SampleStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform on the open interval (0, 1) with 53 bits of resolution.
    pub fn open_unit(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

/// Inverse of the standard normal CDF for `p ∈ (0, 1)`.
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.38357751867269e2,
        -3.066479806614716e1,
        2.506628277459239e0,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838e0,
        -2.549732539343734e0,
        4.374664141464968e0,
        2.938163982698783e0,
    ];
    const D: [f64; 4] = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996e0, 3.754408661907416e0];
    const P_LOW: f64 = 0.02425;

    debug_assert!(p > 0.0 && p < 1.0);
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    }
}

pub fn gaussian_sample(stream: &mut SampleStream, mean: f64, sd: f64) -> f64 {
    debug_assert!(sd > 0.0);
    mean + sd * normal_quantile(stream.open_unit())
}

pub fn bernoulli_sample(stream: &mut SampleStream, p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    if stream.open_unit() < p {
        1.0
    } else {
        0.0
    }
}

pub fn uniform_sample(stream: &mut SampleStream, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo < hi);
    lo + (hi - lo) * stream.open_unit()
}

/// Reward distribution of one source arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "distribution", rename_all = "snake_case")]
pub enum ArmDistribution {
    Gaussian { mean: f64, sd: f64 },
    Bernoulli { p: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl ArmDistribution {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            ArmDistribution::Gaussian { mean, sd } => {
                if !mean.is_finite() {
                    return Err(format!("gaussian mean must be finite, got {mean}"));
                }
                if !(sd > 0.0 && sd.is_finite()) {
                    return Err(format!("gaussian sd must be positive, got {sd}"));
                }
            }
            ArmDistribution::Bernoulli { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(format!("bernoulli p must lie in [0, 1], got {p}"));
                }
            }
            ArmDistribution::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(format!("uniform needs finite lo < hi, got [{lo}, {hi}]"));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ArmDistribution::Gaussian { mean, .. } => mean,
            ArmDistribution::Bernoulli { p } => p,
            ArmDistribution::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    /// Sub-Gaussian scale: `sd`, `1/2`, and `(hi − lo)/2` respectively.
    pub fn sub_gaussian_scale(&self) -> f64 {
        match *self {
            ArmDistribution::Gaussian { sd, .. } => sd,
            ArmDistribution::Bernoulli { .. } => 0.5,
            ArmDistribution::Uniform { lo, hi } => 0.5 * (hi - lo),
        }
    }

    pub fn sample(&self, stream: &mut SampleStream) -> f64 {
        match *self {
            ArmDistribution::Gaussian { mean, sd } => gaussian_sample(stream, mean, sd),
            ArmDistribution::Bernoulli { p } => bernoulli_sample(stream, p),
            ArmDistribution::Uniform { lo, hi } => uniform_sample(stream, lo, hi),
        }
    }
}

/// The source instance. True means are visible here but never reach the
/// algorithms, which only see samples through [`SampleSource`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditEnv {
    arms: Vec<ArmDistribution>,
}

impl BanditEnv {
    pub fn new(arms: Vec<ArmDistribution>) -> Result<Self, EnvError> {
        if arms.is_empty() {
            return Err(EnvError::Empty);
        }
        for (arm, d) in arms.iter().enumerate() {
            d.validate().map_err(|message| EnvError::BadArm { arm, message })?;
        }
        Ok(Self { arms })
    }

    /// Gaussian arms with a common standard deviation.
    pub fn gaussian(means: &[f64], sd: f64) -> Result<Self, EnvError> {
        Self::new(means.iter().map(|&mean| ArmDistribution::Gaussian { mean, sd }).collect())
    }

    pub fn arms(&self) -> &[ArmDistribution] {
        &self.arms
    }

    pub fn n_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(ArmDistribution::mean).collect()
    }

    /// Checks every arm is `sigma`-sub-Gaussian.
    pub fn check_sub_gaussian(&self, sigma: f64) -> Result<(), EnvError> {
        for (arm, d) in self.arms.iter().enumerate() {
            let scale = d.sub_gaussian_scale();
            if scale > sigma {
                return Err(EnvError::NotSubGaussian { arm, sigma, scale });
            }
        }
        Ok(())
    }

    pub fn sampler(&self, seed: u64) -> EnvSampler<'_> {
        EnvSampler {
            env: self,
            stream: SampleStream::new(seed),
        }
    }
}

/// Where an algorithm gets its observations from.
pub trait SampleSource {
    fn n_arms(&self) -> usize;
    fn sample(&mut self, arm: usize) -> f64;
}

/// Samples a [`BanditEnv`] through a seeded stream.
#[derive(Debug)]
pub struct EnvSampler<'a> {
    env: &'a BanditEnv,
    stream: SampleStream,
}

impl SampleSource for EnvSampler<'_> {
    fn n_arms(&self) -> usize {
        self.env.n_arms()
    }

    fn sample(&mut self, arm: usize) -> f64 {
        self.env.arms[arm].sample(&mut self.stream)
    }
}
