//! Deterministic K-of-N synthetic series.
//!
//! Every channel is a sinusoid with a random phase plus noise. In the first
//! `k_anom` channels the anomalous interval switches to twice the base
//! frequency, which no per-point threshold can see but which has no close
//! match anywhere else in the channel.
//!
//! Randomness comes from SplitMix64 and noise is the Irwin-Hall sum of
//! twelve uniforms minus six (mean 0, variance 1), so generation uses only
//! integer arithmetic, IEEE basic operations, and `sin`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::TimeSeries;

/// SplitMix64 with the standard constants.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
    const MIX1: u64 = 0xBF58_476D_1CE4_E5B9;
    const MIX2: u64 = 0x94D0_49BB_1331_11EB;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(Self::GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(Self::MIX1);
        z = (z ^ (z >> 27)).wrapping_mul(Self::MIX2);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Approximately standard normal (Irwin-Hall, twelve terms).
    pub fn next_gaussian(&mut self) -> f64 {
        (0..12).map(|_| self.next_f64()).sum::<f64>() - 6.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub d: usize,
    /// Number of anomalous channels (the first `k_anom`).
    pub k_anom: usize,
    pub anomaly_start: usize,
    pub anomaly_len: usize,
    pub base_period: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    /// Eight channels, one anomalous.
    fn default() -> Self {
        Self {
            n: 2000,
            d: 8,
            k_anom: 1,
            anomaly_start: 1200,
            anomaly_len: 100,
            base_period: 50.0,
            noise_sigma: 0.3,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.d < 1 {
            return Err(Error::param("synthetic series needs n >= 1 and d >= 1"));
        }
        if self.k_anom < 1 || self.k_anom > self.d {
            return Err(Error::param(format!(
                "anomalous channel count {} outside [1, {}]",
                self.k_anom, self.d
            )));
        }
        if self.anomaly_start + self.anomaly_len > self.n
            || (self.anomaly_len > 0 && self.anomaly_start >= self.n)
        {
            return Err(Error::param(format!(
                "anomaly interval [{}, {}) does not fit in [0, {})",
                self.anomaly_start,
                self.anomaly_start + self.anomaly_len,
                self.n
            )));
        }
        if !(self.base_period.is_finite() && self.base_period > 0.0) {
            return Err(Error::param("base period must be positive"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::param("noise sigma must be non-negative"));
        }
        Ok(())
    }

    pub fn interval(&self) -> std::ops::Range<usize> {
        self.anomaly_start..self.anomaly_start + self.anomaly_len
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<TimeSeries> {
    cfg.validate()?;
    let mut rng = SplitMix64::new(cfg.seed);
    let phases: Vec<f64> = (0..cfg.d).map(|_| TAU * rng.next_f64()).collect();
    let interval = cfg.interval();
    let channels = phases
        .iter()
        .enumerate()
        .map(|(c, &phase)| {
            (0..cfg.n)
                .map(|t| {
                    let cycles = if c < cfg.k_anom && interval.contains(&t) {
                        2.0
                    } else {
                        1.0
                    };
                    let clean = (TAU * cycles * t as f64 / cfg.base_period + phase).sin();
                    let noise = rng.next_gaussian();
                    clean + cfg.noise_sigma * noise
                })
                .collect()
        })
        .collect();
    let labels = (0..cfg.n)
        .map(|t| u8::from(interval.contains(&t)))
        .collect();
    let names = (0..cfg.d).map(|c| format!("c{c}")).collect();
    TimeSeries::new(channels, names, Some(labels))
}
