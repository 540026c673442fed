use serde::{Deserialize, Serialize};

use super::SampleSet;
use crate::error::{Error, Result};

/// Right-continuous empirical CDF over positive integer support.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    /// `counts[t]` = number of samples equal to `t`.
    counts: Vec<u64>,
    total: u64,
}

impl Ecdf {
    pub fn from_samples(samples: &[u32]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        let max = *samples.iter().max().expect("non-empty") as usize;
        let mut counts = vec![0u64; max + 1];
        for &s in samples {
            counts[s as usize] += 1;
        }
        Ok(Self { counts, total: samples.len() as u64 })
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Largest observed value.
    pub fn max(&self) -> usize {
        self.counts.len() - 1
    }

    /// `F_L(x)`
    pub fn eval(&self, x: usize) -> f64 {
        let upto = x.min(self.max());
        self.counts[..=upto].iter().sum::<u64>() as f64 / self.total as f64
    }

    /// `(t, F_L(t))` at every jump point.
    pub fn steps(&self) -> Vec<(usize, f64)> {
        let mut acc = 0u64;
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(t, &c)| {
                acc += c;
                (t, acc as f64 / self.total as f64)
            })
            .collect()
    }

    /// `F_L(t)` for `t = 1..=horizon`.
    pub fn cumulative(&self, horizon: usize) -> Vec<f64> {
        let mut acc = self.counts.first().copied().unwrap_or(0);
        (1..=horizon)
            .map(|t| {
                acc += self.counts.get(t).copied().unwrap_or(0);
                acc as f64 / self.total as f64
            })
            .collect()
    }

    /// Smallest sample value `t` with `F_L(t) ≥ q`.
    pub fn quantile(&self, q: f64) -> usize {
        let need = q * self.total as f64;
        let mut acc = 0u64;
        for (t, &c) in self.counts.iter().enumerate() {
            acc += c;
            if c > 0 && acc as f64 >= need {
                return t;
            }
        }
        self.max()
    }
}

pub fn empirical_cdf(samples: &SampleSet) -> Result<Ecdf> {
    Ecdf::from_samples(&samples.paoii_samples)
}

/// Deviation `μ` such that the two-sided sup-distance exceeds it with
/// probability at most `delta`.
pub fn dkw_epsilon(samples: u64, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * samples as f64)).sqrt()
}

/// One-sided bound `exp(−2Lμ²)` on `P(sup (F_L − F) > μ)`.
pub fn dkw_tail_probability(samples: u64, mu: f64) -> f64 {
    (-2.0 * samples as f64 * mu * mu).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DkwReport {
    pub distance: f64,
    /// Slot at which the distance is attained.
    pub argmax: usize,
    pub mu: f64,
    pub delta: f64,
    pub samples: u64,
    pub pass: bool,
}

/// Compares an ECDF with an analytic CDF given as `cdf[t − 1] = F(t)` on
/// `t = 1..=cdf.len()`; beyond the last entry `F` is held at its final value.
pub fn dkw_check(ecdf: &Ecdf, analytic_cdf: &[f64], sample_count: u64, delta: f64) -> DkwReport {
    let horizon = analytic_cdf.len().max(ecdf.max());
    let last = analytic_cdf.last().copied().unwrap_or(0.0);
    let empirical = ecdf.cumulative(horizon);
    let mut distance = 0.0;
    let mut argmax = 0;
    for t in 1..=horizon {
        let f = analytic_cdf.get(t - 1).copied().unwrap_or(last);
        let d = (empirical[t - 1] - f).abs();
        if d > distance {
            distance = d;
            argmax = t;
        }
    }
    let mu = dkw_epsilon(sample_count, delta);
    DkwReport { distance, argmax, mu, delta, samples: sample_count, pass: distance <= mu }
}
