//! Per-slot arrival traffic: a random number of batches lands each slot, each
//! batch carries a random number of particles, and every particle picks an
//! independent uniform location on the circle.
//!
//! The batch count has mean `lambda` and the batch size mean `beta`, so the
//! offered load is `lambda * beta` particles per slot.  Specs must leave a
//! positive probability of at most one arrival in a slot; several stability
//! diagnostics lean on the chain being able to reach small states.

use crate::admissibility::Particle;
use rand::Rng;
use rand_distr::{Distribution, Geometric, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TrafficError {
    #[error("{what} must be finite and positive, got {value}")]
    BadMean { what: &'static str, value: f64 },
    #[error("shifted distributions need a mean of at least one, got {value}")]
    MeanBelowOne { value: f64 },
    #[error("categorical distributions need at least one entry")]
    EmptyCategorical,
    #[error("categorical weights must be finite, nonnegative, and not all zero")]
    BadWeights,
    #[error("batch sizes start at one, got {value}")]
    SizeBelowOne { value: u64 },
    #[error("a slot must carry at most one arrival with positive probability")]
    NeverSmall,
}

/// One entry of a categorical distribution; weights are normalized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatEntry {
    pub value: u64,
    pub weight: f64,
}

fn validate_entries(entries: &[CatEntry], min_value: u64) -> Result<(), TrafficError> {
    if entries.is_empty() {
        return Err(TrafficError::EmptyCategorical);
    }
    let mut sum = 0.0;
    for e in entries {
        if !e.weight.is_finite() || e.weight < 0.0 {
            return Err(TrafficError::BadWeights);
        }
        if e.value < min_value {
            return Err(TrafficError::SizeBelowOne { value: e.value });
        }
        sum += e.weight;
    }
    if sum <= 0.0 {
        return Err(TrafficError::BadWeights);
    }
    Ok(())
}

fn entries_mean(entries: &[CatEntry]) -> f64 {
    let sum: f64 = entries.iter().map(|e| e.weight).sum();
    entries.iter().map(|e| e.value as f64 * e.weight).sum::<f64>() / sum
}

fn entries_prob(entries: &[CatEntry], value: u64) -> f64 {
    let sum: f64 = entries.iter().map(|e| e.weight).sum();
    entries.iter().filter(|e| e.value == value).map(|e| e.weight).sum::<f64>() / sum
}

fn entries_support(entries: &[CatEntry]) -> Vec<(u64, f64)> {
    let sum: f64 = entries.iter().map(|e| e.weight).sum();
    let mut merged: std::collections::BTreeMap<u64, f64> = std::collections::BTreeMap::new();
    for e in entries {
        *merged.entry(e.value).or_insert(0.0) += e.weight / sum;
    }
    merged.into_iter().collect()
}

fn entries_sample<R: Rng + ?Sized>(entries: &[CatEntry], rng: &mut R) -> u64 {
    let sum: f64 = entries.iter().map(|e| e.weight).sum();
    let mut u = rng.random::<f64>() * sum;
    for e in entries {
        if u < e.weight {
            return e.value;
        }
        u -= e.weight;
    }
    entries[entries.len() - 1].value
}

/// How many batches arrive in a slot; support starts at zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BatchCountDist {
    Deterministic { value: u64 },
    Poisson { mean: f64 },
    /// Number of failures before a success, mean `mean`.
    Geometric { mean: f64 },
    Categorical { entries: Vec<CatEntry> },
}

impl BatchCountDist {
    pub fn validate(&self) -> Result<(), TrafficError> {
        match self {
            BatchCountDist::Deterministic { .. } => Ok(()),
            BatchCountDist::Poisson { mean } | BatchCountDist::Geometric { mean } => {
                if mean.is_finite() && *mean > 0.0 {
                    Ok(())
                } else {
                    Err(TrafficError::BadMean { what: "batch-count mean", value: *mean })
                }
            }
            BatchCountDist::Categorical { entries } => validate_entries(entries, 0),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            BatchCountDist::Deterministic { value } => *value as f64,
            BatchCountDist::Poisson { mean } | BatchCountDist::Geometric { mean } => *mean,
            BatchCountDist::Categorical { entries } => entries_mean(entries),
        }
    }

    fn prob(&self, v: u64) -> f64 {
        match self {
            BatchCountDist::Deterministic { value } => {
                if *value == v {
                    1.0
                } else {
                    0.0
                }
            }
            BatchCountDist::Poisson { mean } => {
                let mut p = (-mean).exp();
                for i in 1..=v {
                    p *= mean / i as f64;
                }
                p
            }
            BatchCountDist::Geometric { mean } => {
                let p = 1.0 / (1.0 + mean);
                p * (1.0 - p).powi(v as i32)
            }
            BatchCountDist::Categorical { entries } => entries_prob(entries, v),
        }
    }

    /// Exact support with probabilities when it is finite, `None` otherwise.
    pub fn finite_support(&self) -> Option<Vec<(u64, f64)>> {
        match self {
            BatchCountDist::Deterministic { value } => Some(vec![(*value, 1.0)]),
            BatchCountDist::Categorical { entries } => Some(entries_support(entries)),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            BatchCountDist::Deterministic { value } => *value,
            BatchCountDist::Poisson { mean } => {
                Poisson::new(*mean).expect("validated mean").sample(rng) as u64
            }
            BatchCountDist::Geometric { mean } => {
                Geometric::new(1.0 / (1.0 + mean)).expect("validated mean").sample(rng)
            }
            BatchCountDist::Categorical { entries } => entries_sample(entries, rng),
        }
    }
}

/// How many particles one batch carries; support starts at one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BatchSizeDist {
    Deterministic { value: u64 },
    /// `1 +` a Poisson draw with mean `mean - 1`.
    ShiftedPoisson { mean: f64 },
    /// Support `1, 2, ...` with success probability `1 / mean`.
    ShiftedGeometric { mean: f64 },
    Categorical { entries: Vec<CatEntry> },
}

impl BatchSizeDist {
    pub fn validate(&self) -> Result<(), TrafficError> {
        match self {
            BatchSizeDist::Deterministic { value } => {
                if *value >= 1 {
                    Ok(())
                } else {
                    Err(TrafficError::SizeBelowOne { value: *value })
                }
            }
            BatchSizeDist::ShiftedPoisson { mean } | BatchSizeDist::ShiftedGeometric { mean } => {
                if !mean.is_finite() {
                    Err(TrafficError::BadMean { what: "batch-size mean", value: *mean })
                } else if *mean < 1.0 {
                    Err(TrafficError::MeanBelowOne { value: *mean })
                } else {
                    Ok(())
                }
            }
            BatchSizeDist::Categorical { entries } => validate_entries(entries, 1),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            BatchSizeDist::Deterministic { value } => *value as f64,
            BatchSizeDist::ShiftedPoisson { mean } | BatchSizeDist::ShiftedGeometric { mean } => {
                *mean
            }
            BatchSizeDist::Categorical { entries } => entries_mean(entries),
        }
    }

    fn prob_one(&self) -> f64 {
        match self {
            BatchSizeDist::Deterministic { value } => {
                if *value == 1 {
                    1.0
                } else {
                    0.0
                }
            }
            BatchSizeDist::ShiftedPoisson { mean } => (-(mean - 1.0)).exp(),
            BatchSizeDist::ShiftedGeometric { mean } => 1.0 / mean,
            BatchSizeDist::Categorical { entries } => entries_prob(entries, 1),
        }
    }

    /// Exact support with probabilities when it is finite, `None` otherwise.
    pub fn finite_support(&self) -> Option<Vec<(u64, f64)>> {
        match self {
            BatchSizeDist::Deterministic { value } => Some(vec![(*value, 1.0)]),
            BatchSizeDist::Categorical { entries } => Some(entries_support(entries)),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            BatchSizeDist::Deterministic { value } => *value,
            BatchSizeDist::ShiftedPoisson { mean } => {
                if *mean <= 1.0 {
                    1
                } else {
                    1 + Poisson::new(mean - 1.0).expect("validated mean").sample(rng) as u64
                }
            }
            BatchSizeDist::ShiftedGeometric { mean } => {
                if *mean <= 1.0 {
                    1
                } else {
                    1 + Geometric::new(1.0 / mean).expect("validated mean").sample(rng)
                }
            }
            BatchSizeDist::Categorical { entries } => entries_sample(entries, rng),
        }
    }
}

/// Full description of a slot's arrivals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalSpec {
    pub batches: BatchCountDist,
    pub batch_size: BatchSizeDist,
}

impl ArrivalSpec {
    /// The workhorse: Poisson(`lambda`) batches of exactly one particle.
    pub fn poisson_singletons(lambda: f64) -> ArrivalSpec {
        ArrivalSpec {
            batches: BatchCountDist::Poisson { mean: lambda },
            batch_size: BatchSizeDist::Deterministic { value: 1 },
        }
    }

    pub fn validate(&self) -> Result<(), TrafficError> {
        self.batches.validate()?;
        self.batch_size.validate()?;
        // at most one arrival means zero batches, or one batch of one
        let p_small = self.batches.prob(0) + self.batches.prob(1) * self.batch_size.prob_one();
        if p_small <= 0.0 {
            return Err(TrafficError::NeverSmall);
        }
        Ok(())
    }

    /// Mean number of batches per slot.
    pub fn batch_rate(&self) -> f64 {
        self.batches.mean()
    }

    /// Mean particles per batch.
    pub fn mean_batch_size(&self) -> f64 {
        self.batch_size.mean()
    }

    /// Mean particles per slot.
    pub fn offered_load(&self) -> f64 {
        self.batches.mean() * self.batch_size.mean()
    }

    /// Mean arrivals per slot landing in any one of `k` equal regions.
    pub fn expected_per_region(&self, k: usize) -> f64 {
        self.offered_load() / k as f64
    }

    /// Exact distribution of the number of arrivals in one slot, when both
    /// component distributions have finite support.  `None` otherwise.
    pub fn total_arrival_distribution(&self) -> Option<Vec<(u64, f64)>> {
        let batch_counts = self.batches.finite_support()?;
        let sizes = self.batch_size.finite_support()?;
        let mut totals: std::collections::BTreeMap<u64, f64> = std::collections::BTreeMap::new();
        for (b, pb) in batch_counts {
            // b-fold convolution of the batch-size law
            let mut dist: Vec<(u64, f64)> = vec![(0, 1.0)];
            for _ in 0..b {
                let mut next: std::collections::BTreeMap<u64, f64> = std::collections::BTreeMap::new();
                for &(v, p) in &dist {
                    for &(s, ps) in &sizes {
                        *next.entry(v + s).or_insert(0.0) += p * ps;
                    }
                }
                dist = next.into_iter().collect();
            }
            for (v, p) in dist {
                *totals.entry(v).or_insert(0.0) += pb * p;
            }
        }
        Some(totals.into_iter().collect())
    }

    /// One slot of arrivals with fresh ids and uniform locations.
    pub fn sample_arrivals<R: Rng + ?Sized>(&self, rng: &mut R, next_id: &mut u64) -> Vec<Particle> {
        let batches = self.batches.sample(rng);
        let mut out = Vec::new();
        for _ in 0..batches {
            let size = self.batch_size.sample(rng);
            for _ in 0..size {
                let loc = rng.random::<f64>();
                out.push(Particle::new(*next_id, loc));
                *next_id += 1;
            }
        }
        out
    }
}
