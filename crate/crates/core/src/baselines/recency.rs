//! Discrete-time reconsumption baseline: the product used `j` events ago is
//! reused with probability proportional to a learned lag weight.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Memory used in the published comparison.
pub const DEFAULT_MEMORY: usize = 5;

/// Normalized lag weights for lags `1..=memory` plus the mass reserved for
/// products absent from the window.
#[derive(Debug, Clone, PartialEq)]
pub struct RecencyParams<T> {
    pub memory: usize,
    pub lag_weights: Vec<T>,
    pub novel_weight: T,
}

/// Counts, for each lag, how often the next product repeats the product at
/// that lag, and how often it is absent from the window. Add-one smoothing on
/// every count.
pub fn fit_recency<T: Scalar>(sequence: &[usize], memory: usize) -> Result<RecencyParams<T>> {
    if memory == 0 {
        return Err(Error::Domain("recency memory must be positive".into()));
    }
    let mut hits = vec![1usize; memory];
    let mut novel = 1usize;
    for i in 1..sequence.len() {
        let target = sequence[i];
        let depth = memory.min(i);
        let mut seen = false;
        for j in 1..=depth {
            if sequence[i - j] == target {
                hits[j - 1] += 1;
                seen = true;
            }
        }
        if !seen {
            novel += 1;
        }
    }
    let total = T::from_count(hits.iter().sum::<usize>() + novel);
    Ok(RecencyParams {
        memory,
        lag_weights: hits.iter().map(|&h| T::from_count(h) / total).collect(),
        novel_weight: T::from_count(novel) / total,
    })
}

/// Distribution over `num_products` given recent products, oldest first.
pub fn predict_recency<T: Scalar>(
    params: &RecencyParams<T>,
    recent: &[usize],
    num_products: usize,
) -> Vec<T> {
    let mut scores = vec![T::zero(); num_products];
    let window = &recent[recent.len().saturating_sub(params.memory)..];
    let mut present = vec![false; num_products];
    for (j, &p) in window.iter().rev().enumerate() {
        if p < num_products {
            scores[p] = scores[p] + params.lag_weights[j];
            present[p] = true;
        }
    }
    let absent = present.iter().filter(|x| !**x).count();
    if absent > 0 {
        let share = params.novel_weight / T::from_count(absent);
        for (s, _) in scores.iter_mut().zip(&present).filter(|(_, p)| !**p) {
            *s = *s + share;
        }
    }
    let total: T = scores.iter().copied().sum();
    if total > T::zero() {
        scores.iter_mut().for_each(|s| *s = *s / total);
    }
    scores
}
