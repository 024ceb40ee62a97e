use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::Scalar;

/// Mean squared difference over every `mu`, `A` and `B` entry of every user.
pub fn param_mse<T: Scalar>(truth: &ModelParams<T>, est: &ModelParams<T>) -> Result<T> {
    if truth.num_users() != est.num_users() || truth.num_products() != est.num_products() {
        return Err(Error::Shape(format!(
            "parameter tables differ: {}x{} vs {}x{}",
            truth.num_users(),
            truth.num_products(),
            est.num_users(),
            est.num_products()
        )));
    }
    let mut sum = T::zero();
    let mut count = 0usize;
    for (x, y) in truth.users().iter().zip(est.users()) {
        for (a, b) in x.entries().zip(y.entries()) {
            sum = sum + (a - b) * (a - b);
            count += 1;
        }
    }
    if count == 0 {
        return Ok(T::zero());
    }
    Ok(sum / T::from_count(count))
}

/// `2 N_p - 2 L`, where `L` is the average training log-likelihood per event
/// (not the total, unlike the textbook definition).
pub fn aic<T: Scalar>(num_params: usize, avg_loglik: T) -> T {
    T::lit(2.0) * T::from_count(num_params) - T::lit(2.0) * avg_loglik
}

/// Index of the largest score; ties go to the lowest index, NaNs never win.
pub fn top1<T: Scalar>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] || scores[best].is_nan() && !s.is_nan() {
            best = i;
        }
    }
    best
}

/// Fraction of events whose top-ranked product is the true one.
/// `None` without events.
pub fn prediction_probability<'a, T: Scalar + 'a>(
    ranked: impl IntoIterator<Item = (&'a [T], usize)>,
) -> Option<T> {
    let (mut hits, mut total) = (0usize, 0usize);
    for (scores, truth) in ranked {
        total += 1;
        if top1(scores) == truth {
            hits += 1;
        }
    }
    (total > 0).then(|| T::from_count(hits) / T::from_count(total))
}

/// Whether a larger metric value is better (likelihoods) or worse (AIC).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Better {
    Higher,
    Lower,
}

/// Percentage of users for which each model attains the best value.
///
/// `table[user][model]`; absent entries never win, and users with no values
/// at all are left out. Every tied model is credited, so columns can sum to
/// more than 100.
pub fn win_percentages<T: Scalar>(table: &[Vec<Option<T>>], better: Better) -> Vec<T> {
    let models = table.iter().map(Vec::len).max().unwrap_or(0);
    let mut wins = vec![0usize; models];
    let mut users = 0usize;
    for row in table {
        let best = row
            .iter()
            .flatten()
            .copied()
            .fold(None, |acc: Option<T>, v| match acc {
                None => Some(v),
                Some(b) => Some(match better {
                    Better::Higher => b.max(v),
                    Better::Lower => b.min(v),
                }),
            });
        let Some(best) = best else { continue };
        users += 1;
        for (m, v) in row.iter().enumerate() {
            if *v == Some(best) {
                wins[m] += 1;
            }
        }
    }
    wins.iter()
        .map(|&w| {
            if users == 0 {
                T::zero()
            } else {
                T::lit(100.0) * T::from_count(w) / T::from_count(users)
            }
        })
        .collect()
}
