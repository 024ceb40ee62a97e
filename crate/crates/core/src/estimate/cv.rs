use rayon::prelude::*;

use super::fit::{fit_all, fit_sums, FitConfig, FitResult};
use super::likelihood::exact_log_likelihood;
use super::precompute::{precompute_user_segments, Corpus};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Share of the training window held out (its final part) for validation.
pub const VALIDATION_FRACTION: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct GridScore<T> {
    pub beta: T,
    pub omega: T,
    pub validation_loglik: T,
}

#[derive(Debug, Clone)]
pub struct CrossValidation<T> {
    pub best_beta: T,
    pub best_omega: T,
    /// Refit on the full training window with the selected pair.
    pub fit: FitResult<T>,
    /// Every grid point in evaluation order (omega outer, beta inner).
    pub scores: Vec<GridScore<T>>,
    /// Users with no events in the validation part; they are scored by the
    /// compensator term alone.
    pub users_without_validation_events: usize,
}

/// Chooses `(beta, omega)` by total validation log-likelihood on the last 20%
/// of the training window, then refits on all of it. Ties keep the first grid point.
pub fn cross_validate<T: Scalar>(
    corpus: &Corpus<'_, T>,
    cfg: &FitConfig<T>,
) -> Result<CrossValidation<T>> {
    cfg.validate()?;
    let log = corpus.log;
    let (start, end) = (log.start(), log.end());
    let split = start + (end - start) * (T::one() - T::lit(VALIDATION_FRACTION));
    if !(split > start && split < end) {
        return Err(Error::Domain("training window too short to split".into()));
    }

    let users_without_validation_events = (0..corpus.num_users())
        .filter(|&u| !log.user_events(u).any(|e| e.time >= split))
        .count();
    if users_without_validation_events > 0 {
        log::info!(
            "{users_without_validation_events} users have no validation events; compensator-only score"
        );
    }

    let mut scores = Vec::with_capacity(cfg.omega_grid.len() * cfg.beta_grid.len());
    for &omega in &cfg.omega_grid {
        let per_user: Vec<Vec<T>> = (0..corpus.num_users())
            .into_par_iter()
            .map(|u| {
                let train = cfg.sums(corpus, u, omega, start, split)?;
                let valid = precompute_user_segments(corpus, u, omega, split, end)?;
                Ok(cfg
                    .beta_grid
                    .iter()
                    .map(|&beta| {
                        train
                            .iter()
                            .zip(&valid)
                            .map(|(tr, va)| {
                                let sol = fit_sums(tr, cfg, beta);
                                exact_log_likelihood(&sol.row, va, cfg.intensity_floor)
                                    .expect("validation sums carry segments")
                            })
                            .sum()
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        for (k, &beta) in cfg.beta_grid.iter().enumerate() {
            scores.push(GridScore {
                beta,
                omega,
                validation_loglik: per_user.iter().map(|row| row[k]).sum(),
            });
        }
    }

    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.validation_loglik > scores[best].validation_loglik {
            best = i;
        }
    }
    let (best_beta, best_omega) = (scores[best].beta, scores[best].omega);
    let refit_cfg = FitConfig {
        beta: best_beta,
        ..cfg.clone()
    };
    let fit = fit_all(corpus, &refit_cfg, best_omega)?;
    Ok(CrossValidation {
        best_beta,
        best_omega,
        fit,
        scores,
        users_without_validation_events,
    })
}
