use rayon::prelude::*;

use super::likelihood::Compensator;
use super::precompute::{precompute_user_segments, precompute_user_sums, Corpus, PrecomputedSums};
use super::solver::{minimize, Solution, SolverOptions};
use crate::error::{Error, Result};
use crate::model::{ModelParams, ParamRow, UserParams};
use crate::scalar::Scalar;

/// Estimation settings. `beta` is used by direct fits; the grids drive cross-validation.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig<T> {
    pub beta: T,
    pub beta_grid: Vec<T>,
    pub omega_grid: Vec<T>,
    /// Event intensities at or below this value contribute `log(floor)`.
    pub intensity_floor: T,
    pub max_iterations: usize,
    pub tolerance: T,
    pub compensator: Compensator,
}

impl<T: Scalar> Default for FitConfig<T> {
    fn default() -> Self {
        FitConfig {
            beta: T::lit(10.0),
            beta_grid: [0.1, 1.0, 10.0, 100.0].map(T::lit).to_vec(),
            omega_grid: [0.1, 0.5, 1.0, 2.0, 5.0, 10.0].map(T::lit).to_vec(),
            intensity_floor: T::lit(1e-10),
            max_iterations: 200,
            tolerance: T::lit(1e-7),
            compensator: Compensator::Affine,
        }
    }
}

impl<T: Scalar> FitConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.beta_grid.is_empty() || self.omega_grid.is_empty() {
            return Err(Error::Domain(
                "cross-validation grids must be non-empty".into(),
            ));
        }
        if self
            .beta_grid
            .iter()
            .chain(std::iter::once(&self.beta))
            .any(|b| !(*b >= T::zero() && b.is_finite()))
        {
            return Err(Error::Domain(
                "regularization weights must be finite and >= 0".into(),
            ));
        }
        if self
            .omega_grid
            .iter()
            .any(|w| !(*w > T::zero() && w.is_finite()))
        {
            return Err(Error::Domain(
                "kernel decay candidates must be positive".into(),
            ));
        }
        if !(self.intensity_floor > T::zero()) || !(self.tolerance > T::zero()) {
            return Err(Error::Domain(
                "intensity floor and tolerance must be positive".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::Domain("max_iterations must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn solver(&self, beta: T) -> SolverOptions<T> {
        SolverOptions {
            beta,
            floor: self.intensity_floor,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            compensator: self.compensator,
        }
    }

    /// Kernel sums for every product of `u`, with segments when the exact
    /// compensator needs them.
    pub(crate) fn sums(
        &self,
        corpus: &Corpus<'_, T>,
        u: usize,
        omega: T,
        start: T,
        end: T,
    ) -> Result<Vec<PrecomputedSums<T>>> {
        match self.compensator {
            Compensator::Affine => precompute_user_sums(corpus, u, omega, start, end),
            Compensator::Exact => precompute_user_segments(corpus, u, omega, start, end),
        }
    }
}

/// Fits all of `[mu_p, a_.p, b_.p]` for precomputed sums.
pub fn fit_sums<T: Scalar>(sums: &PrecomputedSums<T>, cfg: &FitConfig<T>, beta: T) -> Solution<T> {
    minimize(sums, &cfg.solver(beta), None, &vec![true; sums.dim()])
}

/// Fits only `mu_p` with the interaction weights held at zero.
pub fn fit_base_rate_only<T: Scalar>(
    sums: &PrecomputedSums<T>,
    cfg: &FitConfig<T>,
    beta: T,
) -> Solution<T> {
    let mut free = vec![false; sums.dim()];
    free[0] = true;
    let zero = ParamRow::zeros(sums.num_products());
    minimize(sums, &cfg.solver(beta), Some(&zero), &free)
}

/// Regularized MLE for the `(u, p)` subproblem at fixed `omega`, using `cfg.beta`.
pub fn fit_subproblem<T: Scalar>(
    corpus: &Corpus<'_, T>,
    u: usize,
    p: usize,
    cfg: &FitConfig<T>,
    omega: T,
) -> Result<Solution<T>> {
    cfg.validate()?;
    crate::error::check_index("product", p, corpus.num_products())?;
    let mut sums = cfg.sums(corpus, u, omega, corpus.log.start(), corpus.log.end())?;
    Ok(fit_sums(&sums.swap_remove(p), cfg, cfg.beta))
}

#[derive(Debug, Clone)]
pub struct FitResult<T> {
    pub params: ModelParams<T>,
    /// Per user, per product solver outcome.
    pub solutions: Vec<Vec<Solution<T>>>,
}

impl<T: Scalar> FitResult<T> {
    /// `(user, product)` pairs whose solver stopped before reaching tolerance.
    pub fn unconverged(&self) -> Vec<(usize, usize)> {
        self.solutions
            .iter()
            .enumerate()
            .flat_map(|(u, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, s)| !s.converged)
                    .map(move |(p, _)| (u, p))
            })
            .collect()
    }

    pub fn total_objective(&self) -> T {
        self.solutions.iter().flatten().map(|s| s.objective).sum()
    }
}

fn assemble<T: Scalar>(
    num_products: usize,
    omega: T,
    solutions: Vec<Vec<Solution<T>>>,
) -> Result<FitResult<T>> {
    let users = solutions
        .iter()
        .map(|row| {
            let mut up = UserParams::zeros(num_products, omega);
            for (p, s) in row.iter().enumerate() {
                up.set_row(p, &s.row);
            }
            up
        })
        .collect();
    Ok(FitResult {
        params: ModelParams::new(users)?,
        solutions,
    })
}

/// Solves every `(u, p)` subproblem over the log's window at fixed `omega`.
///
/// Runs on the current rayon pool; results do not depend on scheduling.
pub fn fit_all<T: Scalar>(
    corpus: &Corpus<'_, T>,
    cfg: &FitConfig<T>,
    omega: T,
) -> Result<FitResult<T>> {
    cfg.validate()?;
    let (start, end) = (corpus.log.start(), corpus.log.end());
    let solutions = (0..corpus.num_users())
        .into_par_iter()
        .map(|u| {
            let sums = cfg.sums(corpus, u, omega, start, end)?;
            Ok(sums.iter().map(|s| fit_sums(s, cfg, cfg.beta)).collect())
        })
        .collect::<Result<Vec<Vec<Solution<T>>>>>()?;
    let result = assemble(corpus.num_products(), omega, solutions)?;
    let bad = result.unconverged().len();
    if bad > 0 {
        log::warn!("{bad} subproblems stopped before reaching tolerance");
    }
    Ok(result)
}
