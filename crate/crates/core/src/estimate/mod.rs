//! Regularized maximum-likelihood estimation, decomposed into one convex
//! problem per `(user, product)`.

mod cv;
mod fit;
mod likelihood;
mod linalg;
mod precompute;
mod solver;

pub use cv::{cross_validate, CrossValidation, GridScore, VALIDATION_FRACTION};
pub use fit::{fit_all, fit_base_rate_only, fit_subproblem, fit_sums, FitConfig, FitResult};
pub use likelihood::{
    compensator, event_intensities, exact_compensator, exact_log_likelihood, log_likelihood,
    log_likelihood_gradient, objective, objective_gradient, Compensator,
};
pub use precompute::{
    precompute_sums, precompute_user_segments, precompute_user_sums, Corpus, PrecomputedSums,
    Segments,
};
pub use solver::{default_start, minimize, Solution, SolverOptions};
