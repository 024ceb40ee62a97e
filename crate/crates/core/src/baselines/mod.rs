//! Comparison models: homogeneous Poisson, Weibull renewal, and Recency.

mod poisson;
mod recency;
mod weibull;

pub use poisson::{fit_poisson, poisson_log_likelihood};
pub use recency::{fit_recency, predict_recency, RecencyParams, DEFAULT_MEMORY};
pub use weibull::{fit_exponential_gaps, fit_weibull, WeibullParams, SHAPE_RANGE};
