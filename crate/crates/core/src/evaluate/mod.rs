//! Evaluation measures: parameter MSE, prediction probability, held-out
//! log-likelihood, AIC, win percentages, and intervention detection.

mod detect;
mod metrics;
mod models;

pub use detect::{detect_intervention, DetectConfig, Detection, WindowScore};
pub use metrics::{aic, param_mse, prediction_probability, top1, win_percentages, Better};
pub use models::{
    avg_test_loglik, HawkesModel, PoissonModel, RecencyModel, Renewal, Scorer, UserScore,
    WeibullModel,
};
