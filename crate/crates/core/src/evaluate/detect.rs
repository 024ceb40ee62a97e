use rayon::prelude::*;

use super::models::{avg_test_loglik, Scorer};
use crate::error::{Error, Result};
use crate::model::EventLog;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectConfig<T> {
    pub window_length: T,
    /// Drop below the running median, in nats per event, that raises a flag.
    pub drop_threshold: T,
    /// Scored windows required before any flag can be raised.
    pub min_history: usize,
}

impl<T: Scalar> DetectConfig<T> {
    pub fn new(window_length: T) -> Self {
        DetectConfig {
            window_length,
            drop_threshold: T::one(),
            min_history: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowScore<T> {
    pub start: T,
    pub end: T,
    pub events: usize,
    /// Event-weighted average log-likelihood over all users; absent for an empty window.
    pub value: Option<T>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection<T> {
    pub windows: Vec<WindowScore<T>>,
    /// Start of each window that opens a run of flagged windows.
    pub changes: Vec<T>,
}

fn median<T: Scalar>(sorted: &[T]) -> T {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) * T::lit(0.5)
    }
}

/// Scores consecutive windows of `log` from `start` on and flags those whose
/// average per-event log-likelihood falls more than `drop_threshold` below the
/// median of all earlier scored windows. Only complete windows are scored;
/// a log shorter than one window yields no windows.
pub fn detect_intervention<T: Scalar>(
    model: &dyn Scorer<T>,
    log: &EventLog<T>,
    start: T,
    cfg: &DetectConfig<T>,
) -> Result<Detection<T>> {
    if !(cfg.window_length > T::zero() && cfg.window_length.is_finite()) {
        return Err(Error::Domain(format!(
            "window length must be positive, got {}",
            cfg.window_length
        )));
    }
    if !(start >= log.start()) {
        return Err(Error::Domain(format!(
            "detection start {start} precedes the log start {}",
            log.start()
        )));
    }
    let mut bounds = Vec::new();
    let mut k = 0usize;
    loop {
        let a = start + T::from_count(k) * cfg.window_length;
        let b = start + T::from_count(k + 1) * cfg.window_length;
        if b > log.end() {
            break;
        }
        bounds.push((a, b));
        k += 1;
    }
    let scored: Vec<(usize, Option<T>)> = bounds
        .par_iter()
        .map(|&(a, b)| {
            let scores = model.score(log, a, b)?;
            Ok((
                scores.iter().map(|s| s.events).sum(),
                avg_test_loglik(&scores),
            ))
        })
        .collect::<Result<_>>()?;

    let mut history: Vec<T> = Vec::new();
    let mut windows = Vec::with_capacity(bounds.len());
    let mut changes = Vec::new();
    let mut previous_flagged = false;
    for (&(a, b), (events, value)) in bounds.iter().zip(scored) {
        let mut flagged = false;
        if let Some(v) = value {
            if history.len() >= cfg.min_history {
                flagged = v < median(&history) - cfg.drop_threshold;
            }
            let at = history.partition_point(|&h| h < v);
            history.insert(at, v);
        }
        if flagged && !previous_flagged {
            changes.push(a);
        }
        previous_flagged = flagged;
        windows.push(WindowScore {
            start: a,
            end: b,
            events,
            value,
            flagged,
        });
    }
    Ok(Detection { windows, changes })
}
