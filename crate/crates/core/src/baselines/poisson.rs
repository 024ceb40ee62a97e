use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// MLE of a homogeneous rate: `count / (end - start)`.
pub fn fit_poisson<T: Scalar>(count: usize, start: T, end: T) -> Result<T> {
    if !(end > start) {
        return Err(Error::Domain(format!(
            "window must have positive length, got [{start}, {end})"
        )));
    }
    Ok(T::from_count(count) / (end - start))
}

/// `count * ln(rate) - rate * length`; a zero rate with events is `-inf`.
pub fn poisson_log_likelihood<T: Scalar>(rate: T, count: usize, length: T) -> T {
    if count == 0 {
        return -rate * length;
    }
    T::from_count(count) * rate.ln() - rate * length
}
