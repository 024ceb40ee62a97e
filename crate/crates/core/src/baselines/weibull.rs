//! Weibull renewal process: hazard `k lambda^k (t - t_last)^(k-1)`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Shape `k` and rate-style scale `lambda`; survival is `exp(-(lambda x)^k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeibullParams<T> {
    pub k: T,
    pub lambda: T,
}

/// Bracket for the shape search; very regular gaps saturate at the top.
pub const SHAPE_RANGE: (f64, f64) = (1e-3, 1e3);

impl<T: Scalar> WeibullParams<T> {
    pub fn new(k: T, lambda: T) -> Result<Self> {
        if !(k > T::zero() && lambda > T::zero() && k.is_finite() && lambda.is_finite()) {
            return Err(Error::Domain(format!(
                "Weibull shape and scale must be positive, got k={k} lambda={lambda}"
            )));
        }
        Ok(WeibullParams { k, lambda })
    }

    pub fn hazard(&self, elapsed: T) -> T {
        self.k * self.lambda.powf(self.k) * elapsed.powf(self.k - T::one())
    }

    pub fn cumulative_hazard(&self, elapsed: T) -> T {
        if elapsed <= T::zero() {
            T::zero()
        } else {
            (self.lambda * elapsed).powf(self.k)
        }
    }

    /// Log-density of a set of fully observed gaps.
    pub fn gaps_log_likelihood(&self, gaps: &[T]) -> T {
        gaps.iter()
            .map(|&x| self.hazard(x).ln() - self.cumulative_hazard(x))
            .sum()
    }
}

/// Weighted sums `sum y^k` and `sum y^k ln y` computed in log space, scaled by `exp(-shift)`.
fn power_sums<T: Scalar>(log_y: &[T], k: T) -> (T, T, T) {
    let shift = log_y.iter().map(|&l| k * l).fold(T::neg_infinity(), T::max);
    let mut s0 = T::zero();
    let mut s1 = T::zero();
    for &l in log_y {
        let w = (k * l - shift).exp();
        s0 = s0 + w;
        s1 = s1 + w * l;
    }
    (s0, s1, shift)
}

/// Profile score in `k` after eliminating the scale; decreasing in `k`.
fn profile_score<T: Scalar>(log_y: &[T], k: T) -> T {
    let n = T::from_count(log_y.len());
    let (s0, s1, _) = power_sums(log_y, k);
    let sum_log: T = log_y.iter().copied().sum();
    n / k + sum_log - n * s1 / s0
}

/// Maximum-likelihood fit to positive inter-event gaps.
///
/// The scale is profiled out, `lambda^k = n / sum x^k`, and the shape solves the
/// one-dimensional score equation by bisection in `ln k`.
pub fn fit_weibull<T: Scalar>(gaps: &[T]) -> Result<WeibullParams<T>> {
    if gaps.len() < 2 {
        return Err(Error::Domain(format!(
            "Weibull fit needs at least two gaps, got {}",
            gaps.len()
        )));
    }
    if let Some(bad) = gaps.iter().find(|&&x| !(x > T::zero() && x.is_finite())) {
        return Err(Error::Domain(format!("gaps must be positive, got {bad}")));
    }
    let n = T::from_count(gaps.len());
    let mean = gaps.iter().copied().sum::<T>() / n;
    let log_y: Vec<T> = gaps.iter().map(|&x| (x / mean).ln()).collect();

    let (lo, hi) = (T::lit(SHAPE_RANGE.0), T::lit(SHAPE_RANGE.1));
    let k = if profile_score(&log_y, hi) >= T::zero() {
        hi
    } else if profile_score(&log_y, lo) <= T::zero() {
        lo
    } else {
        let (mut a, mut b) = (lo.ln(), hi.ln());
        for _ in 0..200 {
            let mid = (a + b) * T::lit(0.5);
            if profile_score(&log_y, mid.exp()) > T::zero() {
                a = mid;
            } else {
                b = mid;
            }
            if b - a < T::epsilon() * T::lit(4.0) {
                break;
            }
        }
        ((a + b) * T::lit(0.5)).exp()
    };

    let (s0, _, shift) = power_sums(&log_y, k);
    // ln(sum y^k) = ln s0 + shift; lambda = (n / sum x^k)^(1/k)
    let log_sum = s0.ln() + shift;
    let lambda = ((n.ln() - log_sum) / k).exp() / mean;
    WeibullParams::new(k, lambda)
}

/// Like [`fit_weibull`] with the shape pinned at one (exponential gaps).
pub fn fit_exponential_gaps<T: Scalar>(gaps: &[T]) -> Result<WeibullParams<T>> {
    let total: T = gaps.iter().copied().sum();
    WeibullParams::new(T::one(), T::from_count(gaps.len()) / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::poisson::poisson_log_likelihood;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exponential_gaps_give_unit_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gaps: Vec<f64> = (0..5000)
            .map(|_| -(1.0 - rng.gen::<f64>()).ln() / 2.0)
            .collect();
        let w = fit_weibull(&gaps).unwrap();
        assert!((w.k - 1.0).abs() < 0.1, "k={}", w.k);
        assert!((w.lambda - 2.0).abs() < 0.2, "lambda={}", w.lambda);
    }

    #[test]
    fn weibull_samples_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (k, lambda) = (2.5, 0.3);
        let gaps: Vec<f64> = (0..20000)
            .map(|_| (-(1.0 - rng.gen::<f64>()).ln()).powf(1.0 / k) / lambda)
            .collect();
        let w = fit_weibull(&gaps).unwrap();
        assert!((w.k - k).abs() < 0.05 * k);
        assert!((w.lambda - lambda).abs() < 0.05 * lambda);
    }

    #[test]
    fn constant_gaps_signal_regularity() {
        let w = fit_weibull(&[3.0; 20]).unwrap();
        assert!(w.k > 5.0);
        let mut jitter = vec![3.0; 20];
        jitter[4] = 3.01;
        jitter[9] = 2.99;
        assert!(fit_weibull(&jitter).unwrap().k > 5.0);
    }

    #[test]
    fn score_vanishes_at_fit() {
        let gaps = [0.2, 1.7, 0.4, 3.3, 0.9, 1.1, 0.05, 2.2];
        let w = fit_weibull(&gaps).unwrap();
        let mean = gaps.iter().sum::<f64>() / 8.0;
        let log_y: Vec<f64> = gaps.iter().map(|x| (x / mean).ln()).collect();
        assert!(profile_score(&log_y, w.k).abs() < 1e-8);
        // likelihood is maximal against nearby shapes at the profiled scale
        let best = w.gaps_log_likelihood(&gaps);
        for dk in [-0.05, 0.05] {
            let k = w.k + dk;
            let lam = (8.0 / gaps.iter().map(|x: &f64| x.powf(k)).sum::<f64>()).powf(1.0 / k);
            let other = WeibullParams::new(k, lam).unwrap();
            assert!(best >= other.gaps_log_likelihood(&gaps));
        }
    }

    #[test]
    fn unit_shape_matches_poisson() {
        let gaps = [0.5, 1.5, 0.25, 2.0, 0.75];
        let w = fit_exponential_gaps(&gaps).unwrap();
        let total: f64 = gaps.iter().sum();
        let expect = poisson_log_likelihood(5.0 / total, 5, total);
        assert!((w.gaps_log_likelihood(&gaps) - expect).abs() < 1e-12);
    }

    #[test]
    fn too_few_or_bad_gaps() {
        assert!(fit_weibull(&[1.0_f64]).is_err());
        assert!(fit_weibull(&[1.0, 0.0_f64]).is_err());
        assert!(WeibullParams::new(0.0, 1.0_f64).is_err());
    }
}
