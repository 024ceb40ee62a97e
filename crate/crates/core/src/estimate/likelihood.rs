use super::precompute::PrecomputedSums;
use crate::model::{clamped_mass, clamped_mass_parts, ParamRow};
use crate::scalar::Scalar;

/// How the integrated intensity enters the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Compensator {
    /// `x . psi`: the integral of the unclamped affine intensity. Linear in
    /// the parameters, but rewards inhibition that drives `lambda` below zero.
    #[default]
    Affine,
    /// Integral of `max(0, lambda)`, the intensity the process actually runs
    /// on. Convex and continuously differentiable; needs segment data.
    Exact,
}

#[inline]
fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (a, b)| acc + *a * *b)
}

/// `lambda_up(t_i)` for every event of the subproblem, unclamped.
pub fn event_intensities<T: Scalar>(row: &ParamRow<T>, sums: &PrecomputedSums<T>) -> Vec<T> {
    sums.features()
        .map(|phi| dot(row.as_slice(), phi))
        .collect()
}

/// Integrated intensity of the subproblem over its window.
pub fn compensator<T: Scalar>(row: &ParamRow<T>, sums: &PrecomputedSums<T>) -> T {
    dot(row.as_slice(), sums.compensator())
}

#[inline]
fn floored_log<T: Scalar>(lambda: T, floor: T) -> T {
    if lambda > floor {
        lambda.ln()
    } else {
        floor.ln()
    }
}

/// `sum_i log(max(lambda_i, floor)) - integral of lambda` over the window.
///
/// Events whose intensity does not exceed `floor` contribute the constant
/// `log(floor)`; a zero floor lets them contribute `-inf`.
pub fn log_likelihood<T: Scalar>(row: &ParamRow<T>, sums: &PrecomputedSums<T>, floor: T) -> T {
    let events: T = sums
        .features()
        .map(|phi| floored_log(dot(row.as_slice(), phi), floor))
        .sum();
    events - compensator(row, sums)
}

/// Gradient of [`log_likelihood`] with respect to `[mu_p, a_.p, b_.p]`.
/// Floored events contribute nothing.
pub fn log_likelihood_gradient<T: Scalar>(
    row: &ParamRow<T>,
    sums: &PrecomputedSums<T>,
    floor: T,
) -> Vec<T> {
    let mut g: Vec<T> = sums.compensator().iter().map(|c| -*c).collect();
    for phi in sums.features() {
        let lambda = dot(row.as_slice(), phi);
        if lambda > floor {
            let w = lambda.recip();
            for (gi, fi) in g.iter_mut().zip(phi) {
                *gi = *gi + w * *fi;
            }
        }
    }
    g
}

fn segments_of<T: Scalar>(sums: &PrecomputedSums<T>) -> &super::precompute::Segments<T> {
    sums.segments()
        .expect("exact compensator needs sums built with segments")
}

/// Integral of `max(0, lambda_up)` over the window; `None` without segment data.
pub fn exact_compensator<T: Scalar>(row: &ParamRow<T>, sums: &PrecomputedSums<T>) -> Option<T> {
    let segs = sums.segments()?;
    let x = row.as_slice();
    let omega = segs.omega();
    Some(
        segs.iter()
            .map(|(len, sigma)| clamped_mass(x[0], dot(&x[1..], sigma), omega, len))
            .sum(),
    )
}

/// Log-likelihood of the clamped process: event terms as in
/// [`log_likelihood`], compensator from [`exact_compensator`].
pub fn exact_log_likelihood<T: Scalar>(
    row: &ParamRow<T>,
    sums: &PrecomputedSums<T>,
    floor: T,
) -> Option<T> {
    let events: T = sums
        .features()
        .map(|phi| floored_log(dot(row.as_slice(), phi), floor))
        .sum();
    Some(events - exact_compensator(row, sums)?)
}

/// Regularized negative log-likelihood `-L(x) + beta |x|^2`.
pub fn objective<T: Scalar>(row: &ParamRow<T>, sums: &PrecomputedSums<T>, floor: T, beta: T) -> T {
    let x = row.as_slice();
    beta * dot(x, x) - log_likelihood(row, sums, floor)
}

pub fn objective_gradient<T: Scalar>(
    row: &ParamRow<T>,
    sums: &PrecomputedSums<T>,
    floor: T,
    beta: T,
) -> Vec<T> {
    let two_beta = beta + beta;
    log_likelihood_gradient(row, sums, floor)
        .into_iter()
        .zip(row.as_slice())
        .map(|(g, x)| two_beta * *x - g)
        .collect()
}

/// Objective under either compensator.
pub(crate) fn objective_with<T: Scalar>(
    kind: Compensator,
    row: &ParamRow<T>,
    sums: &PrecomputedSums<T>,
    floor: T,
    beta: T,
) -> T {
    match kind {
        Compensator::Affine => objective(row, sums, floor, beta),
        Compensator::Exact => {
            let x = row.as_slice();
            let ll = exact_log_likelihood(row, sums, floor)
                .expect("exact compensator needs sums built with segments");
            beta * dot(x, x) - ll
        }
    }
}

pub(crate) fn objective_gradient_with<T: Scalar>(
    kind: Compensator,
    row: &ParamRow<T>,
    sums: &PrecomputedSums<T>,
    floor: T,
    beta: T,
) -> Vec<T> {
    let mut g = objective_gradient(row, sums, floor, beta);
    if kind == Compensator::Exact {
        // swap the affine compensator gradient for the exact one
        for (gi, psi) in g.iter_mut().zip(sums.compensator()) {
            *gi = *gi - *psi;
        }
        let segs = segments_of(sums);
        let x = row.as_slice();
        for (len, sigma) in segs.iter() {
            let parts = clamped_mass_parts(x[0], dot(&x[1..], sigma), segs.omega(), len);
            g[0] = g[0] + parts.d_mu;
            if parts.d_c != T::zero() {
                for (gi, s) in g[1..].iter_mut().zip(sigma) {
                    *gi = *gi + parts.d_c * *s;
                }
            }
        }
    }
    g
}

pub(crate) fn objective_hessian_with<T: Scalar>(
    kind: Compensator,
    row: &ParamRow<T>,
    sums: &PrecomputedSums<T>,
    floor: T,
    beta: T,
) -> Vec<T> {
    let mut h = objective_hessian(row, sums, floor, beta);
    if kind == Compensator::Exact {
        let d = sums.dim();
        let segs = segments_of(sums);
        let x = row.as_slice();
        for (len, sigma) in segs.iter() {
            let p = clamped_mass_parts(x[0], dot(&x[1..], sigma), segs.omega(), len);
            if p.h_mu_mu == T::zero() && p.h_c_c == T::zero() {
                continue;
            }
            h[0] = h[0] + p.h_mu_mu;
            for j in 0..d - 1 {
                let v = p.h_mu_c * sigma[j];
                h[j + 1] = h[j + 1] + v;
                h[(j + 1) * d] = h[(j + 1) * d] + v;
                let wi = p.h_c_c * sigma[j];
                for k in 0..d - 1 {
                    h[(j + 1) * d + k + 1] = h[(j + 1) * d + k + 1] + wi * sigma[k];
                }
            }
        }
    }
    h
}

/// Hessian of the objective on the unfloored region, row-major.
pub(crate) fn objective_hessian<T: Scalar>(
    row: &ParamRow<T>,
    sums: &PrecomputedSums<T>,
    floor: T,
    beta: T,
) -> Vec<T> {
    let d = sums.dim();
    let mut h = vec![T::zero(); d * d];
    for phi in sums.features() {
        let lambda = dot(row.as_slice(), phi);
        if lambda > floor {
            let w = (lambda * lambda).recip();
            for i in 0..d {
                if phi[i] == T::zero() {
                    continue;
                }
                let wi = w * phi[i];
                for j in i..d {
                    h[i * d + j] = h[i * d + j] + wi * phi[j];
                }
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            h[i * d + j] = h[j * d + i];
        }
        h[i * d + i] = h[i * d + i] + beta + beta;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::precompute::{precompute_sums, precompute_user_segments, Corpus};
    use crate::model::{Event, EventLog};
    use crate::network::Network;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn poisson_sums(times: &[f64], end: f64) -> PrecomputedSums<f64> {
        let log = EventLog::new(
            1,
            1,
            0.0,
            end,
            times.iter().map(|&t| Event::new(0, 0, t)).collect(),
        )
        .unwrap();
        let net = Network::isolated(1);
        let c = Corpus::new(&log, &net).unwrap();
        precompute_sums(&c, 0, 0, 1.0).unwrap()
    }

    #[test]
    fn poisson_examples() {
        let s = poisson_sums(&[0.4], 1.0);
        let row = ParamRow::new(1.0, vec![0.0], vec![0.0]);
        assert!((log_likelihood(&row, &s, 1e-10) - -1.0).abs() < 1e-15);
        let s = poisson_sums(&[], 4.0);
        let row = ParamRow::new(0.5, vec![0.0], vec![0.0]);
        assert_eq!(log_likelihood(&row, &s, 1e-10), -2.0);
    }

    #[test]
    fn poisson_score() {
        let times: Vec<f64> = (0..7).map(|i| i as f64 * 1.3).collect();
        let s = poisson_sums(&times, 10.0);
        let row = ParamRow::new(0.5, vec![0.0], vec![0.0]);
        let g = log_likelihood_gradient(&row, &s, 1e-10);
        assert!((g[0] - (7.0 / 0.5 - 10.0)).abs() < 1e-12);
        let mle = ParamRow::new(0.7, vec![0.0], vec![0.0]);
        let g = log_likelihood_gradient(&mle, &s, 1e-10);
        assert!(g[0].abs() < 1e-12);
    }

    #[test]
    fn floored_events_are_constant() {
        let s = poisson_sums(&[0.2, 0.5], 1.0);
        let row = ParamRow::new(0.0, vec![0.0], vec![0.0]);
        let ll = log_likelihood(&row, &s, 1e-10);
        assert!((ll - 2.0 * (1e-10_f64).ln()).abs() < 1e-9);
        let g = log_likelihood_gradient(&row, &s, 1e-10);
        assert_eq!(g[0], -1.0);
        assert_eq!(log_likelihood(&row, &s, 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn gradient_and_hessian_by_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let events: Vec<Event<f64>> = (0..80)
            .map(|_| {
                Event::new(
                    rng.gen_range(0..3),
                    rng.gen_range(0..2),
                    rng.gen::<f64>() * 30.0,
                )
            })
            .collect();
        let log = EventLog::new(3, 2, 0.0, 30.0, events).unwrap();
        let net = Network::new(3, [(1, 0), (2, 0)]).unwrap();
        let c = Corpus::new(&log, &net).unwrap();
        let s = precompute_sums(&c, 0, 1, 0.9).unwrap();
        let x = ParamRow::new(0.6, vec![0.3, 0.2], vec![0.1, 0.25]);
        let beta = 0.7;
        let g = objective_gradient(&x, &s, 1e-10, beta);
        let h = objective_hessian(&x, &s, 1e-10, beta);
        let d = s.dim();
        let step = 1e-6;
        for i in 0..d {
            let mut xp = x.clone().into_vec();
            let mut xm = x.clone().into_vec();
            xp[i] += step;
            xm[i] -= step;
            let (xp, xm) = (
                ParamRow::from_vec(xp).unwrap(),
                ParamRow::from_vec(xm).unwrap(),
            );
            let fd =
                (objective(&xp, &s, 1e-10, beta) - objective(&xm, &s, 1e-10, beta)) / (2.0 * step);
            assert!((fd - g[i]).abs() <= 1e-5 * g[i].abs().max(1.0), "grad {i}");
            let gp = objective_gradient(&xp, &s, 1e-10, beta);
            let gm = objective_gradient(&xm, &s, 1e-10, beta);
            for j in 0..d {
                let fd = (gp[j] - gm[j]) / (2.0 * step);
                assert!(
                    (fd - h[i * d + j]).abs() <= 1e-4 * h[i * d + j].abs().max(1.0),
                    "hess {i},{j}"
                );
            }
        }
    }

    fn inhibited_corpus() -> (EventLog<f64>, Network) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let events: Vec<Event<f64>> = (0..60)
            .map(|_| {
                Event::new(
                    rng.gen_range(0..3),
                    rng.gen_range(0..2),
                    rng.gen::<f64>() * 20.0,
                )
            })
            .collect();
        let log = EventLog::new(3, 2, 0.0, 20.0, events).unwrap();
        (log, Network::new(3, [(1, 0), (2, 0)]).unwrap())
    }

    #[test]
    fn exact_matches_affine_without_clamping() {
        let (log, net) = inhibited_corpus();
        let c = Corpus::new(&log, &net).unwrap();
        let s = precompute_user_segments(&c, 0, 0.9, 0.0, 20.0)
            .unwrap()
            .swap_remove(1);
        let x = ParamRow::new(0.6, vec![0.3, 0.2], vec![0.1, 0.25]);
        let exact = exact_compensator(&x, &s).unwrap();
        assert!((exact - compensator(&x, &s)).abs() < 1e-10);
        assert!(exact_compensator(&x, &precompute_sums(&c, 0, 1, 0.9).unwrap()).is_none());
    }

    #[test]
    fn exact_compensator_by_quadrature() {
        let (log, net) = inhibited_corpus();
        let c = Corpus::new(&log, &net).unwrap();
        let omega = 0.9;
        let s = precompute_user_segments(&c, 0, omega, 0.0, 20.0)
            .unwrap()
            .swap_remove(1);
        let x = ParamRow::new(0.4, vec![-0.5, 0.2], vec![-0.6, 0.3]);
        let exact = exact_compensator(&x, &s).unwrap();
        let lambda = |t: f64| {
            let mut l = x.mu();
            for e in log.events().iter().filter(|e| e.time < t) {
                let k = (-omega * (t - e.time)).exp();
                if e.user == 0 {
                    l += x.a()[e.product] * k;
                } else {
                    l += x.b()[e.product] * k;
                }
            }
            l.max(0.0)
        };
        let n = 200_000;
        let h = 20.0 / n as f64;
        let quad: f64 = (0..n).map(|i| lambda((i as f64 + 0.5) * h)).sum::<f64>() * h;
        assert!(
            (exact - quad).abs() < 1e-4 * quad.max(1.0),
            "{exact} vs {quad}"
        );
    }

    #[test]
    fn exact_derivatives_by_finite_differences() {
        let (log, net) = inhibited_corpus();
        let c = Corpus::new(&log, &net).unwrap();
        let s = precompute_user_segments(&c, 0, 0.9, 0.0, 20.0)
            .unwrap()
            .swap_remove(1);
        let x = ParamRow::new(0.5, vec![-0.4, 0.2], vec![-0.7, 0.3]);
        let (beta, floor, kind) = (0.3, 1e-10, Compensator::Exact);
        let g = objective_gradient_with(kind, &x, &s, floor, beta);
        let h = objective_hessian_with(kind, &x, &s, floor, beta);
        let d = s.dim();
        let step = 1e-6;
        for i in 0..d {
            let mut xp = x.clone().into_vec();
            let mut xm = x.clone().into_vec();
            xp[i] += step;
            xm[i] -= step;
            let (xp, xm) = (
                ParamRow::from_vec(xp).unwrap(),
                ParamRow::from_vec(xm).unwrap(),
            );
            let fd = (objective_with(kind, &xp, &s, floor, beta)
                - objective_with(kind, &xm, &s, floor, beta))
                / (2.0 * step);
            assert!(
                (fd - g[i]).abs() <= 1e-5 * g[i].abs().max(1.0),
                "grad {i}: {fd} vs {}",
                g[i]
            );
            let gp = objective_gradient_with(kind, &xp, &s, floor, beta);
            let gm = objective_gradient_with(kind, &xm, &s, floor, beta);
            for j in 0..d {
                let fd = (gp[j] - gm[j]) / (2.0 * step);
                assert!(
                    (fd - h[i * d + j]).abs() <= 1e-4 * h[i * d + j].abs().max(1.0),
                    "hess {i},{j}"
                );
            }
        }
    }

    #[test]
    fn exact_empty_window() {
        let log = EventLog::new(1, 1, 0.0, 3.0, vec![]).unwrap();
        let net = Network::isolated(1);
        let c = Corpus::new(&log, &net).unwrap();
        let s = precompute_user_segments(&c, 0, 1.0, 0.0, 3.0)
            .unwrap()
            .swap_remove(0);
        let x = ParamRow::new(0.5, vec![0.2], vec![0.0]);
        assert!((exact_log_likelihood(&x, &s, 1e-10_f64).unwrap() + 1.5).abs() < 1e-14);
    }
}
