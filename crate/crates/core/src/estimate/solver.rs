//! Projected Newton method for one `(u, p)` subproblem:
//!
//! minimize `-L(x) + beta |x|^2` subject to `mu_p >= 0`.
//!
//! Iterates stay inside the region where every event intensity exceeds the
//! floor, where the objective is smooth and convex. A start point outside it
//! is pulled toward the default start until it is inside.

use super::likelihood::{
    event_intensities, objective_gradient_with, objective_hessian_with, objective_with, Compensator,
};
use super::linalg::cholesky_solve;
use super::precompute::PrecomputedSums;
use crate::model::ParamRow;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    pub beta: T,
    pub floor: T,
    pub max_iterations: usize,
    /// Target Euclidean norm of the projected gradient.
    pub tolerance: T,
    pub compensator: Compensator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub row: ParamRow<T>,
    pub objective: T,
    pub iterations: usize,
    pub converged: bool,
    pub projected_gradient_norm: T,
}

fn in_domain<T: Scalar>(x: &ParamRow<T>, sums: &PrecomputedSums<T>, floor: T) -> bool {
    x.mu() >= T::zero() && event_intensities(x, sums).iter().all(|&l| l > floor)
}

fn project<T: Scalar>(mut x: Vec<T>) -> ParamRow<T> {
    if x[0] < T::zero() {
        x[0] = T::zero();
    }
    ParamRow::from_vec(x).expect("odd-length row")
}

/// The canonical start: Poisson rate for `mu`, zero interactions.
pub fn default_start<T: Scalar>(sums: &PrecomputedSums<T>) -> ParamRow<T> {
    let mut x = vec![T::zero(); sums.dim()];
    if sums.num_events() > 0 {
        x[0] = T::from_count(sums.num_events()) / sums.window_length();
    }
    ParamRow::from_vec(x).expect("odd-length row")
}

fn projected_gradient_norm<T: Scalar>(x: &[T], g: &[T], free: &[bool]) -> T {
    let mut s = T::zero();
    for i in 0..x.len() {
        if !free[i] {
            continue;
        }
        let gi = if i == 0 && x[0] <= T::zero() {
            g[0].min(T::zero())
        } else {
            g[i]
        };
        s = s + gi * gi;
    }
    s.sqrt()
}

/// Minimizes the subproblem over the coordinates marked `free`; the others
/// stay at their starting values.
pub fn minimize<T: Scalar>(
    sums: &PrecomputedSums<T>,
    opts: &SolverOptions<T>,
    init: Option<&ParamRow<T>>,
    free: &[bool],
) -> Solution<T> {
    let d = sums.dim();
    assert_eq!(free.len(), d, "mask length must match subproblem dimension");
    let floor = opts.floor;
    let beta = opts.beta;
    let kind = opts.compensator;
    let objective =
        |x: &ParamRow<T>, s: &PrecomputedSums<T>, fl: T, b: T| objective_with(kind, x, s, fl, b);
    let objective_gradient = |x: &ParamRow<T>, s: &PrecomputedSums<T>, fl: T, b: T| {
        objective_gradient_with(kind, x, s, fl, b)
    };
    let objective_hessian = |x: &ParamRow<T>, s: &PrecomputedSums<T>, fl: T, b: T| {
        objective_hessian_with(kind, x, s, fl, b)
    };

    let base = default_start(sums);
    let mut x = match init {
        None => base.clone(),
        Some(init) => {
            let mut start: Vec<T> = base
                .as_slice()
                .iter()
                .zip(init.as_slice())
                .zip(free)
                .map(|((b, i), f)| if *f { *b } else { *i })
                .collect();
            let target = project(init.as_slice().to_vec());
            let mut theta = T::one();
            let half = T::lit(0.5);
            for _ in 0..60 {
                let cand: Vec<T> = start
                    .iter()
                    .zip(target.as_slice())
                    .map(|(s, t)| *s + theta * (*t - *s))
                    .collect();
                let cand = project(cand);
                if in_domain(&cand, sums, floor) {
                    start = cand.into_vec();
                    break;
                }
                theta = theta * half;
            }
            project(start)
        }
    };

    let mut f = objective(&x, sums, floor, beta);
    let mut g = objective_gradient(&x, sums, floor, beta);
    let mut pg = projected_gradient_norm(x.as_slice(), &g, free);
    let mut iterations = 0;
    let armijo = T::lit(1e-4);
    let half = T::lit(0.5);
    let unbounded = T::lit(-1e30);

    while iterations < opts.max_iterations && pg > opts.tolerance {
        if !(f > unbounded) {
            break;
        }
        iterations += 1;
        let xs = x.as_slice().to_vec();
        let active: Vec<usize> = (0..d)
            .filter(|&i| free[i] && !(i == 0 && xs[0] <= T::zero() && g[0] > T::zero()))
            .collect();
        if active.is_empty() {
            break;
        }

        let h = objective_hessian(&x, sums, floor, beta);
        let k = active.len();
        let mut hk = vec![T::zero(); k * k];
        for (a, &i) in active.iter().enumerate() {
            for (b, &j) in active.iter().enumerate() {
                hk[a * k + b] = h[i * d + j];
            }
        }
        let rhs: Vec<T> = active.iter().map(|&i| -g[i]).collect();
        let max_diag = (0..k).map(|a| hk[a * k + a].abs()).fold(T::zero(), T::max);
        let mut newton = cholesky_solve(&hk, &rhs);
        let mut damping = T::lit(1e-10) * max_diag.max(T::one());
        while newton.is_none() && damping < T::lit(1e10) * max_diag.max(T::one()) {
            let mut damped = hk.clone();
            for a in 0..k {
                damped[a * k + a] = damped[a * k + a] + damping;
            }
            newton = cholesky_solve(&damped, &rhs);
            damping = damping * T::lit(10.0);
        }

        let mut directions = Vec::with_capacity(2);
        if let Some(step) = newton {
            directions.push((step, T::one()));
        }
        let gnorm = rhs.iter().fold(T::zero(), |s, v| s + *v * *v).sqrt();
        directions.push((rhs.clone(), T::one() / gnorm.max(T::one())));

        let mut moved = false;
        for (dir, alpha0) in directions {
            let mut alpha = alpha0;
            for _ in 0..80 {
                let mut cand = xs.to_vec();
                for (a, &i) in active.iter().enumerate() {
                    cand[i] = cand[i] + alpha * dir[a];
                }
                let cand = project(cand);
                if in_domain(&cand, sums, floor) {
                    let fc = objective(&cand, sums, floor, beta);
                    let decrease: T = (0..d)
                        .map(|i| g[i] * (cand.as_slice()[i] - xs[i]))
                        .fold(T::zero(), |s, v| s + v);
                    if fc <= f + armijo * decrease && fc <= f {
                        moved = cand != x;
                        x = cand;
                        f = fc;
                        break;
                    }
                }
                alpha = alpha * half;
            }
            if moved {
                break;
            }
        }
        g = objective_gradient(&x, sums, floor, beta);
        pg = projected_gradient_norm(x.as_slice(), &g, free);
        if !moved {
            break;
        }
    }

    Solution {
        converged: pg <= opts.tolerance && f.is_finite(),
        row: x,
        objective: f,
        iterations,
        projected_gradient_norm: pg,
    }
}
