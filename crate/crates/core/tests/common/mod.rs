#![allow(dead_code)]

use hawkes_adoption::model::{
    clamped_mass, Event, EventLog, IntensityState, ModelParams, UserParams,
};
use hawkes_adoption::network::Network;
use rand::Rng;

/// Random directed network without self loops; each ordered pair present with probability `p`.
pub fn random_network(rng: &mut impl Rng, users: usize, p: f64) -> Network {
    let mut edges = Vec::new();
    for s in 0..users {
        for d in 0..users {
            if s != d && rng.gen::<f64>() < p {
                edges.push((s, d));
            }
        }
    }
    Network::new(users, edges).unwrap()
}

/// Uniform event times on `[0, end)` with random users and products.
pub fn random_log(
    rng: &mut impl Rng,
    users: usize,
    products: usize,
    n: usize,
    end: f64,
) -> EventLog<f64> {
    let events = (0..n)
        .map(|_| {
            Event::new(
                rng.gen_range(0..users),
                rng.gen_range(0..products),
                rng.gen::<f64>() * end,
            )
        })
        .collect();
    EventLog::new(users, products, 0.0, end, events).unwrap()
}

pub fn random_params(
    rng: &mut impl Rng,
    users: usize,
    products: usize,
    omega: f64,
    mu: (f64, f64),
    weight: (f64, f64),
) -> ModelParams<f64> {
    let n2 = products * products;
    let users = (0..users)
        .map(|_| {
            UserParams::new(
                (0..products).map(|_| rng.gen_range(mu.0..mu.1)).collect(),
                (0..n2).map(|_| rng.gen_range(weight.0..weight.1)).collect(),
                (0..n2).map(|_| rng.gen_range(weight.0..weight.1)).collect(),
                omega,
            )
            .unwrap()
        })
        .collect();
    ModelParams::new(users).unwrap()
}

/// Same parameters for every user.
pub fn uniform_params(
    users: usize,
    mu: &[f64],
    a: &[f64],
    b: &[f64],
    omega: f64,
) -> ModelParams<f64> {
    let row = UserParams::new(mu.to_vec(), a.to_vec(), b.to_vec(), omega).unwrap();
    ModelParams::new(vec![row; users]).unwrap()
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Compensator increments between consecutive events of each `(u, p)`
/// stream under the clamped intensity. Exp(1) when the model generated the log.
pub fn rescaled_gaps(log: &EventLog<f64>, net: &Network, params: &ModelParams<f64>) -> Vec<f64> {
    let (users, products) = (log.num_users(), log.num_products());
    let omega = params.omega().unwrap();
    let mut state = IntensityState::new(users, products, omega, log.start()).unwrap();
    let mut acc = vec![0.0; users * products];
    let mut gaps = Vec::new();
    let mut now = log.start();
    let events = log.events();
    let mut i = 0;
    while i < events.len() {
        let t = events[i].time;
        let dt = t - now;
        for u in 0..users {
            let up = params.user(u);
            for p in 0..products {
                acc[u * products + p] +=
                    clamped_mass(up.mu[p], state.excitation(up, u, p), omega, dt);
            }
        }
        state.advance_to(t).unwrap();
        now = t;
        let mut j = i;
        while j < events.len() && events[j].time == t {
            let e = &events[j];
            let slot = &mut acc[e.user * products + e.product];
            gaps.push(*slot);
            *slot = 0.0;
            j += 1;
        }
        for e in &events[i..j] {
            state.register(e, net).unwrap();
        }
        i = j;
    }
    gaps
}

/// Kolmogorov-Smirnov p-value (asymptotic, with the Stephens correction)
/// for `samples` against the unit exponential.
pub fn ks_exponential_pvalue(samples: &[f64]) -> f64 {
    let mut u: Vec<f64> = samples.iter().map(|&x| 1.0 - (-x).exp()).collect();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(i, &v)| (v - i as f64 / n).max((i as f64 + 1.0) / n - v))
        .fold(0.0, f64::max);
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-2.0 * k * k * lambda * lambda).exp();
        p += if k as u64 % 2 == 1 { term } else { -term };
    }
    p.clamp(0.0, 1.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}
