mod common;

use common::*;
use hawkes_adoption::estimate::PrecomputedSums;
use hawkes_adoption::estimate::{
    cross_validate, exact_log_likelihood, fit_all, precompute_user_segments, precompute_user_sums,
    Compensator, Corpus, FitConfig,
};
use hawkes_adoption::model::ParamRow;
use hawkes_adoption::simulate::{simulate, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn precompute_matches_quadratic_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (users, products, omega) = (6, 3, 0.7);
    let log = random_log(&mut rng, users, products, 500, 50.0);
    let net = random_network(&mut rng, users, 0.4);
    let corpus = Corpus::new(&log, &net).unwrap();
    let (start, end) = (10.0_f64, 50.0);
    let kernel = |dt: f64| (-omega * dt).exp();
    let window_mass = |t: f64| {
        let from = start.max(t);
        ((-omega * (from - t)).exp() - (-omega * (end - t)).exp()) / omega
    };
    for u in 0..users {
        let sums = precompute_user_sums(&corpus, u, omega, start, end).unwrap();
        for (p, s) in sums.iter().enumerate() {
            let targets: Vec<f64> = log
                .events()
                .iter()
                .filter(|e| e.user == u && e.product == p && e.time >= start && e.time < end)
                .map(|e| e.time)
                .collect();
            assert_eq!(s.num_events(), targets.len());
            for (i, &t) in targets.iter().enumerate() {
                let mut own = vec![0.0; products];
                let mut exposed = vec![0.0; products];
                for e in log.events().iter().filter(|e| e.time < t) {
                    if e.user == u {
                        own[e.product] += kernel(t - e.time);
                    } else if net.contains(e.user, u) {
                        exposed[e.product] += kernel(t - e.time);
                    }
                }
                for l in 0..products {
                    assert!(close(s.k_own(i)[l], own[l], 1e-9), "own u{u} p{p} i{i}");
                    assert!(
                        close(s.k_exposed(i)[l], exposed[l], 1e-9),
                        "exposed u{u} p{p} i{i}"
                    );
                }
            }
            let mut g_own = vec![0.0; products];
            let mut g_exposed = vec![0.0; products];
            for e in log.events().iter().filter(|e| e.time < end) {
                if e.user == u {
                    g_own[e.product] += window_mass(e.time);
                } else if net.contains(e.user, u) {
                    g_exposed[e.product] += window_mass(e.time);
                }
            }
            assert!(close(s.window_length(), end - start, 1e-12));
            for l in 0..products {
                assert!(close(s.g_own()[l], g_own[l], 1e-9));
                assert!(close(s.g_exposed()[l], g_exposed[l], 1e-9));
            }
        }
    }
}

#[test]
fn exact_fit_minimizes_the_clamped_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let net = random_network(&mut rng, 8, 0.3);
    let truth = random_params(&mut rng, 8, 2, 1.0, (0.2, 0.6), (-0.5, 0.3));
    let log = simulate(
        &net,
        &truth,
        &SimConfig::new(0.0, 200.0, 3).with_max_events(20_000),
    )
    .unwrap()
    .log;
    let corpus = Corpus::new(&log, &net).unwrap();
    let affine = fit_all(&corpus, &FitConfig::default(), 1.0).unwrap();
    let exact_cfg = FitConfig {
        compensator: Compensator::Exact,
        ..FitConfig::default()
    };
    let exact = fit_all(&corpus, &exact_cfg, 1.0).unwrap();
    let objective = |row: &ParamRow<f64>, s: &PrecomputedSums<f64>| {
        let penalty: f64 = row.as_slice().iter().map(|x| x * x).sum();
        -exact_log_likelihood(row, s, 1e-10).unwrap() + 10.0 * penalty
    };
    let mut strictly_better = 0;
    for u in 0..8 {
        let sums = precompute_user_segments(&corpus, u, 1.0, 0.0, 200.0).unwrap();
        for (p, s) in sums.iter().enumerate() {
            let (fa, fe) = (
                objective(&affine.params.user(u).row(p), s),
                objective(&exact.params.user(u).row(p), s),
            );
            assert!(
                fe <= fa + 1e-6 * fa.abs().max(1.0),
                "u{u} p{p}: {fe} > {fa}"
            );
            if fe < fa - 1e-6 {
                strictly_better += 1;
            }
        }
    }
    assert!(strictly_better > 0);
}

#[test]
fn cross_validation_recovers_kernel_rate() {
    let replicas = 20;
    let mut hits = 0;
    for r in 0..replicas {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + r);
        let net = random_network(&mut rng, 10, 0.3);
        let truth = uniform_params(
            10,
            &[0.3, 0.2],
            &[0.4, 0.1, 0.1, 0.3],
            &[0.1, 0.0, 0.0, 0.1],
            1.0,
        );
        let log = simulate(
            &net,
            &truth,
            &SimConfig::new(0.0, 400.0, r).with_max_events(50_000),
        )
        .unwrap()
        .log;
        let corpus = Corpus::new(&log, &net).unwrap();
        let cfg = FitConfig {
            omega_grid: vec![0.1, 1.0, 10.0],
            ..FitConfig::default()
        };
        let cv = cross_validate(&corpus, &cfg).unwrap();
        if cv.best_omega == 1.0 {
            hits += 1;
        }
    }
    assert!(
        hits * 100 >= 80 * replicas,
        "selected the true rate in {hits}/{replicas} replicas"
    );
}
