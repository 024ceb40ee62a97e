//! Random ground-truth parameters for synthetic recovery experiments.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ModelParams, UserParams};
use crate::scalar::Scalar;

/// Draws per-user parameters: `a_pp, b_pp ~ U(0, 1)`, off-diagonal
/// `a_lp, b_lp ~ U(-1, 1)`, and `mu_p ~ U(0, 1)` for a randomly chosen
/// `baseline_fraction` of users (zero for everyone else).
pub fn draw_params<T: Scalar>(
    num_users: usize,
    num_products: usize,
    omega: T,
    baseline_fraction: f64,
    seed: u64,
) -> Result<ModelParams<T>> {
    if !(0.0..=1.0).contains(&baseline_fraction) {
        return Err(Error::Domain(format!(
            "baseline fraction must lie in [0, 1], got {baseline_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut users = Vec::with_capacity(num_users);
    for _ in 0..num_users {
        let mut up = UserParams::zeros(num_products, omega);
        for l in 0..num_products {
            for p in 0..num_products {
                let (a, b) = if l == p {
                    (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))
                } else {
                    (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                };
                up.a[l * num_products + p] = T::lit(a);
                up.b[l * num_products + p] = T::lit(b);
            }
        }
        users.push(up);
    }
    let active = (baseline_fraction * num_users as f64).round() as usize;
    let mut order: Vec<usize> = (0..num_users).collect();
    order.shuffle(&mut rng);
    for &u in &order[..active] {
        for p in 0..num_products {
            // open interval so every active user has a positive rate
            users[u].mu[p] = T::lit(1.0 - rng.gen::<f64>());
        }
    }
    ModelParams::new(users)
}
