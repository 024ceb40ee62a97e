//! Competing-products Hawkes model of adoption and recurrent use on a social
//! network.
//!
//! Each user `u` uses product `p` with intensity
//!
//! ```text
//! lambda_up(t) = mu_p + sum_l a_lp sum_{own uses of l} g(t - t_i)
//!                     + sum_l b_lp sum_{neighbors' uses of l} g(t - t_j)
//! ```
//!
//! with `g(t) = exp(-omega t)`. Negative `a`/`b` entries model inhibition;
//! the process runs on `max(0, lambda_up)`.
//!
//! Numerics are generic over [`Scalar`] (`f32`/`f64`); the aliases below fix
//! the common instantiations. File formats in [`io`] are double precision.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod estimate;
pub mod evaluate;
pub mod io;
pub mod model;
pub mod network;
pub mod scalar;
pub mod simulate;
pub mod synthetic;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Event64 = model::Event<f64>;
pub type EventLog64 = model::EventLog<f64>;
pub type UserParams64 = model::UserParams<f64>;
pub type ModelParams64 = model::ModelParams<f64>;
pub type IntensityState64 = model::IntensityState<f64>;
pub type SimConfig64 = simulate::SimConfig<f64>;
pub type FitConfig64 = estimate::FitConfig<f64>;
pub type PrecomputedSums64 = estimate::PrecomputedSums<f64>;

pub type Event32 = model::Event<f32>;
pub type EventLog32 = model::EventLog<f32>;
pub type UserParams32 = model::UserParams<f32>;
pub type ModelParams32 = model::ModelParams<f32>;
pub type IntensityState32 = model::IntensityState<f32>;
pub type SimConfig32 = simulate::SimConfig<f32>;
pub type FitConfig32 = estimate::FitConfig<f32>;
pub type PrecomputedSums32 = estimate::PrecomputedSums<f32>;
