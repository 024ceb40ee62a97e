use super::events::EventLog;
use super::kernel::decay;
use super::params::UserParams;
use crate::error::{check_index, Result};
use crate::network::Network;
use crate::scalar::Scalar;

/// Direct evaluation of `lambda_up(t)` by summing the kernel over the full history.
///
/// The result is not clamped and may be negative when inhibition dominates.
pub fn intensity_naive<T: Scalar>(
    params: &UserParams<T>,
    log: &EventLog<T>,
    net: &Network,
    u: usize,
    p: usize,
    t: T,
) -> Result<T> {
    check_index("user", u, log.num_users().min(net.num_users()))?;
    check_index("product", p, params.num_products())?;
    let omega = params.omega;
    let mut lambda = params.mu[p];
    for e in log.user_history(u, t) {
        lambda = lambda + params.a(e.product, p) * decay(omega, t - e.time);
    }
    for &v in net.observed(u) {
        for e in log.user_history(v, t) {
            lambda = lambda + params.b(e.product, p) * decay(omega, t - e.time);
        }
    }
    Ok(lambda)
}
