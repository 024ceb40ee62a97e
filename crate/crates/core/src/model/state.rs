use super::events::Event;
use super::kernel::decay;
use super::params::UserParams;
use crate::error::{check_index, Error, Result};
use crate::network::{exposed_at, FirstEdgeTimes, Network};
use crate::scalar::Scalar;

/// Decaying kernel sums per `(user, product)`:
///
/// * `own(u, l)     = sum over H_ul(t)            of exp(-omega (t - t_i))`
/// * `exposed(u, l) = sum over H_vl(t), v in N(u), of exp(-omega (t - t_i))`
///
/// so that `lambda_up = mu_p + sum_l a_lp own(u, l) + sum_l b_lp exposed(u, l)`.
///
/// Decay is applied lazily: each user row carries the time its stored values
/// refer to, so advancing the clock is O(1) and registering an event touches
/// only the poster and the poster's observers.
#[derive(Debug, Clone)]
pub struct IntensityState<T> {
    omega: T,
    num_users: usize,
    num_products: usize,
    now: T,
    stamp: Vec<T>,
    own: Vec<T>,
    exposed: Vec<T>,
    rows_rewritten: u64,
}

impl<T: Scalar> IntensityState<T> {
    pub fn new(num_users: usize, num_products: usize, omega: T, start: T) -> Result<Self> {
        if !(omega > T::zero() && omega.is_finite()) {
            return Err(Error::Domain(format!(
                "omega must be positive, got {omega}"
            )));
        }
        if !start.is_finite() {
            return Err(Error::Domain("start time must be finite".into()));
        }
        Ok(IntensityState {
            omega,
            num_users,
            num_products,
            now: start,
            stamp: vec![start; num_users],
            own: vec![T::zero(); num_users * num_products],
            exposed: vec![T::zero(); num_users * num_products],
            rows_rewritten: 0,
        })
    }

    pub fn omega(&self) -> T {
        self.omega
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_products(&self) -> usize {
        self.num_products
    }

    /// Time at which the sums are current.
    pub fn last_update(&self) -> T {
        self.now
    }

    /// Number of user rows brought up to date by event registration so far.
    pub fn rows_rewritten(&self) -> u64 {
        self.rows_rewritten
    }

    /// Moves the clock forward by `dt`, decaying every sum by `exp(-omega dt)`.
    pub fn advance(&mut self, dt: T) -> Result<()> {
        if !(dt >= T::zero() && dt.is_finite()) {
            return Err(Error::Domain(format!(
                "state can only advance by a finite non-negative step, got {dt}"
            )));
        }
        self.now = self.now + dt;
        Ok(())
    }

    /// Moves the clock to `t >= last_update()`.
    pub fn advance_to(&mut self, t: T) -> Result<()> {
        if !(t >= self.now && t.is_finite()) {
            return Err(Error::Domain(format!(
                "cannot move state from {} back to {t}",
                self.now
            )));
        }
        self.now = t;
        Ok(())
    }

    #[inline]
    fn factor(&self, u: usize) -> T {
        decay(self.omega, self.now - self.stamp[u])
    }

    fn refresh_row(&mut self, u: usize) {
        if self.stamp[u] != self.now {
            let f = self.factor(u);
            let row = u * self.num_products..(u + 1) * self.num_products;
            for x in &mut self.own[row.clone()] {
                *x = *x * f;
            }
            for x in &mut self.exposed[row] {
                *x = *x * f;
            }
            self.stamp[u] = self.now;
        }
        self.rows_rewritten += 1;
    }

    pub fn own_sum(&self, u: usize, l: usize) -> T {
        self.own[u * self.num_products + l] * self.factor(u)
    }

    pub fn exposed_sum(&self, u: usize, l: usize) -> T {
        self.exposed[u * self.num_products + l] * self.factor(u)
    }

    /// Adds an event occurring at the current time.
    ///
    /// `own(e.user, e.product)` and `exposed(w, e.product)` for each observer
    /// `w` of `e.user` increase by one.
    pub fn register(&mut self, e: &Event<T>, net: &Network) -> Result<()> {
        self.register_gated(e, net, None)
    }

    /// As [`register`](Self::register), skipping observers whose edge from the
    /// poster had not yet appeared at the event time.
    pub fn register_gated(
        &mut self,
        e: &Event<T>,
        net: &Network,
        gate: Option<&FirstEdgeTimes<T>>,
    ) -> Result<()> {
        check_index("user", e.user, self.num_users)?;
        check_index("product", e.product, self.num_products)?;
        if e.time != self.now {
            return Err(Error::Sequencing {
                state_time: self.now.as_f64(),
                event_time: e.time.as_f64(),
            });
        }
        let n = self.num_products;
        self.refresh_row(e.user);
        self.own[e.user * n + e.product] = self.own[e.user * n + e.product] + T::one();
        for &w in net.observers(e.user) {
            if !exposed_at(gate, e.user, w, e.time) {
                continue;
            }
            self.refresh_row(w);
            self.exposed[w * n + e.product] = self.exposed[w * n + e.product] + T::one();
        }
        Ok(())
    }

    /// `lambda_up - mu_p` at `last_update()`; it decays as `exp(-omega dt)`
    /// until the next event that touches `u`.
    pub fn excitation(&self, params: &UserParams<T>, u: usize, p: usize) -> T {
        let n = self.num_products;
        let row = u * n;
        let mut excitation = T::zero();
        for l in 0..n {
            excitation = excitation
                + params.a(l, p) * self.own[row + l]
                + params.b(l, p) * self.exposed[row + l];
        }
        self.factor(u) * excitation
    }

    /// `lambda_up` at `last_update()`, unclamped.
    pub fn intensity(&self, params: &UserParams<T>, u: usize, p: usize) -> T {
        params.mu[p] + self.excitation(params, u, p)
    }

    /// Every `lambda_up` of user `u` at `last_update()`, written to `out`.
    pub fn intensities_into(&self, params: &UserParams<T>, u: usize, out: &mut [T]) {
        for (p, slot) in out.iter_mut().enumerate().take(self.num_products) {
            *slot = self.intensity(params, u, p);
        }
    }
}

/// `lambda_up` reconstructed from a current state.
pub fn intensity_from_state<T: Scalar>(
    params: &UserParams<T>,
    state: &IntensityState<T>,
    u: usize,
    p: usize,
) -> Result<T> {
    check_index("user", u, state.num_users())?;
    check_index(
        "product",
        p,
        state.num_products().min(params.num_products()),
    )?;
    Ok(state.intensity(params, u, p))
}
