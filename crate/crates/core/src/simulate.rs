//! Ogata thinning for the multivariate product-usage process.
//!
//! Each `(u, p)` pair carries a dominating rate `max(mu_p, max(0, lambda_up))`
//! computed when its user row last changed. With a single decay rate every
//! intensity relaxes monotonically toward `mu_p` between events, so this rate
//! bounds the clamped intensity until the user's row changes again. A proposal
//! draws one uniform `d`, locates the slot `d * I*` in the cumulative bounds
//! (Fenwick tree over users), and accepts when it falls inside the clamped
//! intensity of that pair. Accepted events only refresh the poster and its
//! observers; rejections re-tighten the selected user's row.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Event, EventLog, IntensityState, ModelParams, UserParams};
use crate::network::Network;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig<T> {
    pub start: T,
    pub end: T,
    /// Stop after this many events; the log is then closed at the time of the
    /// first event beyond the cap.
    pub max_events: Option<usize>,
    pub rng_seed: u64,
}

impl<T: Scalar> SimConfig<T> {
    pub fn new(start: T, end: T, rng_seed: u64) -> Self {
        SimConfig {
            start,
            end,
            max_events: None,
            rng_seed,
        }
    }

    pub fn with_max_events(mut self, max_events: usize) -> Self {
        self.max_events = Some(max_events);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.start.is_finite()
            && self.end.is_finite()
            && self.start >= T::zero()
            && self.start < self.end)
        {
            return Err(Error::Domain(format!(
                "simulation window must satisfy 0 <= start < end, got [{}, {})",
                self.start, self.end
            )));
        }
        if self.max_events == Some(0) {
            return Err(Error::Domain("max_events must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimReport {
    pub proposals: u64,
    pub rejections: u64,
    /// Proposals whose clamped intensity exceeded the dominating rate. Always
    /// zero unless the bound logic is broken; such points are still accepted
    /// with probability capped at one.
    pub bound_violations: u64,
    /// The event cap was hit and the window was shortened.
    pub truncated: bool,
    /// `max_p sum_l max(0, a_lp + d b_lp) / omega` over users, `d` the largest in-degree.
    pub branching_proxy: f64,
    /// Intensity-state rows rewritten by event registration.
    pub rows_rewritten: u64,
}

#[derive(Debug, Clone)]
pub struct Simulation<T> {
    pub log: EventLog<T>,
    pub report: SimReport,
}

/// Fenwick tree of non-negative weights with prefix search.
struct Fenwick<T> {
    tree: Vec<T>,
    values: Vec<T>,
    updates_since_rebuild: usize,
}

impl<T: Scalar> Fenwick<T> {
    fn from_values(values: Vec<T>) -> Self {
        let mut f = Fenwick {
            tree: vec![T::zero(); values.len() + 1],
            values,
            updates_since_rebuild: 0,
        };
        f.rebuild();
        f
    }

    fn rebuild(&mut self) {
        let n = self.values.len();
        for (i, v) in self.values.iter().enumerate() {
            self.tree[i + 1] = *v;
        }
        for i in 1..=n {
            let j = i + (i & i.wrapping_neg());
            if j <= n {
                self.tree[j] = self.tree[j] + self.tree[i];
            }
        }
        self.updates_since_rebuild = 0;
    }

    fn set(&mut self, idx: usize, value: T) {
        let delta = value - self.values[idx];
        self.values[idx] = value;
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] = self.tree[i] + delta;
            i += i & i.wrapping_neg();
        }
        self.updates_since_rebuild += 1;
        // cancel accumulated rounding from delta updates
        if self.updates_since_rebuild > self.values.len().max(64) {
            self.rebuild();
        }
    }

    fn total(&self) -> T {
        let mut i = self.values.len();
        let mut s = T::zero();
        while i > 0 {
            s = s + self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }

    /// Smallest index whose inclusive prefix sum reaches `target`, with the
    /// remaining offset inside that slot.
    fn locate(&self, mut target: T) -> (usize, T) {
        let n = self.values.len();
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] < target {
                pos = next;
                target = target - self.tree[next];
            }
            step >>= 1;
        }
        if pos >= n {
            // rounding pushed the target past the end; use the last non-empty slot
            let last = self
                .values
                .iter()
                .rposition(|v| *v > T::zero())
                .unwrap_or(n - 1);
            return (last, self.values[last]);
        }
        (pos, target)
    }
}

fn pair_bound<T: Scalar>(mu: T, lambda: T) -> T {
    mu.max(lambda.max(T::zero()))
}

/// Dominating rate for thinning from the current state onward.
///
/// Sums `max(mu_p, max(0, lambda_up))` over all pairs, then adds the positive
/// jumps that `pending` (an event at the current time not yet registered in
/// `state`) would cause: `max(0, a_lp)` on the poster and `max(0, b_lp)` on
/// each observer. Negative weights never raise the bound.
pub fn thinning_upper_bound<T: Scalar>(
    state: &IntensityState<T>,
    params: &ModelParams<T>,
    net: &Network,
    pending: Option<&Event<T>>,
) -> T {
    let products = state.num_products();
    let mut total = T::zero();
    for (u, up) in params.users().iter().enumerate() {
        for p in 0..products {
            total = total + pair_bound(up.mu[p], state.intensity(up, u, p));
        }
    }
    if let Some(e) = pending {
        let l = e.product;
        let poster = params.user(e.user);
        for p in 0..products {
            total = total + poster.a(l, p).max(T::zero());
        }
        for &w in net.observers(e.user) {
            let obs = params.user(w);
            for p in 0..products {
                total = total + obs.b(l, p).max(T::zero());
            }
        }
    }
    total
}

fn branching_proxy<T: Scalar>(params: &ModelParams<T>, net: &Network) -> f64 {
    let d = T::from_count(net.max_in_degree());
    let mut worst = 0.0_f64;
    for up in params.users() {
        let n = up.num_products();
        for p in 0..n {
            let s: T = (0..n)
                .map(|l| (up.a(l, p) + d * up.b(l, p)).max(T::zero()))
                .sum();
            worst = worst.max((s / up.omega).as_f64());
        }
    }
    worst
}

fn check_inputs<T: Scalar>(net: &Network, params: &ModelParams<T>) -> Result<T> {
    if params.num_users() != net.num_users() {
        return Err(Error::Shape(format!(
            "{} parameter sets for {} users",
            params.num_users(),
            net.num_users()
        )));
    }
    for up in params.users() {
        up.validate()?;
    }
    params
        .omega()
        .ok_or_else(|| Error::Shape("no users to simulate".into()))
}

/// Draws an event stream on `[cfg.start, cfg.end)` with per-pair intensity
/// `max(0, lambda_up(t))`. Deterministic given `cfg.rng_seed`.
pub fn simulate<T: Scalar>(
    net: &Network,
    params: &ModelParams<T>,
    cfg: &SimConfig<T>,
) -> Result<Simulation<T>> {
    cfg.validate()?;
    let omega = check_inputs(net, params)?;
    let users = net.num_users();
    let products = params.num_products();

    let mut report = SimReport {
        branching_proxy: branching_proxy(params, net),
        ..SimReport::default()
    };
    if report.branching_proxy >= 1.0 {
        log::warn!(
            "excitation proxy {:.3} >= 1: the process may explode; relying on the event cap",
            report.branching_proxy
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut state = IntensityState::new(users, products, omega, cfg.start)?;
    let mut bounds = vec![T::zero(); users * products];
    let mut scratch = vec![T::zero(); products];

    let refresh = |u: usize,
                   state: &IntensityState<T>,
                   bounds: &mut [T],
                   scratch: &mut [T],
                   up: &UserParams<T>|
     -> T {
        state.intensities_into(up, u, scratch);
        let mut total = T::zero();
        for p in 0..products {
            let b = pair_bound(up.mu[p], scratch[p]);
            bounds[u * products + p] = b;
            total = total + b;
        }
        total
    };

    let user_totals: Vec<T> = (0..users)
        .map(|u| refresh(u, &state, &mut bounds, &mut scratch, params.user(u)))
        .collect();
    let mut tree = Fenwick::from_values(user_totals);

    let mut events: Vec<Event<T>> = Vec::new();
    let mut end = cfg.end;
    let mut now = cfg.start;

    loop {
        let rate = tree.total();
        if !(rate > T::zero()) {
            break;
        }
        if !rate.is_finite() {
            return Err(Error::Domain("dominating rate diverged".into()));
        }
        let q = T::sample_open_unit(&mut rng);
        let s = now - q.ln() / rate;
        if s >= cfg.end {
            break;
        }
        now = s;
        state.advance_to(s)?;
        report.proposals += 1;

        let d = T::sample_open_unit(&mut rng);
        let (u, mut offset) = tree.locate(d * rate);
        let up = params.user(u);
        let row = &bounds[u * products..(u + 1) * products];
        let mut chosen = None;
        for (p, &b) in row.iter().enumerate() {
            if offset <= b {
                chosen = Some(p);
                break;
            }
            offset = offset - b;
        }
        let p = match chosen {
            Some(p) => p,
            None => {
                let last = row
                    .iter()
                    .rposition(|b| *b > T::zero())
                    .unwrap_or(products - 1);
                offset = row[last];
                last
            }
        };

        let lambda = state.intensity(up, u, p).max(T::zero());
        let slack = T::lit(1e-12) * bounds[u * products + p].max(T::one());
        if lambda > bounds[u * products + p] + slack {
            report.bound_violations += 1;
        }

        if offset <= lambda {
            if let Some(cap) = cfg.max_events {
                if events.len() == cap {
                    end = s;
                    report.truncated = true;
                    break;
                }
            }
            let e = Event::new(u, p, s);
            events.push(e);
            state.register(&e, net)?;
            let t = refresh(u, &state, &mut bounds, &mut scratch, up);
            tree.set(u, t);
            for &w in net.observers(u) {
                let t = refresh(w, &state, &mut bounds, &mut scratch, params.user(w));
                tree.set(w, t);
            }
        } else {
            report.rejections += 1;
            let t = refresh(u, &state, &mut bounds, &mut scratch, up);
            tree.set(u, t);
        }
    }

    report.rows_rewritten = state.rows_rewritten();
    if report.bound_violations > 0 {
        log::error!(
            "{} thinning proposals exceeded their bound",
            report.bound_violations
        );
    }
    let log = EventLog::new(users, products, cfg.start, end, events)?;
    Ok(Simulation { log, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_user(mu: f64, a: f64, omega: f64) -> ModelParams<f64> {
        ModelParams::new(vec![
            UserParams::new(vec![mu], vec![a], vec![0.0], omega).unwrap()
        ])
        .unwrap()
    }

    #[test]
    fn fenwick_locates_slots() {
        let f = Fenwick::from_values(vec![1.0_f64, 0.0, 2.0, 3.0, 0.5]);
        assert_eq!(f.total(), 6.5);
        assert_eq!(f.locate(0.5).0, 0);
        assert_eq!(f.locate(1.0).0, 0);
        let (i, off) = f.locate(1.5);
        assert_eq!(i, 2);
        assert!((off - 0.5).abs() < 1e-15);
        assert_eq!(f.locate(3.0).0, 2);
        assert_eq!(f.locate(3.1).0, 3);
        assert_eq!(f.locate(6.5).0, 4);
        assert_eq!(f.locate(7.0).0, 4);
    }

    #[test]
    fn fenwick_updates_match_sums() {
        let mut f = Fenwick::from_values(vec![0.0; 10]);
        for i in 0..500 {
            f.set(i % 10, (i as f64 * 0.37).sin().abs());
        }
        let direct: f64 = f.values.iter().sum();
        assert!((f.total() - direct).abs() < 1e-12);
    }

    #[test]
    fn zero_base_rate_gives_no_events() {
        let net = Network::new(3, [(0, 1), (1, 2)]).unwrap();
        let up = UserParams::new(vec![0.0, 0.0], vec![0.9; 4], vec![0.9; 4], 1.0).unwrap();
        let params = ModelParams::new(vec![up; 3]).unwrap();
        let sim = simulate(&net, &params, &SimConfig::new(0.0, 100.0, 3)).unwrap();
        assert!(sim.log.is_empty());
        assert_eq!(sim.report.proposals, 0);
    }

    #[test]
    fn events_in_window_sorted_and_reproducible() {
        let net = Network::new(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let up = UserParams::new(
            vec![0.3, 0.2],
            vec![0.3, -0.4, -0.2, 0.4],
            vec![0.2, -0.5, -0.3, 0.1],
            2.0,
        )
        .unwrap();
        let params = ModelParams::new(vec![up; 4]).unwrap();
        let cfg = SimConfig::new(5.0, 60.0, 99);
        let a = simulate(&net, &params, &cfg).unwrap();
        let b = simulate(&net, &params, &cfg).unwrap();
        assert_eq!(a.log, b.log);
        assert!(!a.log.is_empty());
        assert!(a
            .log
            .events()
            .iter()
            .all(|e| e.time >= 5.0 && e.time < 60.0));
        assert!(a.log.events().windows(2).all(|w| w[0].time <= w[1].time));
        assert_eq!(a.report.bound_violations, 0);
        let c = simulate(&net, &params, &SimConfig::new(5.0, 60.0, 100)).unwrap();
        assert_ne!(a.log, c.log);
    }

    #[test]
    fn cap_truncates_window() {
        let params = single_user(5.0, 0.0, 1.0);
        let net = Network::isolated(1);
        let sim = simulate(
            &net,
            &params,
            &SimConfig::new(0.0, 1e6, 1).with_max_events(50),
        )
        .unwrap();
        assert!(sim.report.truncated);
        assert_eq!(sim.log.len(), 50);
        assert!(sim.log.end() < 1e6);
        assert!(sim.log.events().last().unwrap().time < sim.log.end());
    }

    #[test]
    fn rejects_bad_config_and_shapes() {
        let params = single_user(1.0, 0.0, 1.0);
        let net = Network::isolated(1);
        assert!(simulate(&net, &params, &SimConfig::new(2.0, 1.0, 0)).is_err());
        assert!(simulate(
            &net,
            &params,
            &SimConfig::new(0.0, 1.0, 0).with_max_events(0)
        )
        .is_err());
        assert!(simulate(&Network::isolated(2), &params, &SimConfig::new(0.0, 1.0, 0)).is_err());
        let mut bad = params.clone().into_users();
        bad[0].a[0] = f64::NAN;
        let bad = ModelParams::new(bad);
        assert!(bad.is_err());
    }

    #[test]
    fn explosion_proxy_reported() {
        let params = single_user(1.0, 2.0, 1.0);
        let net = Network::isolated(1);
        let sim = simulate(
            &net,
            &params,
            &SimConfig::new(0.0, 100.0, 0).with_max_events(200),
        )
        .unwrap();
        assert!(sim.report.branching_proxy >= 1.0);
        assert!(sim.report.truncated);
    }

    #[test]
    fn bound_on_fresh_state_is_total_base_rate() {
        let net = Network::new(2, [(0, 1)]).unwrap();
        let up = UserParams::new(vec![0.3, 0.5], vec![0.0; 4], vec![0.0; 4], 1.0).unwrap();
        let params = ModelParams::new(vec![up; 2]).unwrap();
        let state = IntensityState::<f64>::new(2, 2, 1.0, 0.0).unwrap();
        let b = thinning_upper_bound(&state, &params, &net, None);
        assert!((b - 1.6).abs() < 1e-15);
    }

    #[test]
    fn non_positive_weights_add_no_jump() {
        let net = Network::new(2, [(0, 1)]).unwrap();
        let up = UserParams::new(vec![0.3, 0.5], vec![-0.2; 4], vec![-0.7; 4], 1.0).unwrap();
        let params = ModelParams::new(vec![up; 2]).unwrap();
        let mut state = IntensityState::<f64>::new(2, 2, 1.0, 0.0).unwrap();
        let e = Event::new(0, 1, 0.0);
        let before = thinning_upper_bound(&state, &params, &net, Some(&e));
        state.register(&e, &net).unwrap();
        let after = thinning_upper_bound(&state, &params, &net, None);
        // inhibited pairs still count at mu_p, since they relax back up to it
        assert!((before - 1.6).abs() < 1e-15);
        assert!((after - 1.6).abs() < 1e-15);
    }

    #[test]
    fn positive_jumps_of_pending_event_added() {
        let net = Network::new(2, [(0, 1)]).unwrap();
        let up = UserParams::new(
            vec![0.1, 0.1],
            vec![0.5, -0.5, 0.0, 0.0],
            vec![0.25, 0.75, 0.0, 0.0],
            1.0,
        )
        .unwrap();
        let params = ModelParams::new(vec![up; 2]).unwrap();
        let state = IntensityState::<f64>::new(2, 2, 1.0, 0.0).unwrap();
        let e = Event::new(0, 0, 0.0);
        let b = thinning_upper_bound(&state, &params, &net, Some(&e));
        // base 0.4, poster a_00 = 0.5, observer b_00 + b_01 = 1.0
        assert!((b - 1.9).abs() < 1e-15);
    }

    #[test]
    fn locality_of_updates() {
        // chain 0 -> 1 -> 2 -> ... each user observed by exactly one other
        let n = 40;
        let net = Network::new(n, (0..n - 1).map(|i| (i, i + 1))).unwrap();
        let up = UserParams::new(vec![0.2], vec![0.3], vec![0.3], 1.0).unwrap();
        let params = ModelParams::new(vec![up; n]).unwrap();
        let sim = simulate(&net, &params, &SimConfig::new(0.0, 50.0, 5)).unwrap();
        let max_rows: u64 = sim
            .log
            .events()
            .iter()
            .map(|e| 1 + net.observers(e.user).len() as u64)
            .sum();
        assert_eq!(sim.report.rows_rewritten, max_rows);
    }

    #[test]
    fn single_precision_runs() {
        let up = UserParams::<f32>::new(vec![1.0], vec![0.5], vec![0.0], 2.0).unwrap();
        let params = ModelParams::new(vec![up]).unwrap();
        let sim = simulate(
            &Network::isolated(1),
            &params,
            &SimConfig::new(0.0, 50.0, 1),
        )
        .unwrap();
        assert!(sim.log.len() > 20);
        assert_eq!(sim.report.bound_violations, 0);
    }
}
