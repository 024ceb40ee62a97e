//! Fitted models that score held-out windows: per-user log-likelihood and
//! top-1 product predictions.

use super::metrics::top1;
use crate::baselines::{
    fit_poisson, fit_recency, fit_weibull, predict_recency, RecencyParams, WeibullParams,
};
use crate::error::{Error, Result};
use crate::model::{clamped_mass, EventLog, IntensityState, ModelParams};
use crate::network::{FirstEdgeTimes, Network};
use crate::scalar::Scalar;

/// Per-user outcome of scoring one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserScore<T> {
    pub events: usize,
    /// Events whose top-ranked product was the true one.
    pub correct: usize,
    /// Log-likelihood of the window (events and compensator); `None` for
    /// discrete-time models.
    pub loglik: Option<T>,
}

impl<T: Scalar> UserScore<T> {
    fn new(continuous: bool) -> Self {
        UserScore {
            events: 0,
            correct: 0,
            loglik: continuous.then(T::zero),
        }
    }

    /// Log-likelihood per event; absent without events.
    pub fn avg_loglik(&self) -> Option<T> {
        match self.loglik {
            Some(l) if self.events > 0 => Some(l / T::from_count(self.events)),
            _ => None,
        }
    }

    pub fn prediction_probability(&self) -> Option<T> {
        (self.events > 0).then(|| T::from_count(self.correct) / T::from_count(self.events))
    }
}

/// Average per-event log-likelihood over all users' events in a window.
pub fn avg_test_loglik<T: Scalar>(scores: &[UserScore<T>]) -> Option<T> {
    let mut total = T::zero();
    let mut events = 0;
    for s in scores {
        total = total + s.loglik?;
        events += s.events;
    }
    (events > 0).then(|| total / T::from_count(events))
}

/// A fitted model that can score any window of an event log.
///
/// Events before `start` are conditioning history; events at or after `end`
/// are ignored.
pub trait Scorer<T: Scalar>: Sync {
    fn name(&self) -> &str;
    /// Free parameters of one `(u, p)` subproblem, as counted by AIC; `None`
    /// for discrete-time models.
    fn num_params(&self, u: usize) -> Option<usize>;
    fn score(&self, log: &EventLog<T>, start: T, end: T) -> Result<Vec<UserScore<T>>>;
}

fn check_window<T: Scalar>(log: &EventLog<T>, start: T, end: T) -> Result<()> {
    if !(start >= log.start() && end > start && end <= log.end()) {
        return Err(Error::Domain(format!(
            "scoring window [{start}, {end}) must be non-empty and inside [{}, {})",
            log.start(),
            log.end()
        )));
    }
    Ok(())
}

fn check_shape<T: Scalar>(log: &EventLog<T>, users: usize, products: usize) -> Result<()> {
    if log.num_users() != users || log.num_products() != products {
        return Err(Error::Shape(format!(
            "model is {users}x{products}, event log is {}x{}",
            log.num_users(),
            log.num_products()
        )));
    }
    Ok(())
}

/// End index of the group of events sharing `events[i].time`.
fn tie_group_end<T: Scalar>(events: &[crate::model::Event<T>], i: usize) -> usize {
    let t = events[i].time;
    let mut j = i + 1;
    while j < events.len() && events[j].time == t {
        j += 1;
    }
    j
}

#[inline]
fn floored_ln<T: Scalar>(x: T, floor: T) -> T {
    x.max(floor).ln()
}

/// The competing-products Hawkes model, scored under its clamped intensity
/// `max(0, lambda_up)`.
#[derive(Debug, Clone)]
pub struct HawkesModel<T> {
    pub params: ModelParams<T>,
    pub net: Network,
    pub first_edge_time: Option<FirstEdgeTimes<T>>,
    /// Intensities at event times are floored here before the log.
    pub floor: T,
}

impl<T: Scalar> HawkesModel<T> {
    pub fn new(params: ModelParams<T>, net: Network, floor: T) -> Result<Self> {
        if params.num_users() != net.num_users() {
            return Err(Error::Shape(format!(
                "{} parameter rows for {} network users",
                params.num_users(),
                net.num_users()
            )));
        }
        if !(floor > T::zero()) {
            return Err(Error::Domain(format!(
                "intensity floor must be positive, got {floor}"
            )));
        }
        Ok(HawkesModel {
            params,
            net,
            first_edge_time: None,
            floor,
        })
    }

    pub fn with_gate(mut self, first_edge_time: FirstEdgeTimes<T>) -> Self {
        self.first_edge_time = Some(first_edge_time);
        self
    }
}

impl<T: Scalar> Scorer<T> for HawkesModel<T> {
    fn name(&self) -> &str {
        "hawkes"
    }

    fn num_params(&self, _u: usize) -> Option<usize> {
        Some(1 + 2 * self.params.num_products())
    }

    // One pass over the log. Between two events touching user u, each of u's
    // intensities is mu_p + c_up exp(-omega (t - s)), so the clamped
    // compensator of the segment is exact.
    fn score(&self, log: &EventLog<T>, start: T, end: T) -> Result<Vec<UserScore<T>>> {
        let (nu, np) = (self.params.num_users(), self.params.num_products());
        check_shape(log, nu, np)?;
        check_window(log, start, end)?;
        let mut scores = vec![UserScore::new(true); nu];
        let Some(omega) = self.params.omega() else {
            return Ok(scores);
        };
        let gate = self.first_edge_time.as_ref();
        let events = log.events();
        let mut state = IntensityState::new(nu, np, omega, log.start())?;
        let mut i = 0;
        while i < events.len() && events[i].time < start {
            state.advance_to(events[i].time)?;
            state.register_gated(&events[i], &self.net, gate)?;
            i += 1;
        }
        state.advance_to(start)?;

        let mut seg_start = vec![start; nu];
        let mut coef = vec![T::zero(); nu * np];
        let refresh = |state: &IntensityState<T>, coef: &mut [T], u: usize| {
            for p in 0..np {
                coef[u * np + p] = state.excitation(self.params.user(u), u, p);
            }
        };
        for u in 0..nu {
            refresh(&state, &mut coef, u);
        }
        let mut compensator = vec![T::zero(); nu];
        let mut integrate = |coef: &[T], seg_start: &mut [T], u: usize, t: T| {
            let mu = &self.params.user(u).mu;
            let dt = t - seg_start[u];
            for p in 0..np {
                compensator[u] = compensator[u] + clamped_mass(mu[p], coef[u * np + p], omega, dt);
            }
            seg_start[u] = t;
        };

        let mut lambda = vec![T::zero(); np];
        let mut touched = Vec::new();
        let mut mark = vec![false; nu];
        while i < events.len() && events[i].time < end {
            let t = events[i].time;
            let j = tie_group_end(events, i);
            state.advance_to(t)?;
            for e in &events[i..j] {
                let params = self.params.user(e.user);
                state.intensities_into(params, e.user, &mut lambda);
                lambda.iter_mut().for_each(|x| *x = x.max(T::zero()));
                let s = &mut scores[e.user];
                s.events += 1;
                s.correct += usize::from(top1(&lambda) == e.product);
                s.loglik = s
                    .loglik
                    .map(|l| l + floored_ln(lambda[e.product], self.floor));
            }
            for e in &events[i..j] {
                for &u in std::iter::once(&e.user).chain(self.net.observers(e.user)) {
                    if !mark[u] {
                        mark[u] = true;
                        touched.push(u);
                    }
                }
            }
            for &u in &touched {
                integrate(&coef, &mut seg_start, u, t);
            }
            for e in &events[i..j] {
                state.register_gated(e, &self.net, gate)?;
            }
            for &u in &touched {
                refresh(&state, &mut coef, u);
                mark[u] = false;
            }
            touched.clear();
            i = j;
        }
        for u in 0..nu {
            integrate(&coef, &mut seg_start, u, end);
        }
        for (s, c) in scores.iter_mut().zip(compensator) {
            s.loglik = s.loglik.map(|l| l - c);
        }
        Ok(scores)
    }
}

/// Independent homogeneous Poisson processes per `(u, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonModel<T> {
    num_products: usize,
    /// Row-major `users x products`.
    rates: Vec<T>,
    pub floor: T,
}

impl<T: Scalar> PoissonModel<T> {
    pub fn fit(log: &EventLog<T>, start: T, end: T, floor: T) -> Result<Self> {
        check_window(log, start, end)?;
        let np = log.num_products();
        let mut counts = vec![0usize; log.num_users() * np];
        for e in log
            .events()
            .iter()
            .filter(|e| e.time >= start && e.time < end)
        {
            counts[e.user * np + e.product] += 1;
        }
        let rates = counts
            .into_iter()
            .map(|n| fit_poisson(n, start, end))
            .collect::<Result<_>>()?;
        Ok(PoissonModel {
            num_products: np,
            rates,
            floor,
        })
    }

    pub fn rate(&self, u: usize, p: usize) -> T {
        self.rates[u * self.num_products + p]
    }

    fn num_users(&self) -> usize {
        self.rates.len() / self.num_products.max(1)
    }
}

impl<T: Scalar> Scorer<T> for PoissonModel<T> {
    fn name(&self) -> &str {
        "poisson"
    }

    fn num_params(&self, _u: usize) -> Option<usize> {
        Some(1)
    }

    fn score(&self, log: &EventLog<T>, start: T, end: T) -> Result<Vec<UserScore<T>>> {
        let np = self.num_products;
        check_shape(log, self.num_users(), np)?;
        check_window(log, start, end)?;
        let len = end - start;
        let mut scores: Vec<UserScore<T>> = (0..self.num_users())
            .map(|u| UserScore {
                events: 0,
                correct: 0,
                loglik: Some(-self.rates[u * np..(u + 1) * np].iter().copied().sum::<T>() * len),
            })
            .collect();
        for e in log
            .events()
            .iter()
            .filter(|e| e.time >= start && e.time < end)
        {
            let row = &self.rates[e.user * np..(e.user + 1) * np];
            let s = &mut scores[e.user];
            s.events += 1;
            s.correct += usize::from(top1(row) == e.product);
            s.loglik = s.loglik.map(|l| l + floored_ln(row[e.product], self.floor));
        }
        Ok(scores)
    }
}

/// Renewal hazard for one `(u, p)`: Weibull when at least two positive gaps
/// were seen in training, otherwise a constant rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Renewal<T> {
    Weibull(WeibullParams<T>),
    Constant(T),
}

impl<T: Scalar> Renewal<T> {
    fn hazard(&self, elapsed: T) -> T {
        match self {
            Renewal::Weibull(w) => w.hazard(elapsed.max(T::epsilon())),
            Renewal::Constant(r) => *r,
        }
    }

    fn cumulative(&self, elapsed: T) -> T {
        match self {
            Renewal::Weibull(w) => w.cumulative_hazard(elapsed),
            Renewal::Constant(r) => *r * elapsed.max(T::zero()),
        }
    }
}

/// Weibull renewal processes per `(u, p)`; the clock restarts at each event
/// and, before the first one, runs from the start of the log.
#[derive(Debug, Clone, PartialEq)]
pub struct WeibullModel<T> {
    num_products: usize,
    pairs: Vec<Renewal<T>>,
    pub floor: T,
}

impl<T: Scalar> WeibullModel<T> {
    pub fn fit(log: &EventLog<T>, start: T, end: T, floor: T) -> Result<Self> {
        check_window(log, start, end)?;
        let np = log.num_products();
        let mut times: Vec<Vec<T>> = vec![Vec::new(); log.num_users() * np];
        for e in log
            .events()
            .iter()
            .filter(|e| e.time >= start && e.time < end)
        {
            times[e.user * np + e.product].push(e.time);
        }
        let pairs = times
            .iter()
            .map(|ts| {
                let gaps: Vec<T> = ts
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .filter(|&g| g > T::zero())
                    .collect();
                match fit_weibull(&gaps) {
                    Ok(w) => Ok(Renewal::Weibull(w)),
                    Err(_) => fit_poisson(ts.len(), start, end).map(Renewal::Constant),
                }
            })
            .collect::<Result<_>>()?;
        Ok(WeibullModel {
            num_products: np,
            pairs,
            floor,
        })
    }

    pub fn pair(&self, u: usize, p: usize) -> &Renewal<T> {
        &self.pairs[u * self.num_products + p]
    }

    fn num_users(&self) -> usize {
        self.pairs.len() / self.num_products.max(1)
    }
}

impl<T: Scalar> Scorer<T> for WeibullModel<T> {
    fn name(&self) -> &str {
        "weibull"
    }

    fn num_params(&self, _u: usize) -> Option<usize> {
        Some(2)
    }

    fn score(&self, log: &EventLog<T>, start: T, end: T) -> Result<Vec<UserScore<T>>> {
        let (nu, np) = (self.num_users(), self.num_products);
        check_shape(log, nu, np)?;
        check_window(log, start, end)?;
        let events = log.events();
        let mut last = vec![log.start(); nu * np];
        let mut i = 0;
        while i < events.len() && events[i].time < start {
            last[events[i].user * np + events[i].product] = events[i].time;
            i += 1;
        }
        let mut seg = vec![start; nu * np];
        let mut scores = vec![UserScore::new(true); nu];
        let mut comp = vec![T::zero(); nu];
        let mut hazards = vec![T::zero(); np];
        while i < events.len() && events[i].time < end {
            let t = events[i].time;
            let j = tie_group_end(events, i);
            for e in &events[i..j] {
                let base = e.user * np;
                for (p, h) in hazards.iter_mut().enumerate() {
                    *h = self.pairs[base + p].hazard(t - last[base + p]);
                }
                let s = &mut scores[e.user];
                s.events += 1;
                s.correct += usize::from(top1(&hazards) == e.product);
                s.loglik = s
                    .loglik
                    .map(|l| l + floored_ln(hazards[e.product], self.floor));
            }
            for e in &events[i..j] {
                let k = e.user * np + e.product;
                if last[k] == t {
                    continue; // simultaneous repeat: zero-length renewal
                }
                let r = &self.pairs[k];
                comp[e.user] =
                    comp[e.user] + r.cumulative(t - last[k]) - r.cumulative(seg[k] - last[k]);
                last[k] = t;
                seg[k] = t;
            }
            i = j;
        }
        for (k, r) in self.pairs.iter().enumerate() {
            let u = k / np;
            comp[u] = comp[u] + r.cumulative(end - last[k]) - r.cumulative(seg[k] - last[k]);
        }
        for (s, c) in scores.iter_mut().zip(comp) {
            s.loglik = s.loglik.map(|l| l - c);
        }
        Ok(scores)
    }
}

/// Per-user Recency models; prediction only.
#[derive(Debug, Clone, PartialEq)]
pub struct RecencyModel<T> {
    num_products: usize,
    users: Vec<RecencyParams<T>>,
}

impl<T: Scalar> RecencyModel<T> {
    pub fn fit(log: &EventLog<T>, start: T, end: T, memory: usize) -> Result<Self> {
        check_window(log, start, end)?;
        let mut seqs: Vec<Vec<usize>> = vec![Vec::new(); log.num_users()];
        for e in log
            .events()
            .iter()
            .filter(|e| e.time >= start && e.time < end)
        {
            seqs[e.user].push(e.product);
        }
        let users = seqs
            .iter()
            .map(|s| fit_recency(s, memory))
            .collect::<Result<_>>()?;
        Ok(RecencyModel {
            num_products: log.num_products(),
            users,
        })
    }

    pub fn user(&self, u: usize) -> &RecencyParams<T> {
        &self.users[u]
    }
}

impl<T: Scalar> Scorer<T> for RecencyModel<T> {
    fn name(&self) -> &str {
        "recency"
    }

    fn num_params(&self, _u: usize) -> Option<usize> {
        None
    }

    fn score(&self, log: &EventLog<T>, start: T, end: T) -> Result<Vec<UserScore<T>>> {
        let nu = self.users.len();
        check_shape(log, nu, self.num_products)?;
        check_window(log, start, end)?;
        let events = log.events();
        let mut history: Vec<Vec<usize>> = vec![Vec::new(); nu];
        let mut scores = vec![UserScore::new(false); nu];
        let mut i = 0;
        while i < events.len() && events[i].time < end {
            let j = tie_group_end(events, i);
            if events[i].time >= start {
                for e in &events[i..j] {
                    let probs =
                        predict_recency(&self.users[e.user], &history[e.user], self.num_products);
                    let s = &mut scores[e.user];
                    s.events += 1;
                    s.correct += usize::from(top1(&probs) == e.product);
                }
            }
            for e in &events[i..j] {
                history[e.user].push(e.product);
            }
            i = j;
        }
        Ok(scores)
    }
}
