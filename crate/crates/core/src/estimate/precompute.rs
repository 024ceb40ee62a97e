use std::sync::Arc;

use crate::error::{check_index, Error, Result};
use crate::model::{decay, mass, EventLog};
use crate::network::{exposed_at, FirstEdgeTimes, Network};
use crate::scalar::Scalar;

/// Observed data for estimation and scoring: events, the observation graph,
/// and optional first-edge times that gate exposure.
#[derive(Debug, Clone, Copy)]
pub struct Corpus<'a, T> {
    pub log: &'a EventLog<T>,
    pub net: &'a Network,
    pub first_edge_time: Option<&'a FirstEdgeTimes<T>>,
}

impl<'a, T: Scalar> Corpus<'a, T> {
    pub fn new(log: &'a EventLog<T>, net: &'a Network) -> Result<Self> {
        if log.num_users() != net.num_users() {
            return Err(Error::Shape(format!(
                "event log has {} users, network has {}",
                log.num_users(),
                net.num_users()
            )));
        }
        Ok(Corpus {
            log,
            net,
            first_edge_time: None,
        })
    }

    pub fn with_gate(mut self, first_edge_time: &'a FirstEdgeTimes<T>) -> Self {
        self.first_edge_time = Some(first_edge_time);
        self
    }

    pub fn num_users(&self) -> usize {
        self.log.num_users()
    }

    pub fn num_products(&self) -> usize {
        self.log.num_products()
    }
}

/// Everything the `(u, p)` likelihood needs, reduced to linear algebra.
///
/// Row `i` of the feature table is `[1, K_own(t_i), K_exp(t_i)]` for the
/// `i`-th event of `(u, p)` in the window, so `lambda_up(t_i) = x . phi_i` for
/// `x = [mu_p, a_.p, b_.p]`. The compensator vector `[T, G_own, G_exp]` gives
/// the integrated intensity as `x . psi`.
///
/// With segments attached, the exact integral of `max(0, lambda)` is also
/// available: between consecutive events that touch the user, every
/// intensity is `mu_p + (x . sigma_k) exp(-omega (t - s_k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecomputedSums<T> {
    num_products: usize,
    features: Vec<T>,
    compensator: Vec<T>,
    segments: Option<Arc<Segments<T>>>,
}

/// Piecewise description of a user's kernel sums over the window: segment
/// `k` starts with `[own, exposed]` sums `sigma_k` and lasts `length_k`.
/// Shared by all products of the user.
#[derive(Debug, Clone, PartialEq)]
pub struct Segments<T> {
    omega: T,
    width: usize,
    lengths: Vec<T>,
    sigma: Vec<T>,
}

impl<T: Scalar> Segments<T> {
    pub fn omega(&self) -> T {
        self.omega
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn length(&self, k: usize) -> T {
        self.lengths[k]
    }

    /// `[own(l) for l] ++ [exposed(l) for l]` at the start of segment `k`.
    pub fn sigma(&self, k: usize) -> &[T] {
        &self.sigma[k * self.width..(k + 1) * self.width]
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, &[T])> + '_ {
        self.lengths
            .iter()
            .copied()
            .zip(self.sigma.chunks_exact(self.width.max(1)))
    }

    fn push(&mut self, length: T, own: &[T], exposed: &[T]) {
        self.lengths.push(length);
        self.sigma.extend_from_slice(own);
        self.sigma.extend_from_slice(exposed);
    }
}

impl<T: Scalar> PrecomputedSums<T> {
    fn empty(num_products: usize, window_length: T) -> Self {
        let mut compensator = vec![T::zero(); 1 + 2 * num_products];
        compensator[0] = window_length;
        PrecomputedSums {
            num_products,
            features: Vec::new(),
            compensator,
            segments: None,
        }
    }

    pub fn segments(&self) -> Option<&Segments<T>> {
        self.segments.as_deref()
    }

    pub fn dim(&self) -> usize {
        1 + 2 * self.num_products
    }

    pub fn num_products(&self) -> usize {
        self.num_products
    }

    pub fn num_events(&self) -> usize {
        self.features.len() / self.dim()
    }

    pub fn feature(&self, i: usize) -> &[T] {
        let d = self.dim();
        &self.features[i * d..(i + 1) * d]
    }

    pub fn features(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.features.chunks_exact(self.dim())
    }

    pub fn k_own(&self, i: usize) -> &[T] {
        &self.feature(i)[1..1 + self.num_products]
    }

    pub fn k_exposed(&self, i: usize) -> &[T] {
        &self.feature(i)[1 + self.num_products..]
    }

    pub fn compensator(&self) -> &[T] {
        &self.compensator
    }

    pub fn window_length(&self) -> T {
        self.compensator[0]
    }

    pub fn g_own(&self) -> &[T] {
        &self.compensator[1..1 + self.num_products]
    }

    pub fn g_exposed(&self) -> &[T] {
        &self.compensator[1 + self.num_products..]
    }
}

#[derive(Clone, Copy)]
struct Item<T> {
    time: T,
    product: usize,
    own: bool,
}

/// Kernel sums for every product of user `u` over `[start, end)`.
///
/// Events before `start` act as conditioning history: they excite the window
/// and contribute the part of their kernel mass that falls inside it. One
/// forward pass over the merged own and exposed streams, O(m log d) for `m`
/// merged events and `d` neighbors.
pub fn precompute_user_sums<T: Scalar>(
    corpus: &Corpus<'_, T>,
    u: usize,
    omega: T,
    start: T,
    end: T,
) -> Result<Vec<PrecomputedSums<T>>> {
    user_sums(corpus, u, omega, start, end, false)
}

/// As [`precompute_user_sums`], also recording the segments needed for the
/// exact clamped compensator.
pub fn precompute_user_segments<T: Scalar>(
    corpus: &Corpus<'_, T>,
    u: usize,
    omega: T,
    start: T,
    end: T,
) -> Result<Vec<PrecomputedSums<T>>> {
    user_sums(corpus, u, omega, start, end, true)
}

fn user_sums<T: Scalar>(
    corpus: &Corpus<'_, T>,
    u: usize,
    omega: T,
    start: T,
    end: T,
    with_segments: bool,
) -> Result<Vec<PrecomputedSums<T>>> {
    check_index("user", u, corpus.num_users())?;
    if !(omega > T::zero() && omega.is_finite()) {
        return Err(Error::Domain(format!(
            "omega must be positive, got {omega}"
        )));
    }
    if !(start < end) {
        return Err(Error::Domain(format!(
            "window must be non-empty, got [{start}, {end})"
        )));
    }
    let n = corpus.num_products();
    let log = corpus.log;

    let mut items: Vec<Item<T>> = log
        .user_events(u)
        .take_while(|e| e.time < end)
        .map(|e| Item {
            time: e.time,
            product: e.product,
            own: true,
        })
        .collect();
    for &v in corpus.net.observed(u) {
        items.extend(
            log.user_events(v)
                .take_while(|e| e.time < end)
                .filter(|e| exposed_at(corpus.first_edge_time, v, u, e.time))
                .map(|e| Item {
                    time: e.time,
                    product: e.product,
                    own: false,
                }),
        );
    }
    // stable merge of sorted runs
    items.sort_by(|a, b| a.time.partial_cmp(&b.time).expect("finite times"));

    let mut out: Vec<PrecomputedSums<T>> = (0..n)
        .map(|_| PrecomputedSums::empty(n, end - start))
        .collect();
    let mut own = vec![T::zero(); n];
    let mut exposed = vec![T::zero(); n];
    let mut now = T::neg_infinity();
    let mut segments = Segments {
        omega,
        width: 2 * n,
        lengths: Vec::new(),
        sigma: Vec::new(),
    };
    // segment open at `seg_start` with sums `seg_sigma`
    let mut seg_start: Option<T> = None;
    let mut seg_sigma = vec![T::zero(); 2 * n];
    let snapshot = |own: &[T], exposed: &[T], f: T, out: &mut Vec<T>| {
        out.clear();
        out.extend(own.iter().chain(exposed).map(|x| *x * f));
    };
    let mut i = 0;
    while i < items.len() {
        let t = items[i].time;
        if with_segments && t >= start && seg_start.is_none() {
            let f = if now > T::neg_infinity() {
                decay(omega, start - now)
            } else {
                T::one()
            };
            snapshot(&own, &exposed, f, &mut seg_sigma);
            seg_start = Some(start);
        }
        if let Some(s0) = seg_start {
            segments.push(t - s0, &seg_sigma[..n], &seg_sigma[n..]);
        }
        if now > T::neg_infinity() {
            let f = decay(omega, t - now);
            own.iter_mut()
                .chain(exposed.iter_mut())
                .for_each(|x| *x = *x * f);
        }
        now = t;
        let group_end = i + items[i..].iter().take_while(|it| it.time == t).count();
        if t >= start {
            for it in items[i..group_end].iter().filter(|it| it.own) {
                let sums = &mut out[it.product];
                sums.features.push(T::one());
                sums.features.extend_from_slice(&own);
                sums.features.extend_from_slice(&exposed);
            }
        }
        // mass of each kernel inside [start, end)
        let inside = if t >= start {
            mass(omega, end - t)
        } else {
            mass(omega, end - t) - mass(omega, start - t)
        };
        for it in &items[i..group_end] {
            let slot = if it.own {
                1 + it.product
            } else {
                1 + n + it.product
            };
            for sums in &mut out {
                sums.compensator[slot] = sums.compensator[slot] + inside;
            }
            if it.own {
                own[it.product] = own[it.product] + T::one();
            } else {
                exposed[it.product] = exposed[it.product] + T::one();
            }
        }
        if seg_start.is_some() {
            snapshot(&own, &exposed, T::one(), &mut seg_sigma);
            seg_start = Some(t);
        }
        i = group_end;
    }
    if with_segments {
        let s0 = match seg_start {
            Some(s0) => s0,
            None => {
                let f = if now > T::neg_infinity() {
                    decay(omega, start - now)
                } else {
                    T::one()
                };
                snapshot(&own, &exposed, f, &mut seg_sigma);
                start
            }
        };
        segments.push(end - s0, &seg_sigma[..n], &seg_sigma[n..]);
        let shared = Arc::new(segments);
        for sums in &mut out {
            sums.segments = Some(Arc::clone(&shared));
        }
    }
    Ok(out)
}

/// Sums for the single `(u, p)` subproblem over the log's own window.
pub fn precompute_sums<T: Scalar>(
    corpus: &Corpus<'_, T>,
    u: usize,
    p: usize,
    omega: T,
) -> Result<PrecomputedSums<T>> {
    check_index("product", p, corpus.num_products())?;
    let mut all = precompute_user_sums(corpus, u, omega, corpus.log.start(), corpus.log.end())?;
    Ok(all.swap_remove(p))
}
