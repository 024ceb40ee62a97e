use crate::error::{check_index, Error, Result};
use crate::scalar::Scalar;

/// One usage record: `user` used `product` at `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event<T> {
    pub user: usize,
    pub product: usize,
    pub time: T,
}

impl<T: Scalar> Event<T> {
    pub fn new(user: usize, product: usize, time: T) -> Self {
        Event {
            user,
            product,
            time,
        }
    }
}

/// Time-ordered events observed over `[start, end)`.
///
/// Simultaneous events keep their input order. Per-user index lists make
/// `H_u(t)` and `H_up(t)` views cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog<T> {
    num_users: usize,
    num_products: usize,
    start: T,
    end: T,
    events: Vec<Event<T>>,
    by_user: Vec<Vec<usize>>,
}

impl<T: Scalar> EventLog<T> {
    pub fn new(
        num_users: usize,
        num_products: usize,
        start: T,
        end: T,
        mut events: Vec<Event<T>>,
    ) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && start >= T::zero() && start < end) {
            return Err(Error::Domain(format!(
                "observation window must satisfy 0 <= start < end, got [{start}, {end})"
            )));
        }
        for e in &events {
            check_index("user", e.user, num_users)?;
            check_index("product", e.product, num_products)?;
            if !(e.time.is_finite() && e.time >= start && e.time < end) {
                return Err(Error::Domain(format!(
                    "event time {} outside window [{start}, {end})",
                    e.time
                )));
            }
        }
        // stable: ties keep input order
        events.sort_by(|a, b| a.time.partial_cmp(&b.time).expect("finite times"));
        let mut by_user = vec![Vec::new(); num_users];
        for (i, e) in events.iter().enumerate() {
            by_user[e.user].push(i);
        }
        Ok(EventLog {
            num_users,
            num_products,
            start,
            end,
            events,
            by_user,
        })
    }

    pub fn empty(num_users: usize, num_products: usize, start: T, end: T) -> Result<Self> {
        Self::new(num_users, num_products, start, end, Vec::new())
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_products(&self) -> usize {
        self.num_products
    }

    pub fn start(&self) -> T {
        self.start
    }

    pub fn end(&self) -> T {
        self.end
    }

    pub fn events(&self) -> &[Event<T>] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Number of events strictly before `t`.
    pub fn count_before(&self, t: T) -> usize {
        self.events.partition_point(|e| e.time < t)
    }

    /// `H(t)`: every event strictly before `t`.
    pub fn history(&self, t: T) -> &[Event<T>] {
        &self.events[..self.count_before(t)]
    }

    /// All events of user `u`, time-ordered.
    pub fn user_events(&self, u: usize) -> impl Iterator<Item = &Event<T>> + '_ {
        self.by_user[u].iter().map(move |&i| &self.events[i])
    }

    /// `H_u(t)`.
    pub fn user_history(&self, u: usize, t: T) -> impl Iterator<Item = &Event<T>> + '_ {
        self.user_events(u).take_while(move |e| e.time < t)
    }

    /// `H_up(t)`.
    pub fn user_product_history(
        &self,
        u: usize,
        p: usize,
        t: T,
    ) -> impl Iterator<Item = &Event<T>> + '_ {
        self.user_history(u, t).filter(move |e| e.product == p)
    }

    pub fn user_event_count(&self, u: usize) -> usize {
        self.by_user[u].len()
    }

    /// Events in `[start, end)` as a new log over that window.
    pub fn window(&self, start: T, end: T) -> Result<Self> {
        let lo = self.count_before(start);
        let hi = self.count_before(end);
        Self::new(
            self.num_users,
            self.num_products,
            start,
            end,
            self.events[lo..hi].to_vec(),
        )
    }

    /// Same events, observation window closed earlier at `end`; later events are dropped.
    pub fn truncate(&self, end: T) -> Result<Self> {
        self.window(self.start, end)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EventLog<f64> {
        EventLog::new(
            2,
            2,
            0.0,
            10.0,
            vec![
                Event::new(1, 0, 3.0),
                Event::new(0, 1, 1.0),
                Event::new(0, 0, 3.0),
                Event::new(1, 1, 0.5),
                Event::new(0, 0, 7.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn sorted_and_stable_on_ties() {
        let log = sample();
        let times: Vec<f64> = log.events().iter().map(|e| e.time).collect();
        assert_eq!(times, vec![0.5, 1.0, 3.0, 3.0, 7.0]);
        // the tie at t=3 keeps input order: user 1 first
        assert_eq!(log.events()[2].user, 1);
        assert_eq!(log.events()[3].user, 0);
    }

    #[test]
    fn history_views_are_strict_and_nested() {
        let log = sample();
        assert_eq!(log.history(3.0).len(), 2);
        assert_eq!(log.user_history(0, 3.0).count(), 1);
        assert_eq!(log.user_history(0, 3.0 + 1e-9).count(), 2);
        assert_eq!(log.user_product_history(0, 0, 8.0).count(), 2);
        for t in [0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 9.9] {
            let all = log.history(t);
            for u in 0..2 {
                let hu: Vec<_> = log.user_history(u, t).copied().collect();
                assert!(hu
                    .iter()
                    .all(|e| e.user == u && e.time < t && all.contains(e)));
                for p in 0..2 {
                    let hup: Vec<_> = log.user_product_history(u, p, t).copied().collect();
                    assert!(hup.iter().all(|e| e.product == p && hu.contains(e)));
                }
            }
        }
    }

    #[test]
    fn rejects_out_of_window_and_bad_indices() {
        assert!(matches!(
            EventLog::new(1, 1, 0.0, 1.0, vec![Event::new(0, 0, 1.0)]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            EventLog::new(1, 1, 0.0, 1.0, vec![Event::new(1, 0, 0.5)]),
            Err(Error::Index { what: "user", .. })
        ));
        assert!(matches!(
            EventLog::new(1, 1, 0.0, 1.0, vec![Event::new(0, 3, 0.5)]),
            Err(Error::Index {
                what: "product",
                ..
            })
        ));
        assert!(EventLog::<f64>::empty(1, 1, 2.0, 1.0).is_err());
        assert!(EventLog::new(1, 1, 0.0, 1.0, vec![Event::new(0, 0, f64::NAN)]).is_err());
    }

    #[test]
    fn windowing() {
        let log = sample();
        let w = log.window(1.0, 5.0).unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w.start(), 1.0);
        let t = log.truncate(3.0).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.end(), 3.0);
    }
}
