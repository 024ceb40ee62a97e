use std::collections::BTreeMap;

use super::graph::Network;
use crate::error::{check_index, Result};
use crate::model::{Event, EventLog};
use crate::scalar::Scalar;

/// Earliest time each edge `(src, dst)` appeared; `dst` sees `src`'s events only after it.
pub type FirstEdgeTimes<T> = BTreeMap<(usize, usize), T>;

/// A mention record: `mentioner` addressed `mentioned` at `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mention<T> {
    pub mentioner: usize,
    pub mentioned: usize,
    pub time: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MentionNetwork<T> {
    pub network: Network,
    pub first_edge_time: FirstEdgeTimes<T>,
    /// Self-mentions skipped while building.
    pub ignored_self_mentions: usize,
}

/// A mention of `i` by `j` creates the edge `(i, j)`: `j` pays attention to `i`.
pub fn build_mention_network<T: Scalar>(
    num_users: usize,
    interactions: &[Mention<T>],
) -> Result<MentionNetwork<T>> {
    let mut first: FirstEdgeTimes<T> = BTreeMap::new();
    let mut ignored = 0;
    for m in interactions {
        check_index("user", m.mentioner, num_users)?;
        check_index("user", m.mentioned, num_users)?;
        if m.mentioner == m.mentioned {
            ignored += 1;
            continue;
        }
        first
            .entry((m.mentioned, m.mentioner))
            .and_modify(|t| {
                if m.time < *t {
                    *t = m.time
                }
            })
            .or_insert(m.time);
    }
    if ignored > 0 {
        log::warn!("ignored {ignored} self-mentions");
    }
    let network = Network::new(num_users, first.keys().copied())?;
    Ok(MentionNetwork {
        network,
        first_edge_time: first,
        ignored_self_mentions: ignored,
    })
}

/// Whether `dst` is exposed to an event of `src` at `time` under optional edge gating.
#[inline]
pub(crate) fn exposed_at<T: Scalar>(
    gate: Option<&FirstEdgeTimes<T>>,
    src: usize,
    dst: usize,
    time: T,
) -> bool {
    match gate.and_then(|g| g.get(&(src, dst))) {
        Some(&first) => time > first,
        None => true,
    }
}

/// Merged, time-sorted events of `u` and of `N(u)` strictly before `t`.
///
/// With `first_edge_time`, a neighbor's events are kept only when they occur
/// after the edge appeared.
pub fn exposure_history<T: Scalar>(
    log: &EventLog<T>,
    net: &Network,
    u: usize,
    t: T,
    first_edge_time: Option<&FirstEdgeTimes<T>>,
) -> Vec<Event<T>> {
    let neighbors = net.observed(u);
    log.history(t)
        .iter()
        .filter(|e| {
            e.user == u
                || (neighbors.binary_search(&e.user).is_ok()
                    && exposed_at(first_edge_time, e.user, u, e.time))
        })
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(mentioner: usize, mentioned: usize, time: f64) -> Mention<f64> {
        Mention {
            mentioner,
            mentioned,
            time,
        }
    }

    #[test]
    fn empty_interactions() {
        let built = build_mention_network::<f64>(3, &[]).unwrap();
        assert_eq!(built.network.num_edges(), 0);
        assert!(built.first_edge_time.is_empty());
    }

    #[test]
    fn single_mention_creates_reverse_edge() {
        let built = build_mention_network(6, &[m(2, 5, 10.0)]).unwrap();
        assert_eq!(built.network.edges(), &[(5, 2)]);
        assert_eq!(built.first_edge_time[&(5, 2)], 10.0);
        assert_eq!(built.network.observed(2), &[5]);
    }

    #[test]
    fn earliest_mention_wins_and_self_mentions_skipped() {
        let built =
            build_mention_network(4, &[m(1, 0, 3.0), m(1, 0, 1.0), m(2, 2, 0.5), m(1, 0, 8.0)])
                .unwrap();
        assert_eq!(built.first_edge_time[&(0, 1)], 1.0);
        assert_eq!(built.ignored_self_mentions, 1);
        assert_eq!(built.network.num_edges(), 1);
    }

    #[test]
    fn exposure_of_isolated_node_is_own_history() {
        let log = EventLog::new(
            3,
            1,
            0.0,
            10.0,
            vec![
                Event::new(0, 0, 1.0),
                Event::new(1, 0, 2.0),
                Event::new(0, 0, 4.0),
            ],
        )
        .unwrap();
        let net = Network::isolated(3);
        let h = exposure_history(&log, &net, 0, 5.0, None);
        let own: Vec<_> = log.user_history(0, 5.0).copied().collect();
        assert_eq!(h, own);
    }

    #[test]
    fn exposure_merges_neighbors_in_time_order() {
        let log = EventLog::new(
            4,
            2,
            0.0,
            10.0,
            vec![
                Event::new(1, 0, 1.0),
                Event::new(2, 1, 1.5),
                Event::new(1, 1, 2.5),
                Event::new(0, 0, 2.0),
                Event::new(2, 0, 3.0),
                Event::new(3, 0, 0.2),
            ],
        )
        .unwrap();
        let net = Network::new(4, [(1, 0), (2, 0)]).unwrap();
        let h = exposure_history(&log, &net, 0, 2.9, None);
        let times: Vec<f64> = h.iter().map(|e| e.time).collect();
        assert_eq!(times, vec![1.0, 1.5, 2.0, 2.5]);
        assert!(h.iter().all(|e| log.events().contains(e)));
    }

    #[test]
    fn gating_drops_events_before_first_mention() {
        let log = EventLog::new(
            2,
            1,
            0.0,
            20.0,
            vec![Event::new(1, 0, 5.0), Event::new(1, 0, 9.0)],
        )
        .unwrap();
        let net = Network::new(2, [(1, 0)]).unwrap();
        let mut gate = FirstEdgeTimes::new();
        gate.insert((1, 0), 7.0);
        let h = exposure_history(&log, &net, 0, 20.0, Some(&gate));
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].time, 9.0);
        assert_eq!(exposure_history(&log, &net, 0, 20.0, None).len(), 2);
    }
}
