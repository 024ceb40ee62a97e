use crate::error::{check_index, Error, Result};

/// Directed observation graph. An edge `(src, dst)` means `dst` observes `src`,
/// so `src` belongs to `N(dst)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    num_users: usize,
    edges: Vec<(usize, usize)>,
    observed: Vec<Vec<usize>>,
    observers: Vec<Vec<usize>>,
}

impl Network {
    /// Builds the graph; duplicate edges collapse, self-edges are rejected.
    pub fn new<I>(num_users: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut list = Vec::new();
        for (src, dst) in edges {
            check_index("user", src, num_users)?;
            check_index("user", dst, num_users)?;
            if src == dst {
                return Err(Error::Domain(format!("self-edge on user {src}")));
            }
            list.push((src, dst));
        }
        list.sort_unstable();
        list.dedup();
        let mut observed = vec![Vec::new(); num_users];
        let mut observers = vec![Vec::new(); num_users];
        for &(src, dst) in &list {
            observed[dst].push(src);
            observers[src].push(dst);
        }
        for n in &mut observed {
            n.sort_unstable();
        }
        Ok(Network {
            num_users,
            edges: list,
            observed,
            observers,
        })
    }

    /// A graph with no edges.
    pub fn isolated(num_users: usize) -> Self {
        Network {
            num_users,
            edges: Vec::new(),
            observed: vec![Vec::new(); num_users],
            observers: vec![Vec::new(); num_users],
        }
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(src, dst)` pairs in lexicographic order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `N(u)`: the users whose events `u` observes, ascending.
    pub fn observed(&self, u: usize) -> &[usize] {
        &self.observed[u]
    }

    /// Users that observe `v`, ascending.
    pub fn observers(&self, v: usize) -> &[usize] {
        &self.observers[v]
    }

    pub fn contains(&self, src: usize, dst: usize) -> bool {
        self.edges.binary_search(&(src, dst)).is_ok()
    }

    /// Largest `|N(u)|` over all users.
    pub fn max_in_degree(&self) -> usize {
        self.observed.iter().map(Vec::len).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjacency_matches_edge_definition() {
        let net = Network::new(4, [(0, 1), (2, 1), (0, 3), (0, 1)]).unwrap();
        assert_eq!(net.num_edges(), 3);
        assert_eq!(net.observed(1), &[0, 2]);
        assert_eq!(net.observers(0), &[1, 3]);
        assert!(net.observed(0).is_empty());
        for u in 0..4 {
            let expect: Vec<usize> = net
                .edges()
                .iter()
                .filter(|e| e.1 == u)
                .map(|e| e.0)
                .collect();
            assert_eq!(net.observed(u), expect.as_slice());
        }
        assert!(net.contains(2, 1));
        assert!(!net.contains(1, 2));
        assert_eq!(net.max_in_degree(), 2);
    }

    #[test]
    fn rejects_self_edges_and_bad_indices() {
        assert!(matches!(Network::new(3, [(1, 1)]), Err(Error::Domain(_))));
        assert!(matches!(
            Network::new(3, [(0, 3)]),
            Err(Error::Index { .. })
        ));
    }
}
