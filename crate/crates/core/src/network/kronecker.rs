//! Stochastic Kronecker graphs from a 2x2 initiator matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::graph::Network;
use crate::error::{Error, Result};

/// Initiator matrix and number of Kronecker powers; the graph has `2^iterations` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KroneckerSeed {
    pub theta: [[f64; 2]; 2],
    pub iterations: u32,
}

impl KroneckerSeed {
    pub const CORE_PERIPHERY: [[f64; 2]; 2] = [[0.9, 0.5], [0.5, 0.3]];
    pub const HIERARCHICAL: [[f64; 2]; 2] = [[0.9, 0.1], [0.1, 0.9]];
    pub const RANDOM: [[f64; 2]; 2] = [[0.5, 0.5], [0.5, 0.5]];

    pub fn new(theta: [[f64; 2]; 2], iterations: u32) -> Result<Self> {
        let seed = KroneckerSeed { theta, iterations };
        seed.validate()?;
        Ok(seed)
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.iterations > 24 {
            return Err(Error::Domain(format!(
                "Kronecker iterations must be in 1..=24, got {}",
                self.iterations
            )));
        }
        if let Some(bad) = self
            .theta
            .iter()
            .flatten()
            .find(|&&x| !(0.0..=1.0).contains(&x))
        {
            return Err(Error::Domain(format!(
                "initiator entries must lie in [0, 1], got {bad}"
            )));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        1usize << self.iterations
    }

    /// Probability of the directed pair `(i, j)`: product over levels of
    /// `theta[bit_i][bit_j]`.
    pub fn edge_probability(&self, i: usize, j: usize) -> f64 {
        (0..self.iterations)
            .map(|level| self.theta[(i >> level) & 1][(j >> level) & 1])
            .product()
    }

    /// `(sum theta)^k`, the expected edge count including self-pairs.
    pub fn expected_edges_with_loops(&self) -> f64 {
        let s: f64 = self.theta.iter().flatten().sum();
        s.powi(self.iterations as i32)
    }
}

/// Samples every ordered pair independently; self-pairs are drawn but dropped.
pub fn kronecker_generate(seed: &KroneckerSeed, rng_seed: u64) -> Result<Network> {
    seed.validate()?;
    let n = seed.num_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let p = seed.edge_probability(i, j);
            let draw: f64 = rng.gen();
            if draw < p && i != j {
                edges.push((i, j));
            }
        }
    }
    Network::new(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_initiators() {
        let empty = kronecker_generate(&KroneckerSeed::new([[0.0; 2]; 2], 3).unwrap(), 1).unwrap();
        assert_eq!(empty.num_users(), 8);
        assert_eq!(empty.num_edges(), 0);
        let full = kronecker_generate(&KroneckerSeed::new([[1.0; 2]; 2], 2).unwrap(), 1).unwrap();
        assert_eq!(full.num_users(), 4);
        assert_eq!(full.num_edges(), 12);
        assert!(full.edges().iter().all(|&(a, b)| a != b));
    }

    #[test]
    fn rejects_out_of_range_entries() {
        assert!(KroneckerSeed::new([[1.1, 0.0], [0.0, 0.0]], 2).is_err());
        assert!(KroneckerSeed::new([[-0.1, 0.0], [0.0, 0.0]], 2).is_err());
        assert!(KroneckerSeed::new([[0.5; 2]; 2], 0).is_err());
        let bad = KroneckerSeed {
            theta: [[2.0; 2]; 2],
            iterations: 2,
        };
        assert!(kronecker_generate(&bad, 0).is_err());
    }

    #[test]
    fn reproducible_by_seed() {
        let seed = KroneckerSeed::new(KroneckerSeed::CORE_PERIPHERY, 6).unwrap();
        let a = kronecker_generate(&seed, 42).unwrap();
        let b = kronecker_generate(&seed, 42).unwrap();
        let c = kronecker_generate(&seed, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.edges(), c.edges());
    }

    #[test]
    fn edge_probability_factorizes() {
        let seed = KroneckerSeed::new(KroneckerSeed::CORE_PERIPHERY, 3).unwrap();
        // i = 0b011, j = 0b101: levels (1,1), (1,0), (0,1)
        let p = seed.edge_probability(0b011, 0b101);
        assert!((p - 0.3 * 0.5 * 0.5).abs() < 1e-15);
        let total: f64 = (0..8)
            .flat_map(|i| (0..8).map(move |j| (i, j)))
            .map(|(i, j)| seed.edge_probability(i, j))
            .sum();
        assert!((total - seed.expected_edges_with_loops()).abs() < 1e-12);
    }
}
