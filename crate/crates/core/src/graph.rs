//! Undirected, connected communication graphs.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::points::distance;
use crate::{Error, Result};

/// How many consecutive seeds a random geometric graph tries before giving up.
pub const RANDOM_GEOMETRIC_ATTEMPTS: u64 = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    Complete,
    Ring,
    Path,
    /// Nodes placed uniformly in the unit square, linked within `radius`.
    RandomGeometric { radius: f64, seed: u64 },
    /// Nodes at fixed positions, linked within `radius`.
    Geometric { positions: Vec<[f64; 2]>, radius: f64 },
    EdgeList(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    num_nodes: usize,
    edges: BTreeSet<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    positions: Option<Vec<[f64; 2]>>,
}

impl NetworkGraph {
    /// Builds a graph from an edge list, normalizing each pair to `(min, max)`.
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::InvalidParameter("graph needs at least one node"));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a >= num_nodes || b >= num_nodes {
                return Err(Error::InvalidParameter("edge endpoint out of range"));
            }
            if a == b {
                return Err(Error::InvalidParameter("self-loops are not allowed"));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let mut neighbors = alloc::vec![Vec::new(); num_nodes];
        for &(a, b) in &set {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let g = NetworkGraph { num_nodes, edges: set, neighbors, positions: None };
        if !g.is_connected() {
            return Err(Error::GraphNotConnected);
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        NetworkGraph::from_edges(n, &edges)
    }

    pub fn ring(n: usize) -> Result<Self> {
        let edges: Vec<_> = match n {
            0 | 1 => Vec::new(),
            2 => alloc::vec![(0, 1)],
            _ => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        };
        NetworkGraph::from_edges(n, &edges)
    }

    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        NetworkGraph::from_edges(n, &edges)
    }

    /// Links every pair of positions closer than `radius`.
    pub fn geometric(positions: &[[f64; 2]], radius: f64) -> Result<Self> {
        let n = positions.len();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if distance(&positions[i], &positions[j]) <= radius {
                    edges.push((i, j));
                }
            }
        }
        let mut g = NetworkGraph::from_edges(n, &edges)?;
        g.positions = Some(positions.to_vec());
        Ok(g)
    }

    /// Random positions in the unit square; retries successive seeds until connected.
    pub fn random_geometric(n: usize, radius: f64, seed: u64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter("radius must be positive"));
        }
        for attempt in 0..RANDOM_GEOMETRIC_ATTEMPTS {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
            let positions: Vec<[f64; 2]> =
                (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
            match NetworkGraph::geometric(&positions, radius) {
                Ok(g) => return Ok(g),
                Err(Error::GraphNotConnected) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::GraphNotConnected)
    }

    pub fn build(topology: &Topology, n: usize) -> Result<Self> {
        match topology {
            Topology::Complete => NetworkGraph::complete(n),
            Topology::Ring => NetworkGraph::ring(n),
            Topology::Path => NetworkGraph::path(n),
            Topology::RandomGeometric { radius, seed } => NetworkGraph::random_geometric(n, *radius, *seed),
            Topology::Geometric { positions, radius } => {
                if positions.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: positions.len() });
                }
                NetworkGraph::geometric(positions, *radius)
            }
            Topology::EdgeList(edges) => NetworkGraph::from_edges(n, edges),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    /// Neighbours of `i`, ascending, excluding `i` itself.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn positions(&self) -> Option<&[[f64; 2]]> {
        self.positions.as_deref()
    }

    fn is_connected(&self) -> bool {
        let mut seen = alloc::vec![false; self.num_nodes];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.num_nodes
    }
}

/// Smallest candidate radius (in the given order) for which `positions` form a connected geometric graph.
pub fn smallest_connecting_radius(positions: &[[f64; 2]], candidates: &[f64]) -> Option<f64> {
    candidates.iter().copied().find(|&r| NetworkGraph::geometric(positions, r).is_ok())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_of_four() {
        let g = NetworkGraph::ring(4).unwrap();
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges, alloc::vec![(0, 1), (0, 3), (1, 2), (2, 3)]);
        assert!((0..4).all(|i| g.degree(i) == 2));
    }

    #[test]
    fn complete_seven_has_21_edges() {
        assert_eq!(NetworkGraph::complete(7).unwrap().num_edges(), 21);
    }

    #[test]
    fn single_node_path() {
        let g = NetworkGraph::path(1).unwrap();
        assert_eq!(g.num_nodes(), 1);
        assert_eq!(g.num_edges(), 0);
    }

    #[test]
    fn disconnected_edges_rejected() {
        assert_eq!(NetworkGraph::from_edges(4, &[(0, 1), (2, 3)]), Err(Error::GraphNotConnected));
        assert!(NetworkGraph::from_edges(2, &[(1, 1)]).is_err());
        assert!(NetworkGraph::from_edges(0, &[]).is_err());
    }

    #[test]
    fn random_geometric_is_connected_and_seeded() {
        let a = NetworkGraph::random_geometric(7, 0.5, 11).unwrap();
        let b = NetworkGraph::random_geometric(7, 0.5, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_nodes(), 7);
    }

    #[test]
    fn tiny_radius_fails() {
        assert_eq!(NetworkGraph::random_geometric(7, 1e-6, 1), Err(Error::GraphNotConnected));
    }

    #[test]
    fn connecting_radius_on_a_line() {
        let pos = [[0.0, 0.0], [0.3, 0.0], [0.5, 0.0]];
        assert_eq!(smallest_connecting_radius(&pos, &[0.1, 0.2, 0.31, 0.6]), Some(0.31));
        assert_eq!(smallest_connecting_radius(&pos, &[0.1]), None);
    }
}
