//! Assignment of the training stream to agents.

use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::points::{distance, PointSet};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum PartitionPolicy {
    /// Each datum goes to a uniformly random agent.
    RandomUniform { seed: u64 },
    /// Each datum goes to the nearest agent position (lowest index on ties).
    SpatialVoronoi { agent_positions: Vec<[f64; 2]> },
}

/// Per-node ordered arrivals `(time_step, data_index)`.
///
/// A node's `k`-th datum arrives at step `k`; steps are strictly increasing per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrivalSchedule {
    per_node: Vec<Vec<(usize, usize)>>,
}

impl ArrivalSchedule {
    /// Sequential arrivals from per-node data index lists.
    pub fn sequential(assignment: Vec<Vec<usize>>) -> Self {
        let per_node = assignment.into_iter().map(|idx| idx.into_iter().enumerate().collect()).collect();
        ArrivalSchedule { per_node }
    }

    pub fn empty(num_nodes: usize) -> Self {
        ArrivalSchedule { per_node: alloc::vec![Vec::new(); num_nodes] }
    }

    pub fn num_nodes(&self) -> usize {
        self.per_node.len()
    }

    pub fn node(&self, i: usize) -> &[(usize, usize)] {
        &self.per_node[i]
    }

    pub fn node_sizes(&self) -> Vec<usize> {
        self.per_node.iter().map(Vec::len).collect()
    }

    /// Nodes that receive no data at all.
    pub fn empty_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&i| self.per_node[i].is_empty()).collect()
    }

    pub fn total(&self) -> usize {
        self.per_node.iter().map(Vec::len).sum()
    }

    /// One past the last step at which any node receives data.
    pub fn num_steps(&self) -> usize {
        self.per_node.iter().filter_map(|v| v.last().map(|(t, _)| t + 1)).max().unwrap_or(0)
    }

    /// Data index arriving at each node at `step`, if any.
    pub fn arrivals_at(&self, step: usize) -> Vec<Option<usize>> {
        self.per_node
            .iter()
            .map(|list| {
                list.binary_search_by_key(&step, |&(t, _)| t).ok().map(|k| list[k].1)
            })
            .collect()
    }

    /// Data index → node, for `n` data.
    pub fn owners(&self, n: usize) -> Vec<Option<usize>> {
        let mut owner = alloc::vec![None; n];
        for (node, list) in self.per_node.iter().enumerate() {
            for &(_, idx) in list {
                if idx < n {
                    owner[idx] = Some(node);
                }
            }
        }
        owner
    }
}

/// Exhaustive, disjoint split of `inputs` across `num_nodes` agents, in stream order.
pub fn partition_data(inputs: &PointSet, num_nodes: usize, policy: &PartitionPolicy) -> Result<ArrivalSchedule> {
    if num_nodes == 0 {
        return Err(Error::InvalidParameter("need at least one node"));
    }
    let mut assignment = alloc::vec![Vec::new(); num_nodes];
    match policy {
        PartitionPolicy::RandomUniform { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for i in 0..inputs.len() {
                assignment[rng.random_range(0..num_nodes)].push(i);
            }
        }
        PartitionPolicy::SpatialVoronoi { agent_positions } => {
            if agent_positions.len() != num_nodes {
                return Err(Error::DimensionMismatch { expected: num_nodes, found: agent_positions.len() });
            }
            if inputs.dim() != 2 {
                return Err(Error::DimensionMismatch { expected: 2, found: inputs.dim() });
            }
            for (i, p) in inputs.iter().enumerate() {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (a, pos) in agent_positions.iter().enumerate() {
                    let d = distance(p, pos);
                    if d < best_d {
                        best_d = d;
                        best = a;
                    }
                }
                assignment[best].push(i);
            }
        }
    }
    Ok(ArrivalSchedule::sequential(assignment))
}

/// `k` distinct indices from `0..n`, drawn with `seed`, in ascending order.
pub fn subsample_indices(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k > n {
        return Err(Error::InvalidParameter("cannot draw more indices than available"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = index::sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    Ok(idx)
}
