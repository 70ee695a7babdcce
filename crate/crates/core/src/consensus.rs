//! Distributed recursive MOGP: information-form local updates, Metropolis-weight
//! consensus and global recovery.
//!
//! Each node holds information parameters `(ξ, Ω)` over the stacked basis
//! latents `g`. A local observation `(x, y)` adds
//!
//! ```text
//! S = K(x,x) − J K(X_b,x) + σ²I
//! ξ ← ξ + Jᵀ S⁻¹ y,   Ω ← Ω + Jᵀ S⁻¹ J
//! ```
//!
//! Consensus rounds replace every node's parameters by the weighted average of
//! its closed neighbourhood, computed from a snapshot of the previous round. Since
//! the weights are doubly stochastic the network sums `Σ ξ_i`, `Σ Ω_i` are
//! invariant, and at agreement each node holds `1/N_a` of the total increments
//! (plus the shared prior), which recovery scales back up by `N_a`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::basis::SharedBasis;
use crate::gaussian::{GaussianInfo, GaussianMoments};
use crate::graph::NetworkGraph;
use crate::linalg::{cholesky_psd, JitterPolicy, SymMatrix};
use crate::{Error, Matrix, Result, Vector};

/// Symmetric, doubly stochastic Metropolis–Hastings weights on a graph:
/// `w_ij = 1 / (1 + max(deg_i, deg_j))` on edges, `w_ii = 1 − Σ_{j≠i} w_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetropolisWeights {
    weights: Matrix,
    // closed neighbourhoods, ascending, each including the node itself
    closed: Vec<Vec<usize>>,
}

impl MetropolisWeights {
    pub fn new(graph: &NetworkGraph) -> Self {
        let n = graph.num_nodes();
        let mut weights = Matrix::zeros(n, n);
        for (a, b) in graph.edges() {
            let w = 1.0 / (1.0 + graph.degree(a).max(graph.degree(b)) as f64);
            weights[(a, b)] = w;
            weights[(b, a)] = w;
        }
        for i in 0..n {
            let off: f64 = graph.neighbors(i).iter().map(|&j| weights[(i, j)]).sum();
            weights[(i, i)] = 1.0 - off;
        }
        let closed = (0..n)
            .map(|i| {
                let mut c: Vec<usize> = graph.neighbors(i).to_vec();
                c.push(i);
                c.sort_unstable();
                c
            })
            .collect();
        MetropolisWeights { weights, closed }
    }

    pub fn num_nodes(&self) -> usize {
        self.closed.len()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn matrix(&self) -> &Matrix {
        &self.weights
    }

    /// `N̄_i = N_i ∪ {i}`, ascending.
    pub fn closed_neighborhood(&self, i: usize) -> &[usize] {
        &self.closed[i]
    }

    /// Second-largest eigenvalue modulus of `W`, the asymptotic per-round contraction factor.
    pub fn second_largest_eigen_modulus(&self) -> f64 {
        if self.num_nodes() < 2 {
            return 0.0;
        }
        let eig = SymMatrix::symmetrized(self.weights.clone()).eigenvalues();
        let mut moduli: Vec<f64> = eig.iter().map(|v| v.abs()).collect();
        moduli.sort_by(|a, b| b.total_cmp(a));
        moduli[1]
    }
}

/// One agent's information parameters over the shared basis.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub node_id: usize,
    pub info: GaussianInfo,
    prior: Arc<GaussianInfo>,
    observations: usize,
}

impl NodeState {
    pub fn new(node_id: usize, prior: Arc<GaussianInfo>) -> Self {
        NodeState { node_id, info: (*prior).clone(), prior, observations: 0 }
    }

    pub fn prior(&self) -> &GaussianInfo {
        &self.prior
    }

    /// Number of local observations folded in so far.
    pub fn observations(&self) -> usize {
        self.observations
    }

    pub fn dim(&self) -> usize {
        self.info.dim()
    }

    /// Additive single-datum information update.
    pub fn local_info_update(
        &self,
        x: &[f64],
        y: &[f64],
        basis: &SharedBasis,
        noise: f64,
        policy: &JitterPolicy,
    ) -> Result<NodeState> {
        let (dxi, domega) = information_increment(basis, x, y, noise, policy)?;
        Ok(NodeState {
            node_id: self.node_id,
            info: GaussianInfo { xi: &self.info.xi + dxi, omega: self.info.omega.add_symmetrized(&domega) },
            prior: Arc::clone(&self.prior),
            observations: self.observations + 1,
        })
    }
}

/// `(Jᵀ S⁻¹ y, Jᵀ S⁻¹ J)` for one observation.
pub fn information_increment(
    basis: &SharedBasis,
    x: &[f64],
    y: &[f64],
    noise: f64,
    policy: &JitterPolicy,
) -> Result<(Vector, Matrix)> {
    let d = basis.output_dim();
    if y.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: y.len() });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteObservation);
    }
    let proj = basis.project(x)?;
    let s = proj.conditional.with_added_diagonal(noise);
    let factor = cholesky_psd(&s, policy)?;
    // S⁻¹ J, shape D × (M·D)
    let s_inv_j = factor.solve(&proj.gain)?;
    let dxi = s_inv_j.tr_mul(&Vector::from_column_slice(y));
    let domega = proj.gain.tr_mul(&s_inv_j);
    Ok((dxi, domega))
}

/// One synchronous consensus round: `θ_i ← Σ_{j ∈ N̄_i} w_ij θ_j` for `θ = ξ, Ω`,
/// every node reading the same pre-round snapshot. Neighbour terms are summed in
/// ascending node order.
pub fn consensus_round(states: &[NodeState], weights: &MetropolisWeights) -> Result<Vec<NodeState>> {
    check_round_inputs(states, weights)?;
    Ok((0..states.len()).map(|i| average_neighborhood(states, weights, i)).collect())
}

/// Node `i`'s share of a consensus round, reading the snapshot `states`.
pub fn consensus_update_node(states: &[NodeState], weights: &MetropolisWeights, i: usize) -> Result<NodeState> {
    check_round_inputs(states, weights)?;
    if i >= states.len() {
        return Err(Error::InvalidParameter("node index out of range"));
    }
    Ok(average_neighborhood(states, weights, i))
}

fn check_round_inputs(states: &[NodeState], weights: &MetropolisWeights) -> Result<()> {
    if states.len() != weights.num_nodes() {
        return Err(Error::DimensionMismatch { expected: weights.num_nodes(), found: states.len() });
    }
    let n = states.first().map_or(0, NodeState::dim);
    if let Some(bad) = states.iter().find(|s| s.dim() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: bad.dim() });
    }
    Ok(())
}

fn average_neighborhood(states: &[NodeState], weights: &MetropolisWeights, i: usize) -> NodeState {
    let s = &states[i];
    let n = s.dim();
    let mut xi = Vector::zeros(n);
    let mut omega = Matrix::zeros(n, n);
    for &j in weights.closed_neighborhood(i) {
        let w = weights.weight(i, j);
        xi.axpy(w, &states[j].info.xi, 1.0);
        omega.zip_apply(states[j].info.omega.as_matrix(), |acc, v| *acc += w * v);
    }
    NodeState {
        node_id: s.node_id,
        info: GaussianInfo { xi, omega: SymMatrix::symmetrized(omega) },
        prior: Arc::clone(&s.prior),
        observations: s.observations,
    }
}

/// Largest entrywise difference of `ξ` or `Ω` between any two nodes.
pub fn disagreement(states: &[NodeState]) -> f64 {
    let Some(first) = states.first() else { return 0.0 };
    let spread = |values: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        hi - lo
    };
    let mut worst: f64 = 0.0;
    for k in 0..first.info.xi.len() {
        worst = worst.max(spread(&mut states.iter().map(|s| s.info.xi[k])));
    }
    let n = first.dim();
    for c in 0..n {
        for r in 0..=c {
            worst = worst.max(spread(&mut states.iter().map(|s| s.info.omega[(r, c)])));
        }
    }
    worst
}

/// When to stop a burst of consensus rounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusControl {
    pub max_rounds: usize,
    /// Stop as soon as [`disagreement`] falls below this.
    pub tolerance: f64,
}

#[derive(Debug, Clone)]
pub struct ConsensusOutcome {
    pub states: Vec<NodeState>,
    /// Disagreement after each executed round.
    pub trace: Vec<f64>,
}

impl ConsensusOutcome {
    pub fn rounds(&self) -> usize {
        self.trace.len()
    }
}

/// Runs rounds until the disagreement is below tolerance or `max_rounds` have executed.
pub fn run_consensus(
    states: Vec<NodeState>,
    weights: &MetropolisWeights,
    control: &ConsensusControl,
) -> Result<ConsensusOutcome> {
    let mut states = states;
    let mut trace = Vec::new();
    let mut current = disagreement(&states);
    while trace.len() < control.max_rounds && !(current < control.tolerance) {
        states = consensus_round(&states, weights)?;
        current = disagreement(&states);
        trace.push(current);
    }
    Ok(ConsensusOutcome { states, trace })
}

/// How the averaged parameters are scaled back to the all-data posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecoveryMode {
    /// `ξ̄ = N_a ξ_i`; exact under the zero prior mean.
    #[default]
    ScaleInformation,
    /// `ξ̄ = ξ_prior + N_a (ξ_i − ξ_prior)`, for a nonzero prior mean.
    ScaleIncrements,
}

#[derive(Debug, Clone)]
pub struct RecoveredPosterior {
    pub node_id: usize,
    pub moments: GaussianMoments,
    pub scaling: usize,
    /// Jitter added to `Ω̄` before inversion, relative to its mean diagonal.
    pub relative_jitter: f64,
}

/// Scales node `s`'s averaged increments by `n_agents` and inverts:
/// `Ω̄ = Ω_prior + N_a (Ω_i − Ω_prior)`, `C = Ω̄⁻¹`, `μ = C ξ̄`.
pub fn recover_global(
    s: &NodeState,
    n_agents: usize,
    mode: RecoveryMode,
    policy: &JitterPolicy,
) -> Result<RecoveredPosterior> {
    if n_agents == 0 {
        return Err(Error::InvalidParameter("agent count must be positive"));
    }
    let scale = n_agents as f64;
    let prior = s.prior();
    let xi = match mode {
        RecoveryMode::ScaleInformation => &s.info.xi * scale,
        RecoveryMode::ScaleIncrements => &prior.xi + (&s.info.xi - &prior.xi) * scale,
    };
    let omega = SymMatrix::symmetrized(
        prior.omega.as_matrix() + (s.info.omega.as_matrix() - prior.omega.as_matrix()) * scale,
    );
    let mean_diag = omega.mean_diagonal();
    let (moments, jitter) = GaussianInfo { xi, omega }.to_moments_reporting(policy)?;
    Ok(RecoveredPosterior {
        node_id: s.node_id,
        moments,
        scaling: n_agents,
        relative_jitter: if mean_diag > 0.0 { jitter / mean_diag } else { jitter },
    })
}

/// When consensus bursts run relative to the data stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConsensusSchedule {
    /// A burst after the local updates of every time step.
    #[default]
    EveryStep,
    /// Local updates over the whole stream, then a single burst.
    AfterStream,
}

/// Network-wide CRMGP configuration shared by all nodes.
#[derive(Debug, Clone)]
pub struct Crmgp {
    pub basis: Arc<SharedBasis>,
    pub weights: MetropolisWeights,
    pub noise: f64,
    pub control: ConsensusControl,
    pub policy: JitterPolicy,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub states: Vec<NodeState>,
    pub trace: Vec<f64>,
    /// Which nodes performed a local update this step.
    pub updated: Vec<bool>,
}

impl Crmgp {
    pub fn num_nodes(&self) -> usize {
        self.weights.num_nodes()
    }

    /// Every node starts from the basis prior in information form.
    pub fn initial_states(&self) -> Vec<NodeState> {
        let prior = Arc::new(self.basis.prior_info());
        (0..self.num_nodes()).map(|i| NodeState::new(i, Arc::clone(&prior))).collect()
    }

    /// Local updates for the nodes with an arrival, then up to `control.max_rounds` consensus rounds.
    pub fn step(&self, states: &[NodeState], arrivals: &[Option<(&[f64], &[f64])>]) -> Result<StepOutcome> {
        self.step_with(states, arrivals, &self.control)
    }

    pub fn step_with(
        &self,
        states: &[NodeState],
        arrivals: &[Option<(&[f64], &[f64])>],
        control: &ConsensusControl,
    ) -> Result<StepOutcome> {
        if arrivals.len() != states.len() {
            return Err(Error::DimensionMismatch { expected: states.len(), found: arrivals.len() });
        }
        let local = self.local_updates(states, arrivals)?;
        let outcome = run_consensus(local, &self.weights, control)?;
        Ok(StepOutcome {
            states: outcome.states,
            trace: outcome.trace,
            updated: arrivals.iter().map(Option::is_some).collect(),
        })
    }

    /// Applies each arrival at its node; nodes without one carry their state forward.
    pub fn local_updates(
        &self,
        states: &[NodeState],
        arrivals: &[Option<(&[f64], &[f64])>],
    ) -> Result<Vec<NodeState>> {
        states
            .iter()
            .zip(arrivals)
            .map(|(s, a)| match a {
                Some((x, y)) => s.local_info_update(x, y, &self.basis, self.noise, &self.policy),
                None => Ok(s.clone()),
            })
            .collect()
    }

    pub fn recover(&self, s: &NodeState, mode: RecoveryMode) -> Result<RecoveredPosterior> {
        recover_global(s, self.num_nodes(), mode, &self.policy)
    }
}

/// Bytes one node sends one neighbour per round: `ξ` plus the upper triangle of `Ω`, as f64.
pub fn payload_bytes(state_dim: usize) -> usize {
    (state_dim + state_dim * (state_dim + 1) / 2) * 8
}

/// Rough flop count of one local information update at state dimension `n = M·D`.
pub fn local_update_flops(state_dim: usize, output_dim: usize) -> u64 {
    let n = state_dim as u64;
    let d = output_dim as u64;
    // gain solve + Ω outer product, conditional + S⁻¹J, Cholesky of S
    3 * n * n * d + 3 * n * d * d + d * d * d
}

/// Rough flop count of one consensus round at a node with `closed_degree` terms.
pub fn consensus_round_flops(state_dim: usize, closed_degree: usize) -> u64 {
    let n = state_dim as u64;
    2 * closed_degree as u64 * (n + n * n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn info(xi: &[f64], omega_diag: &[f64]) -> GaussianInfo {
        GaussianInfo { xi: Vector::from_column_slice(xi), omega: SymMatrix::from_diagonal(omega_diag) }
    }

    #[test]
    fn metropolis_on_path_of_three() {
        let w = MetropolisWeights::new(&NetworkGraph::path(3).unwrap());
        let third = 1.0 / 3.0;
        assert!((w.weight(0, 1) - third).abs() < 1e-15);
        assert!((w.weight(1, 2) - third).abs() < 1e-15);
        assert!((w.weight(0, 0) - 2.0 * third).abs() < 1e-15);
        assert!((w.weight(2, 2) - 2.0 * third).abs() < 1e-15);
        assert!((w.weight(1, 1) - third).abs() < 1e-15);
        assert_eq!(w.weight(0, 2), 0.0);
    }

    #[test]
    fn metropolis_on_complete_graph() {
        let n = 6;
        let w = MetropolisWeights::new(&NetworkGraph::complete(n).unwrap());
        for i in 0..n {
            for j in 0..n {
                assert!((w.weight(i, j) - 1.0 / n as f64).abs() < 1e-15);
            }
        }
        assert!(w.second_largest_eigen_modulus() < 1e-12);
    }

    #[test]
    fn single_node_weight() {
        let w = MetropolisWeights::new(&NetworkGraph::path(1).unwrap());
        assert_eq!(w.matrix(), &Matrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn two_nodes_average_in_one_round() {
        let w = MetropolisWeights::new(&NetworkGraph::complete(2).unwrap());
        let prior = Arc::new(info(&[0.0, 0.0], &[1.0, 1.0]));
        let mut a = NodeState::new(0, Arc::clone(&prior));
        let mut b = NodeState::new(1, prior);
        a.info = info(&[1.0, 4.0], &[2.0, 3.0]);
        b.info = info(&[3.0, -2.0], &[4.0, 1.0]);
        let out = consensus_round(&[a, b], &w).unwrap();
        for s in &out {
            assert_eq!(s.info.xi, Vector::from_column_slice(&[2.0, 1.0]));
            assert_eq!(s.info.omega, SymMatrix::from_diagonal(&[3.0, 2.0]));
        }
        assert!(disagreement(&out) <= 1e-15);
    }

    #[test]
    fn identical_states_are_a_fixed_point() {
        let w = MetropolisWeights::new(&NetworkGraph::ring(5).unwrap());
        let prior = Arc::new(info(&[0.3, -1.2], &[2.0, 0.5]));
        let states: Vec<_> = (0..5).map(|i| NodeState::new(i, Arc::clone(&prior))).collect();
        let out = consensus_round(&states, &w).unwrap();
        for s in &out {
            assert!((&s.info.xi - &prior.xi).abs().max() < 1e-14);
            assert!((s.info.omega.as_matrix() - prior.omega.as_matrix()).abs().max() < 1e-14);
        }
        assert_eq!(disagreement(&states), 0.0);
    }

    #[test]
    fn recovery_with_one_agent_is_plain_inversion() {
        let prior = Arc::new(info(&[0.0, 0.0], &[1.0, 1.0]));
        let mut s = NodeState::new(0, prior);
        s.info = info(&[1.0, 1.0], &[2.0, 4.0]);
        let r = recover_global(&s, 1, RecoveryMode::ScaleInformation, &JitterPolicy::default()).unwrap();
        let direct = s.info.to_moments(&JitterPolicy::default()).unwrap();
        assert_eq!(r.moments, direct);
        assert_eq!(r.relative_jitter, 0.0);
    }

    #[test]
    fn recovery_modes_agree_under_zero_prior_mean() {
        let prior = Arc::new(info(&[0.0, 0.0], &[1.0, 1.0]));
        let mut s = NodeState::new(0, prior);
        s.info = info(&[0.4, -0.2], &[1.5, 1.25]);
        let a = recover_global(&s, 4, RecoveryMode::ScaleInformation, &JitterPolicy::default()).unwrap();
        let b = recover_global(&s, 4, RecoveryMode::ScaleIncrements, &JitterPolicy::default()).unwrap();
        assert_eq!(a.moments, b.moments);
        // Ω̄ = 1 + 4·(0.5, 0.25) = (3, 2)
        assert!((a.moments.cov[(0, 0)] - 1.0 / 3.0).abs() < 1e-15);
        assert!((a.moments.cov[(1, 1)] - 0.5).abs() < 1e-15);
        assert!((a.moments.mean[0] - 1.6 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn payload_layout() {
        assert_eq!(payload_bytes(4), (4 + 10) * 8);
        assert_eq!(payload_bytes(200), (200 + 20_100) * 8);
    }

    #[test]
    fn round_rejects_wrong_node_count() {
        let w = MetropolisWeights::new(&NetworkGraph::ring(3).unwrap());
        let prior = Arc::new(info(&[0.0], &[1.0]));
        let states = alloc::vec![NodeState::new(0, prior)];
        assert!(matches!(consensus_round(&states, &w), Err(Error::DimensionMismatch { .. })));
    }
}
