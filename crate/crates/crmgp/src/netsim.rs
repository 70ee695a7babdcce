//! Lockstep multi-agent simulation of the CRMGP protocol with cost accounting.
//!
//! Every global time step each node folds in its arrival (if any), then the
//! network runs a burst of synchronous consensus rounds. Per step and node the
//! ledger records an operation-count estimate, the bytes sent to neighbours, the
//! rounds executed and, optionally, wall time.

use std::time::Instant;

use crmgp_core::consensus::{
    consensus_round_flops, consensus_update_node, disagreement, local_update_flops, payload_bytes, ConsensusControl,
    ConsensusSchedule, Crmgp, NodeState, RecoveredPosterior, RecoveryMode,
};
use crmgp_core::partition::ArrivalSchedule;
use crmgp_core::points::PointSet;
use crmgp_core::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub schedule: ConsensusSchedule,
    /// Optional drain after the stream (and after the `AfterStream` burst).
    pub final_control: Option<ConsensusControl>,
    pub recovery: RecoveryMode,
    pub record_wall_time: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            schedule: ConsensusSchedule::EveryStep,
            final_control: None,
            recovery: RecoveryMode::ScaleInformation,
            record_wall_time: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LedgerRow {
    pub step: usize,
    pub node: usize,
    pub flops_est: u64,
    pub bytes_sent: u64,
    pub rounds: usize,
    /// Zero unless wall time recording is on.
    pub wall_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunLedger {
    pub rows: Vec<LedgerRow>,
}

impl RunLedger {
    pub fn total_bytes(&self) -> u64 {
        self.rows.iter().map(|r| r.bytes_sent).sum()
    }

    pub fn node_rows(&self, node: usize) -> impl Iterator<Item = &LedgerRow> {
        self.rows.iter().filter(move |r| r.node == node)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    /// 1-based round within the step's burst.
    pub round: usize,
    pub disagreement: f64,
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub states: Vec<NodeState>,
    pub recovered: Vec<RecoveredPosterior>,
    pub ledger: RunLedger,
    pub trace: Vec<TraceRow>,
}

struct Clock(Option<Instant>);

impl Clock {
    fn start(enabled: bool) -> Self {
        Clock(enabled.then(Instant::now))
    }

    fn elapsed_ns(&self) -> u64 {
        self.0.map_or(0, |t| t.elapsed().as_nanos() as u64)
    }
}

/// Drives `net` over `schedule`; data index `k` refers to `inputs.point(k)` and
/// `outputs[k * D..(k + 1) * D]`.
pub fn run_experiment(
    net: &Crmgp,
    schedule: &ArrivalSchedule,
    inputs: &PointSet,
    outputs: &[f64],
    cfg: &SimulationConfig,
) -> Result<SimulationResult> {
    let n_nodes = net.num_nodes();
    if schedule.num_nodes() != n_nodes {
        return Err(Error::DimensionMismatch { expected: n_nodes, found: schedule.num_nodes() });
    }
    let d = net.basis.output_dim();
    if outputs.len() != inputs.len() * d {
        return Err(Error::DimensionMismatch { expected: inputs.len() * d, found: outputs.len() });
    }
    let state_dim = net.basis.state_dim();
    let mut states = net.initial_states();
    let mut ledger = RunLedger::default();
    let mut trace = Vec::new();

    for step in 0..schedule.num_steps() {
        let mut rows = fresh_rows(step, n_nodes);
        let arrivals = schedule.arrivals_at(step);
        let mut next = Vec::with_capacity(n_nodes);
        for (i, s) in states.iter().enumerate() {
            let clock = Clock::start(cfg.record_wall_time);
            let updated = match arrivals[i] {
                Some(k) => {
                    if k >= inputs.len() {
                        return Err(Error::InvalidParameter("arrival index outside the dataset"));
                    }
                    rows[i].flops_est += local_update_flops(state_dim, d);
                    s.local_info_update(inputs.point(k), &outputs[k * d..(k + 1) * d], &net.basis, net.noise, &net.policy)?
                }
                None => s.clone(),
            };
            rows[i].wall_ns += clock.elapsed_ns();
            next.push(updated);
        }
        states = next;
        if cfg.schedule == ConsensusSchedule::EveryStep {
            states = burst(net, states, &net.control, step, &mut rows, &mut trace, cfg.record_wall_time)?;
        }
        ledger.rows.extend(rows);
    }

    let mut tail_step = schedule.num_steps();
    let mut tail = Vec::new();
    if cfg.schedule == ConsensusSchedule::AfterStream {
        tail.push(net.control);
    }
    tail.extend(cfg.final_control);
    for control in tail {
        let mut rows = fresh_rows(tail_step, n_nodes);
        states = burst(net, states, &control, tail_step, &mut rows, &mut trace, cfg.record_wall_time)?;
        ledger.rows.extend(rows);
        tail_step += 1;
    }

    let recovered = states.iter().map(|s| net.recover(s, cfg.recovery)).collect::<Result<Vec<_>>>()?;
    Ok(SimulationResult { states, recovered, ledger, trace })
}

fn fresh_rows(step: usize, n: usize) -> Vec<LedgerRow> {
    (0..n).map(|node| LedgerRow { step, node, ..LedgerRow::default() }).collect()
}

fn burst(
    net: &Crmgp,
    mut states: Vec<NodeState>,
    control: &ConsensusControl,
    step: usize,
    rows: &mut [LedgerRow],
    trace: &mut Vec<TraceRow>,
    record_wall_time: bool,
) -> Result<Vec<NodeState>> {
    let w = &net.weights;
    let state_dim = net.basis.state_dim();
    let payload = payload_bytes(state_dim) as u64;
    let mut current = disagreement(&states);
    let mut round = 0;
    while round < control.max_rounds && !(current < control.tolerance) {
        let mut next = Vec::with_capacity(states.len());
        for i in 0..states.len() {
            let clock = Clock::start(record_wall_time);
            next.push(consensus_update_node(&states, w, i)?);
            let closed = w.closed_neighborhood(i).len();
            let row = &mut rows[i];
            row.wall_ns += clock.elapsed_ns();
            row.rounds += 1;
            row.flops_est += consensus_round_flops(state_dim, closed);
            row.bytes_sent += (closed as u64 - 1) * payload;
        }
        states = next;
        current = disagreement(&states);
        round += 1;
        trace.push(TraceRow { step, round, disagreement: current });
    }
    Ok(states)
}
