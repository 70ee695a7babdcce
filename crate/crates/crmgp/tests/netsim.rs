use std::sync::Arc;

use crmgp::netsim::{run_experiment, SimulationConfig};
use crmgp_core::basis::SharedBasis;
use crmgp_core::consensus::{
    consensus_round_flops, local_update_flops, payload_bytes, run_consensus, ConsensusControl, ConsensusSchedule,
    Crmgp, MetropolisWeights, RecoveryMode,
};
use crmgp_core::graph::NetworkGraph;
use crmgp_core::kernels::{LmcParams, Matern32};
use crmgp_core::linalg::JitterPolicy;
use crmgp_core::partition::{partition_data, ArrivalSchedule, PartitionPolicy};
use crmgp_core::points::PointSet;

fn kernel() -> LmcParams {
    LmcParams::new(
        vec![Matern32::new(1.0, 0.3).unwrap(), Matern32::new(0.5, 0.2).unwrap()],
        vec![vec![1.0, 0.3], vec![-0.2, 1.0]],
    )
    .unwrap()
}

fn network(graph: &NetworkGraph, control: ConsensusControl) -> Crmgp {
    let basis = SharedBasis::new(PointSet::grid_2d([0.0, 1.0, 0.0, 1.0], 3), kernel(), &JitterPolicy::default()).unwrap();
    Crmgp {
        basis: Arc::new(basis),
        weights: MetropolisWeights::new(graph),
        noise: 0.01,
        control,
        policy: JitterPolicy::default(),
    }
}

fn data(n: usize) -> (PointSet, Vec<f64>) {
    let pts: Vec<[f64; 2]> = (0..n).map(|i| [(i as f64 * 0.37) % 1.0, (i as f64 * 0.61) % 1.0]).collect();
    let y = pts.iter().flat_map(|p| [(3.0 * p[0]).sin(), p[1] * p[0] - 0.2]).collect();
    (PointSet::from_points(2, &pts).unwrap(), y)
}

const FIXED_ROUNDS: ConsensusControl = ConsensusControl { max_rounds: 5, tolerance: 0.0 };

#[test]
fn empty_schedule_recovers_the_prior() {
    let g = NetworkGraph::ring(5).unwrap();
    let net = network(&g, FIXED_ROUNDS);
    let (x, y) = data(0);
    let out = run_experiment(&net, &ArrivalSchedule::empty(5), &x, &y, &SimulationConfig::default()).unwrap();
    assert!(out.ledger.rows.is_empty());
    assert!(out.trace.is_empty());
    let prior = net.basis.prior_moments();
    for r in &out.recovered {
        let mean_err = r.moments.mean.amax();
        let cov_err = (r.moments.cov.as_matrix() - prior.cov.as_matrix()).amax();
        assert!(mean_err == 0.0, "{mean_err}");
        assert!(cov_err <= 1e-9, "{cov_err}");
    }
}

#[test]
fn replay_is_bitwise_identical() {
    let g = NetworkGraph::random_geometric(6, 0.6, 3).unwrap();
    let net = network(&g, ConsensusControl { max_rounds: 4, tolerance: 1e-9 });
    let (x, y) = data(40);
    let schedule = partition_data(&x, 6, &PartitionPolicy::RandomUniform { seed: 9 }).unwrap();
    let cfg = SimulationConfig { final_control: Some(FIXED_ROUNDS), ..SimulationConfig::default() };
    let a = run_experiment(&net, &schedule, &x, &y, &cfg).unwrap();
    let b = run_experiment(&net, &schedule, &x, &y, &cfg).unwrap();
    assert_eq!(a.ledger, b.ledger);
    assert_eq!(a.trace, b.trace);
    for (p, q) in a.recovered.iter().zip(&b.recovered) {
        assert_eq!(p.moments.mean, q.moments.mean);
        assert_eq!(p.moments.cov.as_matrix(), q.moments.cov.as_matrix());
    }
}

#[test]
fn bytes_follow_payload_arithmetic() {
    let g = NetworkGraph::path(4).unwrap();
    let net = network(&g, FIXED_ROUNDS);
    let (x, y) = data(12);
    let schedule = partition_data(&x, 4, &PartitionPolicy::RandomUniform { seed: 1 }).unwrap();
    let out = run_experiment(&net, &schedule, &x, &y, &SimulationConfig::default()).unwrap();
    // M = 9, D = 2: n = 18, payload = (18 + 171) * 8
    let n = 18;
    assert_eq!(payload_bytes(n), (n + n * (n + 1) / 2) * 8);
    assert_eq!(payload_bytes(n), 1512);
    for r in &out.ledger.rows {
        assert_eq!(r.bytes_sent, (r.rounds * g.degree(r.node) * payload_bytes(n)) as u64);
    }
    assert_eq!(out.ledger.rows.len(), schedule.num_steps() * 4);
}

#[test]
fn per_step_cost_is_constant_in_time() {
    let g = NetworkGraph::complete(3).unwrap();
    let net = network(&g, FIXED_ROUNDS);
    let (x, y) = data(30);
    let schedule = ArrivalSchedule::sequential(vec![(0..10).collect(), (10..20).collect(), (20..30).collect()]);
    let out = run_experiment(&net, &schedule, &x, &y, &SimulationConfig::default()).unwrap();
    let expected = local_update_flops(18, 2) + 5 * consensus_round_flops(18, 3);
    assert!(out.ledger.rows.iter().all(|r| r.flops_est == expected && r.rounds == 5));
    assert!(out.ledger.rows.iter().all(|r| r.wall_ns == 0));
}

#[test]
fn bursts_match_the_reference_consensus_loop() {
    let g = NetworkGraph::ring(5).unwrap();
    let control = ConsensusControl { max_rounds: 7, tolerance: 1e-6 };
    let net = network(&g, control);
    let (x, y) = data(5);
    let schedule = ArrivalSchedule::sequential((0..5).map(|i| vec![i]).collect());
    let out = run_experiment(&net, &schedule, &x, &y, &SimulationConfig::default()).unwrap();

    let arrivals: Vec<_> = (0..5).map(|i| Some((x.point(i), &y[2 * i..2 * i + 2]))).collect();
    let local = net.local_updates(&net.initial_states(), &arrivals).unwrap();
    let reference = run_consensus(local, &net.weights, &control).unwrap();
    assert_eq!(out.states, reference.states);
    let trace: Vec<f64> = out.trace.iter().map(|t| t.disagreement).collect();
    assert_eq!(trace, reference.trace);
}

#[test]
fn after_stream_schedule_runs_one_tail_burst() {
    let g = NetworkGraph::ring(4).unwrap();
    let net = network(&g, FIXED_ROUNDS);
    let (x, y) = data(16);
    let schedule = partition_data(&x, 4, &PartitionPolicy::RandomUniform { seed: 5 }).unwrap();
    let cfg = SimulationConfig {
        schedule: ConsensusSchedule::AfterStream,
        recovery: RecoveryMode::ScaleInformation,
        ..SimulationConfig::default()
    };
    let out = run_experiment(&net, &schedule, &x, &y, &cfg).unwrap();
    let steps = schedule.num_steps();
    for r in &out.ledger.rows {
        assert_eq!(r.rounds, if r.step == steps { 5 } else { 0 });
    }
    assert!(out.trace.iter().all(|t| t.step == steps));
    assert_eq!(out.trace.len(), 5);
}

#[test]
fn mismatched_schedule_is_rejected() {
    let g = NetworkGraph::ring(4).unwrap();
    let net = network(&g, FIXED_ROUNDS);
    let (x, y) = data(4);
    assert!(run_experiment(&net, &ArrivalSchedule::empty(3), &x, &y, &SimulationConfig::default()).is_err());
    let bad = ArrivalSchedule::sequential(vec![vec![9], vec![], vec![], vec![]]);
    assert!(run_experiment(&net, &bad, &x, &y, &SimulationConfig::default()).is_err());
}
