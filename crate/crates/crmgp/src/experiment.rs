//! The model suite on the synthetic wind field: independent exact GPs, the exact
//! multi-output GP, the recursive basis GP and its consensus-based distributed
//! version, all evaluated on the same test split and reconstruction grid.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use crmgp_core::basis::SharedBasis;
use crmgp_core::consensus::{ConsensusControl, Crmgp, MetropolisWeights};
use crmgp_core::exact::{ExactGp, Predictor, Sogp};
use crmgp_core::linalg::JitterPolicy;
use crmgp_core::metrics::{error_grid, EvalReport, MarginalPredictions};
use crmgp_core::partition::{partition_data, subsample_indices};
use crmgp_core::points::PointSet;
use crmgp_core::rmgp::{BasisPosterior, RmgpState};
use crmgp_core::windfield::{generate, grid_truth, Dataset, FieldGrid, Split};
use crmgp_core::Vector;
use log::{info, warn};

use crate::config::{ExperimentConfig, ModelKind};
use crate::csvio::{self, write_atomic, CsvTable, Provenance};
use crate::error::{Result, RunError};
use crate::netsim::{run_experiment, SimulationConfig, SimulationResult};

#[derive(Debug, Clone)]
pub struct ModelRun {
    pub model: ModelKind,
    pub report: EvalReport,
    /// Point-major predictive means on the reconstruction grid.
    pub grid_mean: Vec<f64>,
    pub grid_error: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub provenance: Provenance,
    pub dataset: Dataset,
    pub truth_grid: FieldGrid,
    pub runs: Vec<ModelRun>,
    /// Metrics of every node's recovered posterior, when CRMGP ran.
    pub node_reports: Vec<EvalReport>,
    pub simulation: Option<SimulationResult>,
}

impl ExperimentOutcome {
    pub fn run_of(&self, model: ModelKind) -> Option<&ModelRun> {
        self.runs.iter().find(|r| r.model == model)
    }
}

/// Training and evaluation data with the constant prior mean removed from targets.
struct Prepared {
    train_idx: Vec<usize>,
    train_x: PointSet,
    train_y: Vec<f64>,
    test_x: PointSet,
    test_y: Vec<f64>,
    prior_mean: [f64; 2],
}

impl Prepared {
    fn new(data: &Dataset, prior_mean: [f64; 2]) -> Self {
        let train_idx = data.indices(Split::Train);
        let (train_x, raw) = data.subset(Split::Train);
        let train_y = raw.iter().enumerate().map(|(k, v)| v - prior_mean[k % 2]).collect();
        let (test_x, test_y) = data.subset(Split::Test);
        Prepared { train_idx, train_x, train_y, test_x, test_y, prior_mean }
    }

    fn shift(&self, mut mean: Vec<f64>) -> Vec<f64> {
        for (k, m) in mean.iter_mut().enumerate() {
            *m += self.prior_mean[k % 2];
        }
        mean
    }
}

fn evaluate(
    model: ModelKind,
    predictor: &dyn Predictor,
    prep: &Prepared,
    grid: &FieldGrid,
) -> std::result::Result<ModelRun, crmgp_core::Error> {
    let report = report_for(predictor, prep)?;
    let on_grid = predictor.predict_marginals(&grid.points, false)?;
    let grid_mean = prep.shift(on_grid.mean().to_vec());
    let grid_error = error_grid(&grid_mean, &grid.values, 2)?;
    Ok(ModelRun { model, report, grid_mean, grid_error })
}

fn report_for(predictor: &dyn Predictor, prep: &Prepared) -> std::result::Result<EvalReport, crmgp_core::Error> {
    let pred = predictor.predict_marginals(&prep.test_x, true)?;
    let pred = MarginalPredictions::new(2, prep.shift(pred.mean().to_vec()), pred.var().to_vec())?;
    EvalReport::evaluate(&pred, &prep.test_y)
}

fn build_basis(cfg: &ExperimentConfig, prep: &Prepared, policy: &JitterPolicy) -> Result<Arc<SharedBasis>> {
    let points = match cfg.fixed_basis_points() {
        Some(p) => p,
        None => {
            let count = match cfg.basis {
                crate::config::BasisSpec::Subsample { count } => count,
                _ => unreachable!("only subsample bases are drawn from data"),
            };
            let idx = subsample_indices(prep.train_x.len(), count, cfg.seeds.basis.unwrap_or(0))
                .map_err(|e| RunError::Config(format!("basis: {e}")))?;
            prep.train_x.select(&idx)
        }
    };
    let kernel = cfg.kernel()?;
    SharedBasis::new(points, kernel, policy).map(Arc::new).map_err(RunError::numerical("basis"))
}

/// Runs every configured model. `config` is resolved first.
pub fn run(config: ExperimentConfig) -> Result<ExperimentOutcome> {
    let cfg = config.resolve()?;
    let provenance = Provenance { config_hash: cfg.hash(), seed: cfg.seeds.dataset };
    let policy = JitterPolicy::default();
    let wf = cfg.windfield_config();
    let mut dataset = generate(&wf).map_err(|e| RunError::Config(format!("windfield: {e}")))?;
    let truth_grid = grid_truth(&wf, cfg.output.grid_resolution).map_err(|e| RunError::Config(e.to_string()))?;
    let prep = Prepared::new(&dataset, cfg.prior_mean());
    let kernel = cfg.kernel()?;
    let noise = cfg.noise_variance;
    let needs_basis = cfg.models.iter().any(|m| matches!(m, ModelKind::Rmgp | ModelKind::Crmgp));
    let basis = if needs_basis { Some(build_basis(&cfg, &prep, &policy)?) } else { None };

    let mut runs = Vec::new();
    let mut node_reports = Vec::new();
    let mut simulation = None;
    for &model in &cfg.models {
        let started = Instant::now();
        let run = match model {
            ModelKind::Sogp => {
                let kernels = [kernel.marginal(0), kernel.marginal(1)];
                let y = Vector::from_column_slice(&prep.train_y);
                let m = Sogp::fit(&kernels, noise, &prep.train_x, &y, &policy).map_err(RunError::numerical("sogp"))?;
                evaluate(model, &m, &prep, &truth_grid).map_err(RunError::numerical("sogp"))?
            }
            ModelKind::Mogp => {
                let y = Vector::from_column_slice(&prep.train_y);
                let m = ExactGp::fit(kernel.clone(), noise, prep.train_x.clone(), y, &policy)
                    .map_err(RunError::numerical("mogp"))?;
                evaluate(model, &m, &prep, &truth_grid).map_err(RunError::numerical("mogp"))?
            }
            ModelKind::Rmgp => {
                let basis = Arc::clone(basis.as_ref().expect("basis built"));
                let m = RmgpState::new(basis, noise, policy)
                    .and_then(|s| s.update_all(&prep.train_x, &prep.train_y))
                    .map_err(RunError::numerical("rmgp"))?;
                evaluate(model, &m, &prep, &truth_grid).map_err(RunError::numerical("rmgp"))?
            }
            ModelKind::Crmgp => {
                let basis = Arc::clone(basis.as_ref().expect("basis built"));
                let sim = simulate(&cfg, &prep, basis.clone(), &policy)?;
                for (j, owner) in sim.1.iter().enumerate() {
                    dataset.agent[prep.train_idx[j]] = *owner;
                }
                let sim = sim.0;
                let predictor_of = |k: usize| BasisPosterior {
                    basis: Arc::clone(&basis),
                    posterior: sim.recovered[k].moments.clone(),
                    noise,
                };
                if cfg.output.per_node_metrics {
                    node_reports = (0..sim.recovered.len())
                        .map(|k| report_for(&predictor_of(k), &prep))
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(RunError::numerical("crmgp"))?;
                }
                let run = evaluate(model, &predictor_of(cfg.consensus.eval_node), &prep, &truth_grid)
                    .map_err(RunError::numerical("crmgp"))?;
                simulation = Some(sim);
                run
            }
        };
        info!("{model}: done in {:.2?}", started.elapsed());
        runs.push(run);
    }
    Ok(ExperimentOutcome { config: cfg, provenance, dataset, truth_grid, runs, node_reports, simulation })
}

fn simulate(
    cfg: &ExperimentConfig,
    prep: &Prepared,
    basis: Arc<SharedBasis>,
    policy: &JitterPolicy,
) -> Result<(SimulationResult, Vec<Option<usize>>)> {
    let graph = cfg.build_graph()?;
    let schedule = partition_data(&prep.train_x, cfg.agents.count, &cfg.partition_policy())
        .map_err(|e| RunError::Config(format!("agents.partition: {e}")))?;
    let empty = schedule.empty_nodes();
    if !empty.is_empty() {
        warn!("nodes {empty:?} receive no training data");
    }
    let net = Crmgp {
        basis,
        weights: MetropolisWeights::new(&graph),
        noise: cfg.noise_variance,
        control: cfg.consensus.control(),
        policy: *policy,
    };
    let sim_cfg = SimulationConfig {
        schedule: cfg.consensus.schedule(),
        final_control: (cfg.consensus.final_rounds > 0)
            .then_some(ConsensusControl { max_rounds: cfg.consensus.final_rounds, tolerance: cfg.consensus.tolerance }),
        recovery: cfg.consensus.recovery(),
        record_wall_time: cfg.output.record_wall_time,
    };
    let sim = run_experiment(&net, &schedule, &prep.train_x, &prep.train_y, &sim_cfg)
        .map_err(RunError::numerical("consensus"))?;
    Ok((sim, schedule.owners(prep.train_x.len())))
}

/// Writes every artefact of `outcome` into `dir` (created if missing) and returns the paths.
pub fn write_outputs(outcome: &ExperimentOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(RunError::io(dir))?;
    let prov = &outcome.provenance;
    let mut files: Vec<(String, CsvTable)> = Vec::new();
    files.push((
        "metrics.csv".into(),
        csvio::metrics_table(outcome.runs.iter().map(|r| (r.model.name(), &r.report))),
    ));
    let grid = &outcome.truth_grid;
    files.push(("truth.csv".into(), csvio::field_grid_table(&grid.points, &grid.values)));
    for r in &outcome.runs {
        files.push((format!("recon_{}.csv", r.model), csvio::field_grid_table(&grid.points, &r.grid_mean)));
        files.push((format!("err_{}.csv", r.model), csvio::error_grid_table(&grid.points, &r.grid_error)));
    }
    if let Some(sim) = &outcome.simulation {
        files.push(("consensus_trace.csv".into(), csvio::trace_table(&sim.trace)));
        files.push(("ledger.csv".into(), csvio::ledger_table(&sim.ledger)));
        if !outcome.node_reports.is_empty() {
            files.push(("metrics_nodes.csv".into(), csvio::node_metrics_table(&outcome.node_reports)));
        }
    }
    if outcome.config.output.write_dataset {
        files.push(("dataset.csv".into(), csvio::dataset_table(&outcome.dataset)));
    }

    let mut written = Vec::new();
    for (name, table) in files {
        let path = dir.join(name);
        write_atomic(&path, &table.into_bytes(prov))?;
        written.push(path);
    }
    let resolved = format!("{}{}", prov.header_line(), outcome.config.canonical().to_toml());
    let path = dir.join("config.resolved.toml");
    write_atomic(&path, resolved.as_bytes())?;
    written.push(path);
    Ok(written)
}
