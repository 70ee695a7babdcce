//! Declarative experiment configuration (TOML).
//!
//! Only `noise_variance` is required; every other key has a default. `resolve`
//! fills in the values chosen at run time (agent layout, link radius, prior mean)
//! so the echoed config reproduces the run exactly.

use std::fmt;
use std::path::{Path, PathBuf};

use crmgp_core::consensus::{ConsensusControl, ConsensusSchedule, RecoveryMode};
use crmgp_core::graph::{smallest_connecting_radius, NetworkGraph, Topology};
use crmgp_core::kernels::{LmcParams, Matern32};
use crmgp_core::partition::PartitionPolicy;
use crmgp_core::points::PointSet;
use crmgp_core::windfield::{Turbine, WindFieldConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, RunError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Sogp,
    Mogp,
    Rmgp,
    Crmgp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Sogp, ModelKind::Mogp, ModelKind::Rmgp, ModelKind::Crmgp];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Sogp => "sogp",
            ModelKind::Mogp => "mogp",
            ModelKind::Rmgp => "rmgp",
            ModelKind::Crmgp => "crmgp",
        }
    }

    pub fn parse(s: &str) -> Result<ModelKind> {
        ModelKind::ALL.into_iter().find(|m| m.name() == s.trim()).ok_or_else(|| {
            let valid: Vec<_> = ModelKind::ALL.iter().map(|m| m.name()).collect();
            RunError::Config(format!("unknown model `{}`; valid models are: {}", s.trim(), valid.join(", ")))
        })
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Observation noise variance used by every model.
    pub noise_variance: f64,
    /// Constant prior mean `(U, V)` subtracted before modelling; defaults to the freestream.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_mean: Option<[f64; 2]>,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    /// Where outputs go; not part of the experiment identity, so left out of the hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub windfield: WindfieldSection,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub basis: BasisSpec,
    #[serde(default)]
    pub agents: AgentsSection,
    #[serde(default)]
    pub consensus: ConsensusSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_models() -> Vec<ModelKind> {
    ModelKind::ALL.to_vec()
}


/// Seeds of the random streams. `dataset` is always needed; the others only when
/// a randomized option refers to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub dataset: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<u64>,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds { dataset: 7, partition: Some(11), graph: Some(13), basis: Some(17) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurbineSpec {
    pub position: [f64; 2],
    pub rotor_radius: f64,
    pub wake_expansion: f64,
    pub thrust_deficit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindfieldSection {
    pub domain: [f64; 4],
    pub freestream: [f64; 2],
    pub lateral_gain: f64,
    pub noise_std: f64,
    pub n_total: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub turbines: Vec<TurbineSpec>,
}

impl Default for WindfieldSection {
    fn default() -> Self {
        let d = WindFieldConfig::default();
        WindfieldSection {
            domain: d.domain,
            freestream: d.freestream,
            lateral_gain: d.lateral_gain,
            noise_std: d.noise_std,
            n_total: d.n_total,
            n_train: d.n_train,
            n_test: d.n_test,
            turbines: d
                .turbines
                .iter()
                .map(|t| TurbineSpec {
                    position: t.position,
                    rotor_radius: t.rotor_radius,
                    wake_expansion: t.wake_expansion,
                    thrust_deficit: t.thrust_deficit,
                })
                .collect(),
        }
    }
}

impl WindfieldSection {
    pub fn to_core(&self, seed: u64) -> WindFieldConfig {
        WindFieldConfig {
            domain: self.domain,
            freestream: self.freestream,
            turbines: self
                .turbines
                .iter()
                .map(|t| Turbine {
                    position: t.position,
                    rotor_radius: t.rotor_radius,
                    wake_expansion: t.wake_expansion,
                    thrust_deficit: t.thrust_deficit,
                })
                .collect(),
            lateral_gain: self.lateral_gain,
            noise_std: self.noise_std,
            n_total: self.n_total,
            n_train: self.n_train,
            n_test: self.n_test,
            seed,
        }
    }
}

/// One latent Matérn 3/2 component and its coregionalization vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub variance: f64,
    pub lengthscale: f64,
    pub coreg: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    pub components: Vec<ComponentSpec>,
}

impl Default for KernelSection {
    // Best batch marginal likelihood on the default data over the grid in examples/tune_kernel.rs.
    fn default() -> Self {
        KernelSection {
            components: vec![
                ComponentSpec { variance: 0.1, lengthscale: 0.15, coreg: vec![1.0, 0.2] },
                ComponentSpec { variance: 0.05, lengthscale: 0.15, coreg: vec![-0.2, 1.0] },
            ],
        }
    }
}

impl KernelSection {
    pub fn to_core(&self) -> Result<LmcParams> {
        let components = self
            .components
            .iter()
            .enumerate()
            .map(|(q, c)| {
                Matern32::new(c.variance, c.lengthscale)
                    .map_err(|e| RunError::Config(format!("kernel.components[{q}]: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let coreg = self.components.iter().map(|c| c.coreg.clone()).collect();
        let lmc = LmcParams::new(components, coreg).map_err(|e| RunError::Config(format!("kernel: {e}")))?;
        if lmc.output_dim() != 2 {
            return Err(RunError::Config(format!(
                "kernel: coregionalization vectors must have 2 entries (U, V), found {}",
                lmc.output_dim()
            )));
        }
        Ok(lmc)
    }
}

/// Placement of the shared basis inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BasisSpec {
    /// Cell-centred `size × size` grid over the domain.
    Grid { size: usize },
    Explicit { points: Vec<[f64; 2]> },
    /// `count` distinct training inputs drawn with `seeds.basis`.
    Subsample { count: usize },
}

impl Default for BasisSpec {
    fn default() -> Self {
        BasisSpec::Grid { size: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Complete,
    Ring,
    Path,
    RandomGeometric,
    Geometric,
    EdgeList,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionKind {
    RandomUniform,
    SpatialVoronoi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentsSection {
    pub count: usize,
    pub topology: TopologyKind,
    pub partition: PartitionKind,
    /// Link radius for geometric topologies; chosen automatically when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Agent positions; a centred hexagon layout when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<[usize; 2]>>,
}

impl Default for AgentsSection {
    fn default() -> Self {
        AgentsSection {
            count: 7,
            topology: TopologyKind::Geometric,
            partition: PartitionKind::SpatialVoronoi,
            radius: None,
            positions: None,
            edges: None,
        }
    }
}

/// Candidate link radii tried, smallest first, when none is configured.
pub fn radius_candidates() -> Vec<f64> {
    (1..=30).map(|k| k as f64 / 20.0).collect()
}

/// Node 0 at the centre of the domain, the rest evenly spaced on a circle around it.
pub fn default_agent_positions(count: usize, domain: [f64; 4]) -> Vec<[f64; 2]> {
    let [x0, x1, y0, y1] = domain;
    let centre = [0.5 * (x0 + x1), 0.5 * (y0 + y1)];
    let radius = 0.28 * (x1 - x0).min(y1 - y0);
    let ring = count.saturating_sub(1);
    let mut out = vec![centre];
    for k in 0..ring {
        let angle = 2.0 * std::f64::consts::PI * k as f64 / ring as f64;
        out.push([centre[0] + radius * angle.cos(), centre[1] + radius * angle.sin()]);
    }
    out.truncate(count);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    EveryStep,
    AfterStream,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryKind {
    ScaleInformation,
    ScaleIncrements,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConsensusSection {
    /// Maximum rounds per burst.
    pub rounds: usize,
    pub tolerance: f64,
    pub schedule: ScheduleKind,
    /// Extra rounds after the stream ends, on top of the regular bursts.
    pub final_rounds: usize,
    pub recovery: RecoveryKind,
    /// Node whose recovered posterior fills the `crmgp` metrics row.
    pub eval_node: usize,
}

impl Default for ConsensusSection {
    fn default() -> Self {
        ConsensusSection {
            rounds: 20,
            tolerance: 1e-9,
            schedule: ScheduleKind::EveryStep,
            final_rounds: 0,
            recovery: RecoveryKind::ScaleInformation,
            eval_node: 0,
        }
    }
}

impl ConsensusSection {
    pub fn control(&self) -> ConsensusControl {
        ConsensusControl { max_rounds: self.rounds, tolerance: self.tolerance }
    }

    pub fn schedule(&self) -> ConsensusSchedule {
        match self.schedule {
            ScheduleKind::EveryStep => ConsensusSchedule::EveryStep,
            ScheduleKind::AfterStream => ConsensusSchedule::AfterStream,
        }
    }

    pub fn recovery(&self) -> RecoveryMode {
        match self.recovery {
            RecoveryKind::ScaleInformation => RecoveryMode::ScaleInformation,
            RecoveryKind::ScaleIncrements => RecoveryMode::ScaleIncrements,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Reconstruction grids are `grid_resolution × grid_resolution`.
    pub grid_resolution: usize,
    /// Wall-clock timings make the ledger nondeterministic, so they are off by default.
    pub record_wall_time: bool,
    /// Also write `metrics_nodes.csv` with every node's recovered-posterior metrics.
    pub per_node_metrics: bool,
    pub write_dataset: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { grid_resolution: 30, record_wall_time: false, per_node_metrics: true, write_dataset: true }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub models: Option<Vec<ModelKind>>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        ExperimentConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The seed override replaces every seed stream.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(dir) = &o.output_dir {
            self.output_dir = Some(dir.clone());
        }
        if let Some(seed) = o.seed {
            self.seeds = Seeds { dataset: seed, partition: Some(seed), graph: Some(seed), basis: Some(seed) };
        }
        if let Some(models) = &o.models {
            self.models = models.clone();
        }
    }

    /// Checks invariants and fills run-time defaults.
    pub fn resolve(mut self) -> Result<ExperimentConfig> {
        if !(self.noise_variance > 0.0 && self.noise_variance.is_finite()) {
            return Err(RunError::Config("noise_variance must be positive".into()));
        }
        if self.models.is_empty() {
            return Err(RunError::Config("models must name at least one of: sogp, mogp, rmgp, crmgp".into()));
        }
        let mut seen = Vec::new();
        self.models.retain(|m| {
            let fresh = !seen.contains(m);
            seen.push(*m);
            fresh
        });
        self.windfield
            .to_core(self.seeds.dataset)
            .validate()
            .map_err(|e| RunError::Config(format!("windfield: {e}")))?;
        self.kernel.to_core()?;
        self.prior_mean.get_or_insert(self.windfield.freestream);

        match &self.basis {
            BasisSpec::Grid { size } if *size == 0 => return Err(RunError::Config("basis.size must be ≥ 1".into())),
            BasisSpec::Explicit { points } if points.is_empty() => {
                return Err(RunError::Config("basis.points must be nonempty".into()))
            }
            BasisSpec::Subsample { count } => {
                if *count == 0 || *count > self.windfield.n_train {
                    return Err(RunError::Config("basis.count must lie in 1..=windfield.n_train".into()));
                }
                if self.seeds.basis.is_none() {
                    return Err(RunError::Config("basis kind `subsample` needs seeds.basis".into()));
                }
            }
            _ => {}
        }

        let a = &mut self.agents;
        if a.count == 0 {
            return Err(RunError::Config("agents.count must be ≥ 1".into()));
        }
        if a.partition == PartitionKind::RandomUniform && self.seeds.partition.is_none() {
            return Err(RunError::Config("agents.partition `random_uniform` needs seeds.partition".into()));
        }
        if a.topology == TopologyKind::RandomGeometric && self.seeds.graph.is_none() {
            return Err(RunError::Config("agents.topology `random_geometric` needs seeds.graph".into()));
        }
        if a.topology == TopologyKind::EdgeList && a.edges.is_none() {
            return Err(RunError::Config("agents.topology `edge_list` needs agents.edges".into()));
        }
        let positions = a.positions.get_or_insert_with(|| default_agent_positions(a.count, self.windfield.domain));
        if positions.len() != a.count {
            return Err(RunError::Config(format!(
                "agents.positions has {} entries but agents.count is {}",
                positions.len(),
                a.count
            )));
        }
        match a.topology {
            TopologyKind::Geometric if a.radius.is_none() => {
                let r = smallest_connecting_radius(positions, &radius_candidates()).ok_or_else(|| {
                    RunError::Config("no candidate radius connects the agent positions; set agents.radius".into())
                })?;
                a.radius = Some(r);
            }
            TopologyKind::RandomGeometric if a.radius.is_none() => {
                return Err(RunError::Config("agents.topology `random_geometric` needs agents.radius".into()))
            }
            _ => {}
        }
        if self.consensus.eval_node >= a.count {
            return Err(RunError::Config("consensus.eval_node must be a valid node index".into()));
        }
        if !(self.consensus.tolerance >= 0.0) {
            return Err(RunError::Config("consensus.tolerance must be non-negative".into()));
        }
        if self.output.grid_resolution == 0 {
            return Err(RunError::Config("output.grid_resolution must be ≥ 1".into()));
        }
        self.build_graph()?;
        Ok(self)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// This config without the output location.
    pub fn canonical(&self) -> ExperimentConfig {
        ExperimentConfig { output_dir: None, ..self.clone() }
    }

    pub fn windfield_config(&self) -> WindFieldConfig {
        self.windfield.to_core(self.seeds.dataset)
    }

    pub fn kernel(&self) -> Result<LmcParams> {
        self.kernel.to_core()
    }

    pub fn prior_mean(&self) -> [f64; 2] {
        self.prior_mean.unwrap_or(self.windfield.freestream)
    }

    fn agent_positions(&self) -> Vec<[f64; 2]> {
        self.agents
            .positions
            .clone()
            .unwrap_or_else(|| default_agent_positions(self.agents.count, self.windfield.domain))
    }

    pub fn topology(&self) -> Topology {
        let a = &self.agents;
        match a.topology {
            TopologyKind::Complete => Topology::Complete,
            TopologyKind::Ring => Topology::Ring,
            TopologyKind::Path => Topology::Path,
            TopologyKind::RandomGeometric => Topology::RandomGeometric {
                radius: a.radius.unwrap_or(0.0),
                seed: self.seeds.graph.unwrap_or(0),
            },
            TopologyKind::Geometric => {
                Topology::Geometric { positions: self.agent_positions(), radius: a.radius.unwrap_or(0.0) }
            }
            TopologyKind::EdgeList => Topology::EdgeList(
                a.edges.as_deref().unwrap_or_default().iter().map(|e| (e[0], e[1])).collect(),
            ),
        }
    }

    pub fn build_graph(&self) -> Result<NetworkGraph> {
        NetworkGraph::build(&self.topology(), self.agents.count)
            .map_err(|e| RunError::Config(format!("agents: {e}")))
    }

    pub fn partition_policy(&self) -> PartitionPolicy {
        match self.agents.partition {
            PartitionKind::RandomUniform => {
                PartitionPolicy::RandomUniform { seed: self.seeds.partition.unwrap_or(0) }
            }
            PartitionKind::SpatialVoronoi => PartitionPolicy::SpatialVoronoi { agent_positions: self.agent_positions() },
        }
    }

    /// Explicit basis inputs, or `None` when they are drawn from the training set.
    pub fn fixed_basis_points(&self) -> Option<PointSet> {
        match &self.basis {
            BasisSpec::Grid { size } => Some(PointSet::grid_2d(self.windfield.domain, *size)),
            BasisSpec::Explicit { points } => Some(PointSet::from_points(2, points).expect("2-D points")),
            BasisSpec::Subsample { .. } => None,
        }
    }

    /// SHA-256 of the canonical TOML of this config, hex-encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
