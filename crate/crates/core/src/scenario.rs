//! Scenario files: the strict on-disk schema and its validated runtime form.
//!
//! A scenario is a TOML document declaring everything a run needs: topology,
//! dynamics, formation offsets, gains, basis layout, leader trajectory,
//! disturbances, attacks, initial states, and the bound-calibration policy.
//! Parsing is strict — unknown keys are rejected so typos cannot silently
//! change a run — and all physical quantities carry their unit in the field
//! name (`_s` for seconds). Agent indices in files are 1-based, matching the
//! edge convention; they are converted to 0-based internally.
//!
//! [`ScenarioFile`] is the raw serde image of the document;
//! [`ScenarioFile::validate`] produces the checked [`Scenario`] used by the
//! simulator, and [`Scenario::to_file`] inverts it so that
//! parse → serialize → parse is the identity on validated scenarios.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::attack::{AttackError, AttackKind, AttackSpec};
use crate::formation::{ControlGains, FormationError, FormationSpec};
use crate::graph::{DirectedWeightedGraph, Edge, GraphError};
use crate::rbf::{RbfBasis, RbfError, TuningParams};
use crate::signal::{SignalError, TermSpec, VectorSignal};
use crate::sim::Dynamics;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("scenario file does not parse: {0}")]
    Parse(String),
    #[error("unsupported schema_version {got}; this build reads version {SCHEMA_VERSION}")]
    Version { got: u32 },
    #[error("sample period must be positive and finite (got {0} s)")]
    BadSamplePeriod(f64),
    #[error("horizon must be at least 1 step (got {0})")]
    BadHorizon(u64),
    #[error("state dimension must be at least 1")]
    BadStateDim,
    #[error("{what} has dimension {got}, expected the state dimension {expected}")]
    DimMismatch { what: String, got: usize, expected: usize },
    #[error("{what} lists {got} agents, expected {expected}")]
    AgentCount { what: &'static str, got: usize, expected: usize },
    #[error("agent index {index} in {what} is out of range 1..={n_agents}")]
    AgentIndex { what: &'static str, index: usize, n_agents: usize },
    #[error("agent {agent} has more than one disturbance entry")]
    DuplicateDisturbance { agent: usize },
    #[error("unknown dynamics kind '{0}'; known kinds: saturating_cross, linear")]
    UnknownDynamics(String),
    #[error("dynamics '{kind}' does not accept a matrix")]
    ForeignMatrix { kind: &'static str },
    #[error("linear dynamics requires a square state_dim x state_dim matrix")]
    BadLinearMatrix,
    #[error("saturating_cross dynamics is defined for state dimension 2 (got {0})")]
    SaturatingCrossDim(usize),
    #[error("bounds source must be \"auto\" or \"file\" (got '{0}')")]
    BadBoundsSource(String),
    #[error("bounds source \"file\" requires a `file` path")]
    MissingBoundsFile,
    #[error("bounds source \"auto\" does not accept a `file` path")]
    ForeignBoundsFile,
    #[error("safety factor must be at least 1 (got {0})")]
    BadSafetyFactor(f64),
    #[error("transient cutoff must be non-negative and inside the horizon (got {0} s)")]
    BadTransientCutoff(f64),
    #[error("reference threshold must be positive and finite (got {0})")]
    BadReferencePi(f64),
    #[error("unknown attack kind '{0}'; known kinds: actuator, sensor, neighbour")]
    UnknownAttackKind(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Formation(#[from] FormationError),
    #[error(transparent)]
    Rbf(#[from] RbfError),
    #[error(transparent)]
    Attack(#[from] AttackError),
}

// ---- Raw file schema ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub simulation: SimulationSection,
    pub topology: TopologySection,
    pub dynamics: DynamicsSection,
    pub formation: FormationSection,
    pub gains: GainsSection,
    pub tuning: TuningSection,
    pub rbf: RbfSection,
    pub leader: LeaderSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub disturbances: Vec<DisturbanceSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attacks: Vec<AttackSection>,
    pub initial: InitialSection,
    pub bounds: BoundsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    /// Sample period `T` in seconds; `t = step · T`.
    pub sample_period_s: f64,
    /// Number of steps to simulate.
    pub horizon_steps: u64,
    /// State dimension `n` of every agent and the leader.
    pub state_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub n_agents: usize,
    /// Directed edges `from → to` (1-based agent indices): `to` receives
    /// `from`'s state with the given weight.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<EdgeSection>,
    /// Leader pinning gain per agent (0 = cannot see the leader).
    pub pin_gains: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSection {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    /// Registered kind: `saturating_cross` or `linear`.
    pub kind: String,
    /// `linear` only: the state matrix, row-major.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormationSection {
    /// Desired offset of each agent relative to the leader.
    pub offsets: Vec<Vec<f64>>,
    /// Declared bound on the stacked offset norm.
    pub offset_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    /// Error-feedback gain `k` (scalar multiple of identity, every agent).
    pub error_feedback: f64,
    /// Coupling gain `c`.
    pub coupling: f64,
    /// Observer gain `G` (scalar multiple of identity, every agent).
    pub observer: f64,
    /// Run even if a gain condition fails (a warning is still issued).
    #[serde(default)]
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSection {
    pub learning_rate: f64,
    pub leak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbfSection {
    pub grid_min: Vec<f64>,
    pub grid_max: Vec<f64>,
    pub grid_counts: Vec<usize>,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeaderSection {
    /// One term list per state component; evaluated at `t` in seconds.
    pub trajectory: Vec<Vec<TermSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSection {
    /// 1-based agent index.
    pub agent: usize,
    pub signal: Vec<Vec<TermSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    pub id: String,
    /// `actuator`, `sensor`, or `neighbour`.
    pub kind: String,
    /// 1-based receiving agent.
    pub target: usize,
    /// Neighbour attacks only: 1-based source agent of the corrupted edge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<usize>,
    /// Activity window `[start, end]` in seconds, ends inclusive.
    pub window_s: [f64; 2],
    pub signal: Vec<Vec<TermSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// Initial state per agent.
    pub states: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    /// `auto` (calibrate from an attack-free run) or `file`.
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(default = "default_safety_factor")]
    pub safety_factor: f64,
    /// Steady state starts here; earlier samples are transient.
    #[serde(default = "default_transient_cutoff")]
    pub transient_cutoff_s: f64,
    /// Optional externally published threshold recorded for comparison.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_pi: Option<f64>,
}

fn default_safety_factor() -> f64 {
    1.2
}

fn default_transient_cutoff() -> f64 {
    10.0
}

// ---- Validated runtime form ----

/// The regular-grid basis layout as declared, kept alongside the constructed
/// basis so scenarios serialize back to their declaration.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub counts: Vec<usize>,
    pub width: f64,
}

/// Where the threshold's bound constants come from.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundsSource {
    /// Calibrate from an attack-free run of this scenario.
    Auto,
    /// Load a previously written bound-set file.
    File(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsConfig {
    pub source: BoundsSource,
    pub safety_factor: f64,
    /// Seconds of initial transient excluded from calibration and steady
    /// -state checks.
    pub transient_cutoff_s: f64,
    pub reference_pi: Option<f64>,
}

/// A fully validated scenario, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: Option<String>,
    pub state_dim: usize,
    pub sample_period: f64,
    pub horizon: usize,
    pub graph: DirectedWeightedGraph,
    pub dynamics: Dynamics,
    pub formation: FormationSpec,
    pub gains: ControlGains,
    pub force_gains: bool,
    pub tuning: TuningParams,
    pub basis: RbfBasis,
    pub rbf_layout: GridLayout,
    pub leader: VectorSignal,
    /// One signal per agent; zero when the file declares none.
    pub disturbances: Vec<VectorSignal>,
    pub attacks: Vec<AttackSpec>,
    pub initial_states: Vec<DVector<f64>>,
    pub bounds: BoundsConfig,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        ScenarioFile::from_toml_str(text)?.validate()
    }

    pub fn n_agents(&self) -> usize {
        self.graph.n_agents()
    }

    pub fn horizon_seconds(&self) -> f64 {
        self.horizon as f64 * self.sample_period
    }

    /// Transient cutoff as a step index (samples before it are transient).
    pub fn transient_cutoff_step(&self) -> usize {
        ((self.bounds.transient_cutoff_s / self.sample_period).ceil() as usize).min(self.horizon)
    }

    /// The same scenario with every attack removed (calibration runs).
    pub fn without_attacks(&self) -> Self {
        let mut clean = self.clone();
        clean.attacks.clear();
        clean
    }

    /// Inverse of [`ScenarioFile::validate`].
    pub fn to_file(&self) -> ScenarioFile {
        let (dynamics_kind, matrix) = match &self.dynamics {
            Dynamics::SaturatingCross => ("saturating_cross".to_string(), None),
            Dynamics::Linear { matrix } => (
                "linear".to_string(),
                Some(
                    matrix
                        .row_iter()
                        .map(|row| row.iter().copied().collect())
                        .collect::<Vec<Vec<f64>>>(),
                ),
            ),
        };
        ScenarioFile {
            schema_version: SCHEMA_VERSION,
            name: self.name.clone(),
            description: self.description.clone(),
            simulation: SimulationSection {
                sample_period_s: self.sample_period,
                horizon_steps: self.horizon as u64,
                state_dim: self.state_dim,
            },
            topology: TopologySection {
                n_agents: self.n_agents(),
                edges: self
                    .graph
                    .edges()
                    .into_iter()
                    .map(|e| EdgeSection { from: e.from, to: e.to, weight: e.weight })
                    .collect(),
                pin_gains: (0..self.n_agents()).map(|i| self.graph.pin_gain(i)).collect(),
            },
            dynamics: DynamicsSection { kind: dynamics_kind, matrix },
            formation: FormationSection {
                offsets: self
                    .formation
                    .offsets()
                    .iter()
                    .map(|d| d.iter().copied().collect())
                    .collect(),
                offset_bound: self.formation.offset_bound(),
            },
            gains: GainsSection {
                error_feedback: self.gains.feedback(0)[0],
                coupling: self.gains.coupling(),
                observer: self.gains.observer(0)[0],
                force: self.force_gains,
            },
            tuning: TuningSection {
                learning_rate: self.tuning.learning_rate,
                leak: self.tuning.leak,
            },
            rbf: RbfSection {
                grid_min: self.rbf_layout.min.clone(),
                grid_max: self.rbf_layout.max.clone(),
                grid_counts: self.rbf_layout.counts.clone(),
                width: self.rbf_layout.width,
            },
            leader: LeaderSection { trajectory: self.leader.to_specs() },
            disturbances: self
                .disturbances
                .iter()
                .enumerate()
                .filter(|(_, signal)| !signal.is_zero())
                .map(|(i, signal)| DisturbanceSection {
                    agent: i + 1,
                    signal: signal.to_specs(),
                })
                .collect(),
            attacks: self
                .attacks
                .iter()
                .map(|a| AttackSection {
                    id: a.id.clone(),
                    kind: a.kind.label().to_string(),
                    target: a.target + 1,
                    source: a.source.map(|s| s + 1),
                    window_s: [a.window.0, a.window.1],
                    signal: a.signal.to_specs(),
                })
                .collect(),
            initial: InitialSection {
                states: self
                    .initial_states
                    .iter()
                    .map(|x| x.iter().copied().collect())
                    .collect(),
            },
            bounds: BoundsSection {
                source: match &self.bounds.source {
                    BoundsSource::Auto => "auto".to_string(),
                    BoundsSource::File(_) => "file".to_string(),
                },
                file: match &self.bounds.source {
                    BoundsSource::Auto => None,
                    BoundsSource::File(path) => Some(path.clone()),
                },
                safety_factor: self.bounds.safety_factor,
                transient_cutoff_s: self.bounds.transient_cutoff_s,
                reference_pi: self.bounds.reference_pi,
            },
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(&self.to_file())
            .expect("validated scenarios always serialize")
    }
}

impl ScenarioFile {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn validate(self) -> Result<Scenario, ScenarioError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::Version { got: self.schema_version });
        }
        let n = self.simulation.state_dim;
        if n == 0 {
            return Err(ScenarioError::BadStateDim);
        }
        let t_s = self.simulation.sample_period_s;
        if !(t_s > 0.0) || !t_s.is_finite() {
            return Err(ScenarioError::BadSamplePeriod(t_s));
        }
        if self.simulation.horizon_steps == 0 {
            return Err(ScenarioError::BadHorizon(0));
        }
        let horizon = self.simulation.horizon_steps as usize;
        let horizon_seconds = horizon as f64 * t_s;

        let n_agents = self.topology.n_agents;
        let edges: Vec<Edge> = self
            .topology
            .edges
            .iter()
            .map(|e| Edge::new(e.from, e.to, e.weight))
            .collect();
        let graph = DirectedWeightedGraph::new(n_agents, &edges, &self.topology.pin_gains)?;

        let dynamics = match self.dynamics.kind.as_str() {
            "saturating_cross" => {
                if self.dynamics.matrix.is_some() {
                    return Err(ScenarioError::ForeignMatrix { kind: "saturating_cross" });
                }
                if n != 2 {
                    return Err(ScenarioError::SaturatingCrossDim(n));
                }
                Dynamics::SaturatingCross
            }
            "linear" => {
                let rows = self.dynamics.matrix.ok_or(ScenarioError::BadLinearMatrix)?;
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(ScenarioError::BadLinearMatrix);
                }
                let matrix = DMatrix::from_fn(n, n, |r, c| rows[r][c]);
                Dynamics::Linear { matrix }
            }
            other => return Err(ScenarioError::UnknownDynamics(other.to_string())),
        };

        if self.formation.offsets.len() != n_agents {
            return Err(ScenarioError::AgentCount {
                what: "formation.offsets",
                got: self.formation.offsets.len(),
                expected: n_agents,
            });
        }
        for (i, d) in self.formation.offsets.iter().enumerate() {
            if d.len() != n {
                return Err(ScenarioError::DimMismatch {
                    what: format!("formation offset {}", i + 1),
                    got: d.len(),
                    expected: n,
                });
            }
        }
        let formation = FormationSpec::new(
            self.formation.offsets.iter().map(|d| DVector::from_vec(d.clone())).collect(),
            self.formation.offset_bound,
        )?;

        let gains = ControlGains::new(
            vec![DVector::from_element(n, self.gains.error_feedback); n_agents],
            self.gains.coupling,
            vec![DVector::from_element(n, self.gains.observer); n_agents],
        )?;

        let tuning = TuningParams::new(self.tuning.learning_rate, self.tuning.leak)?;

        if self.rbf.grid_min.len() != n {
            return Err(ScenarioError::DimMismatch {
                what: "rbf.grid_min".to_string(),
                got: self.rbf.grid_min.len(),
                expected: n,
            });
        }
        let basis = RbfBasis::grid(
            &self.rbf.grid_min,
            &self.rbf.grid_max,
            &self.rbf.grid_counts,
            self.rbf.width,
        )?;
        let rbf_layout = GridLayout {
            min: self.rbf.grid_min.clone(),
            max: self.rbf.grid_max.clone(),
            counts: self.rbf.grid_counts.clone(),
            width: self.rbf.width,
        };

        let leader = VectorSignal::from_specs(&self.leader.trajectory)?;
        if leader.dim() != n {
            return Err(ScenarioError::DimMismatch {
                what: "leader.trajectory".to_string(),
                got: leader.dim(),
                expected: n,
            });
        }

        let mut disturbances = vec![VectorSignal::zero(n); n_agents];
        let mut seen = vec![false; n_agents];
        for entry in &self.disturbances {
            if entry.agent == 0 || entry.agent > n_agents {
                return Err(ScenarioError::AgentIndex {
                    what: "disturbances",
                    index: entry.agent,
                    n_agents,
                });
            }
            let idx = entry.agent - 1;
            if seen[idx] {
                return Err(ScenarioError::DuplicateDisturbance { agent: entry.agent });
            }
            seen[idx] = true;
            let signal = VectorSignal::from_specs(&entry.signal)?;
            if signal.dim() != n {
                return Err(ScenarioError::DimMismatch {
                    what: format!("disturbance for agent {}", entry.agent),
                    got: signal.dim(),
                    expected: n,
                });
            }
            disturbances[idx] = signal;
        }

        let mut attacks = Vec::with_capacity(self.attacks.len());
        for entry in &self.attacks {
            let kind = match entry.kind.as_str() {
                "actuator" => AttackKind::Actuator,
                "sensor" => AttackKind::Sensor,
                "neighbour" => AttackKind::Neighbour,
                other => return Err(ScenarioError::UnknownAttackKind(other.to_string())),
            };
            if entry.target == 0 || entry.target > n_agents {
                return Err(ScenarioError::AgentIndex {
                    what: "attack target",
                    index: entry.target,
                    n_agents,
                });
            }
            let source = match entry.source {
                Some(0) => {
                    return Err(ScenarioError::AgentIndex {
                        what: "attack source",
                        index: 0,
                        n_agents,
                    })
                }
                Some(s) if s > n_agents => {
                    return Err(AttackError::SourceOutOfRange {
                        id: entry.id.clone(),
                        from: s,
                        n_agents,
                    }
                    .into())
                }
                Some(s) => Some(s - 1),
                None => None,
            };
            if attacks.iter().any(|a: &AttackSpec| a.id == entry.id) {
                return Err(AttackError::DuplicateId { id: entry.id.clone() }.into());
            }
            let spec = AttackSpec {
                id: entry.id.clone(),
                kind,
                target: entry.target - 1,
                source,
                window: (entry.window_s[0], entry.window_s[1]),
                signal: VectorSignal::from_specs(&entry.signal)?,
            };
            spec.validate(&graph, n, horizon_seconds)?;
            attacks.push(spec);
        }

        if self.initial.states.len() != n_agents {
            return Err(ScenarioError::AgentCount {
                what: "initial.states",
                got: self.initial.states.len(),
                expected: n_agents,
            });
        }
        let initial_states: Vec<DVector<f64>> = self
            .initial
            .states
            .iter()
            .map(|x| DVector::from_vec(x.clone()))
            .collect();
        for (i, x) in initial_states.iter().enumerate() {
            if x.len() != n {
                return Err(ScenarioError::DimMismatch {
                    what: format!("initial state of agent {}", i + 1),
                    got: x.len(),
                    expected: n,
                });
            }
        }

        let source = match self.bounds.source.as_str() {
            "auto" => {
                if self.bounds.file.is_some() {
                    return Err(ScenarioError::ForeignBoundsFile);
                }
                BoundsSource::Auto
            }
            "file" => {
                BoundsSource::File(self.bounds.file.clone().ok_or(ScenarioError::MissingBoundsFile)?)
            }
            other => return Err(ScenarioError::BadBoundsSource(other.to_string())),
        };
        if !(self.bounds.safety_factor >= 1.0) || !self.bounds.safety_factor.is_finite() {
            return Err(ScenarioError::BadSafetyFactor(self.bounds.safety_factor));
        }
        let cutoff = self.bounds.transient_cutoff_s;
        if !(cutoff >= 0.0) || !cutoff.is_finite() || cutoff >= horizon_seconds {
            return Err(ScenarioError::BadTransientCutoff(cutoff));
        }
        if let Some(reference) = self.bounds.reference_pi {
            if !(reference > 0.0) || !reference.is_finite() {
                return Err(ScenarioError::BadReferencePi(reference));
            }
        }

        Ok(Scenario {
            name: self.name,
            description: self.description,
            state_dim: n,
            sample_period: t_s,
            horizon,
            graph,
            dynamics,
            formation,
            gains,
            force_gains: self.gains.force,
            tuning,
            basis,
            rbf_layout,
            leader,
            disturbances,
            attacks,
            initial_states,
            bounds: BoundsConfig {
                source,
                safety_factor: self.bounds.safety_factor,
                transient_cutoff_s: cutoff,
                reference_pi: self.bounds.reference_pi,
            },
        })
    }
}

// ---- Bundled scenarios ----

/// Scenario documents compiled into the library. These replicate the
/// benchmark configuration end to end and double as regression fixtures.
pub const BUNDLED_SCENARIOS: &[(&str, &str)] = &[
    ("example1_attack_free", include_str!("../scenarios/example1_attack_free.toml")),
    ("example1_case1", include_str!("../scenarios/example1_case1.toml")),
    ("example1_case2", include_str!("../scenarios/example1_case2.toml")),
    ("example1_case3", include_str!("../scenarios/example1_case3.toml")),
];

pub fn bundled_scenario(name: &str) -> Option<&'static str> {
    BUNDLED_SCENARIOS
        .iter()
        .find(|(bundled_name, _)| *bundled_name == name)
        .map(|(_, text)| *text)
}

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED_SCENARIOS.iter().map(|(name, _)| *name).collect()
}
