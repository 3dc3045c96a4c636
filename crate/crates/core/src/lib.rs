//! Deterministic discrete-time simulation and attack detection for
//! leader–follower formations of nonlinear agents.
//!
//! A fleet of followers tracks a virtual leader over a weighted directed
//! communication graph, each agent running three coupled pieces:
//!
//! * a controller that cancels its unknown drift through a Gaussian
//!   radial-basis network and steers the local formation error
//!   ([`formation`], [`rbf`]);
//! * an observer fed the same corrupted channel readings as the controller,
//!   whose prediction residual is the detection statistic ([`observer`]);
//! * a residual threshold, either measured from an attack-free calibration
//!   run or evaluated from closed-form ultimate bounds ([`sim::calibrate`],
//!   [`observer::compute_threshold`]).
//!
//! False-data-injection attacks on actuators, sensors, and individual
//! neighbour links are declared per scenario with activity windows
//! ([`attack`]); the engine replays them deterministically ([`sim`]),
//! flags threshold crossings ([`observer::detect`]), and evaluates the
//! accumulated-response detectability test for any declared attack
//! ([`sim::detectability_analysis`]).
//!
//! Scenarios are strict TOML documents ([`scenario`]); runs serialize to
//! byte-stable CSV and key-value artifacts ([`report`]).

pub mod attack;
pub mod formation;
pub mod graph;
pub mod observer;
pub mod rbf;
pub mod report;
pub mod scenario;
pub mod signal;
pub mod sim;

pub use attack::{AttackKind, AttackSpec, ChannelView};
pub use formation::{ControlGains, FormationSpec, GainReport, validate_gains};
pub use graph::{DirectedWeightedGraph, Edge, LaplacianBundle};
pub use observer::{
    detect, AlarmInterval, BoundSet, DetectionReport, FormationErrorBound, ThresholdParts,
};
pub use rbf::{RbfBasis, TuningParams};
pub use report::BoundsFile;
pub use scenario::{bundled_names, bundled_scenario, Scenario};
pub use sim::{
    calibrate, detectability_analysis, run, Calibration, DetectabilityReport, Dynamics, Engine,
    RunResult, Trace,
};
pub use signal::VectorSignal;
