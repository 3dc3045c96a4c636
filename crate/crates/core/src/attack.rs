//! False-data-injection attack models on the three vulnerable channels and
//! the per-step view of what each consumer actually receives.
//!
//! An attack adds a time-parameterized signal onto one channel of one agent
//! inside a time window:
//!
//! * **actuator** — the control arriving at the plant becomes `u + κ(t)·uᵃ(t)`;
//! * **sensor** — the agent's own state reading becomes `x + λ(t)·xᵃ(t)` and
//!   feeds every consumer on the controller side (control law, observer,
//!   weight tuning);
//! * **neighbour** — the state received over one directed edge `j→i` becomes
//!   `x̄ⱼ + φʲᵢ(t)·x̄ᵃⱼ(t)`; other receivers of agent `j` still see the truth.
//!
//! The activity factor is 1 inside the window (ends inclusive) and 0 outside.
//! Attacks never touch plant truth directly — the only physical pathway is
//! the applied control. The leader broadcast channel is not attackable.

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::graph::DirectedWeightedGraph;
use crate::signal::VectorSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    Actuator,
    Sensor,
    Neighbour,
}

impl AttackKind {
    pub fn label(self) -> &'static str {
        match self {
            AttackKind::Actuator => "actuator",
            AttackKind::Sensor => "sensor",
            AttackKind::Neighbour => "neighbour",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AttackError {
    #[error("attack '{id}' has an empty window: start {start} > end {end}")]
    BadWindow { id: String, start: f64, end: f64 },
    #[error("attack '{id}' window [{start}, {end}] is not finite")]
    NonFiniteWindow { id: String, start: f64, end: f64 },
    #[error("attack '{id}' window [{start}, {end}] lies outside the horizon [0, {horizon}]")]
    WindowOutsideHorizon { id: String, start: f64, end: f64, horizon: f64 },
    #[error("attack '{id}' targets agent {target}, but only {n_agents} agents exist")]
    TargetOutOfRange { id: String, target: usize, n_agents: usize },
    #[error("attack '{id}' names source agent {from}, but only {n_agents} agents exist")]
    SourceOutOfRange { id: String, from: usize, n_agents: usize },
    #[error("neighbour attack '{id}' needs a source agent for the corrupted edge")]
    MissingSource { id: String },
    #[error("{kind} attack '{id}' must not name a source agent")]
    UnexpectedSource { id: String, kind: &'static str },
    #[error("neighbour attack '{id}' names edge {from}->{target}, which does not exist")]
    MissingEdge { id: String, from: usize, target: usize },
    #[error("attack '{id}' signal has dimension {got}, expected {expected}")]
    SignalDim { id: String, got: usize, expected: usize },
    #[error("attack id '{id}' is declared more than once")]
    DuplicateId { id: String },
}

/// One attack: which channel, whom, when, and what gets added.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub id: String,
    pub kind: AttackKind,
    /// Receiving agent `i` (0-based).
    pub target: usize,
    /// Neighbour attacks only: source agent `j` of the corrupted edge `j→i`.
    pub source: Option<usize>,
    /// Activity window in seconds, both ends inclusive.
    pub window: (f64, f64),
    pub signal: VectorSignal,
}

impl AttackSpec {
    /// Structural validation against topology and horizon.
    pub fn validate(
        &self,
        graph: &DirectedWeightedGraph,
        state_dim: usize,
        horizon_seconds: f64,
    ) -> Result<(), AttackError> {
        let id = self.id.clone();
        let (start, end) = self.window;
        if !start.is_finite() || !end.is_finite() {
            return Err(AttackError::NonFiniteWindow { id, start, end });
        }
        if start > end {
            return Err(AttackError::BadWindow { id, start, end });
        }
        if start < 0.0 || start > horizon_seconds {
            return Err(AttackError::WindowOutsideHorizon {
                id,
                start,
                end,
                horizon: horizon_seconds,
            });
        }
        let n_agents = graph.n_agents();
        if self.target >= n_agents {
            return Err(AttackError::TargetOutOfRange { id, target: self.target, n_agents });
        }
        match (self.kind, self.source) {
            (AttackKind::Neighbour, None) => return Err(AttackError::MissingSource { id }),
            (AttackKind::Neighbour, Some(source)) => {
                if source >= n_agents {
                    return Err(AttackError::SourceOutOfRange { id, from: source, n_agents });
                }
                if graph.weight(self.target, source) == 0.0 {
                    return Err(AttackError::MissingEdge { id, from: source, target: self.target });
                }
            }
            (kind, Some(_)) => {
                return Err(AttackError::UnexpectedSource { id, kind: kind.label() })
            }
            (_, None) => {}
        }
        if self.signal.dim() != state_dim {
            return Err(AttackError::SignalDim {
                id,
                got: self.signal.dim(),
                expected: state_dim,
            });
        }
        Ok(())
    }

    /// Activity factor: true inside the window, ends inclusive.
    pub fn active(&self, t: f64) -> bool {
        t >= self.window.0 && t <= self.window.1
    }

    /// The injected signal at `t` if the attack is active, else `None`.
    pub fn active_signal(&self, t: f64) -> Option<DVector<f64>> {
        self.active(t).then(|| self.signal.eval(t))
    }
}

/// `u + κ(t)·uᵃ(t)` for one actuator attack.
pub fn apply_actuator(u: &DVector<f64>, spec: &AttackSpec, t: f64) -> DVector<f64> {
    debug_assert_eq!(spec.kind, AttackKind::Actuator);
    match spec.active_signal(t) {
        Some(signal) => u + signal,
        None => u.clone(),
    }
}

/// `x + λ(t)·xᵃ(t)` for one sensor attack.
pub fn apply_sensor(x: &DVector<f64>, spec: &AttackSpec, t: f64) -> DVector<f64> {
    debug_assert_eq!(spec.kind, AttackKind::Sensor);
    match spec.active_signal(t) {
        Some(signal) => x + signal,
        None => x.clone(),
    }
}

/// `x̄ⱼ + φʲᵢ(t)·x̄ᵃⱼ(t)` for one neighbour attack on edge `j→i`.
pub fn apply_neighbour(x_bar: &DVector<f64>, spec: &AttackSpec, t: f64) -> DVector<f64> {
    debug_assert_eq!(spec.kind, AttackKind::Neighbour);
    match spec.active_signal(t) {
        Some(signal) => x_bar + signal,
        None => x_bar.clone(),
    }
}

/// Sum of all active actuator-attack signals aimed at agent `i` at time `t`.
pub fn actuator_corruption(
    attacks: &[AttackSpec],
    i: usize,
    t: f64,
    dim: usize,
) -> DVector<f64> {
    let mut total = DVector::zeros(dim);
    for spec in attacks {
        if spec.kind == AttackKind::Actuator && spec.target == i {
            if let Some(signal) = spec.active_signal(t) {
                total += signal;
            }
        }
    }
    total
}

/// Sum of all active sensor-attack signals on agent `i`'s reading at time
/// `t` (what [`ChannelView::sensor_corruption`] reports, computable without
/// states — used when measuring the next state through the sensor channel).
pub fn sensor_corruption(
    attacks: &[AttackSpec],
    i: usize,
    t: f64,
    dim: usize,
) -> DVector<f64> {
    let mut total = DVector::zeros(dim);
    for spec in attacks {
        if spec.kind == AttackKind::Sensor && spec.target == i {
            if let Some(signal) = spec.active_signal(t) {
                total += signal;
            }
        }
    }
    total
}

/// Active neighbour-attack signals on in-edges of agent `i` at time `t`,
/// keyed by source agent (signals on the same edge sum).
pub fn neighbour_corruptions(
    attacks: &[AttackSpec],
    i: usize,
    t: f64,
) -> BTreeMap<usize, DVector<f64>> {
    let mut map: BTreeMap<usize, DVector<f64>> = BTreeMap::new();
    for spec in attacks {
        if spec.kind == AttackKind::Neighbour && spec.target == i {
            if let Some(signal) = spec.active_signal(t) {
                let source = spec.source.expect("validated neighbour attack has a source");
                map.entry(source)
                    .and_modify(|existing| *existing += &signal)
                    .or_insert(signal);
            }
        }
    }
    map
}

/// What every consumer sees at one step: per-agent sensor readings and
/// per-edge received neighbour states, after applying all active attacks to
/// the plant truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelView {
    truth: Vec<DVector<f64>>,
    sensor: Vec<DVector<f64>>,
    /// `(source j, target i)` → corrupted `x̄ⱼ` as received by `i`.
    edge_overrides: BTreeMap<(usize, usize), DVector<f64>>,
}

impl ChannelView {
    /// Applies all active sensor and neighbour attacks to the true states.
    /// Actuator attacks are applied separately, after the control is
    /// computed (see [`actuator_corruption`]).
    pub fn build(states: &[DVector<f64>], attacks: &[AttackSpec], t: f64) -> Self {
        let truth = states.to_vec();
        let mut sensor = states.to_vec();
        let mut edge_overrides: BTreeMap<(usize, usize), DVector<f64>> = BTreeMap::new();
        for spec in attacks {
            let Some(signal) = spec.active_signal(t) else { continue };
            match spec.kind {
                AttackKind::Sensor => sensor[spec.target] += signal,
                AttackKind::Neighbour => {
                    let source = spec.source.expect("validated neighbour attack has a source");
                    edge_overrides
                        .entry((source, spec.target))
                        .and_modify(|v| *v += &signal)
                        .or_insert_with(|| &states[source] + signal);
                }
                AttackKind::Actuator => {}
            }
        }
        Self { truth, sensor, edge_overrides }
    }

    pub fn n_agents(&self) -> usize {
        self.truth.len()
    }

    /// True plant state of agent `i`.
    pub fn truth(&self, i: usize) -> &DVector<f64> {
        &self.truth[i]
    }

    /// Agent `i`'s own state reading `xᶜᵢ` (sensor channel).
    pub fn sensor(&self, i: usize) -> &DVector<f64> {
        &self.sensor[i]
    }

    /// Additive sensor corruption `λ·xᵃ` currently on agent `i`.
    pub fn sensor_corruption(&self, i: usize) -> DVector<f64> {
        &self.sensor[i] - &self.truth[i]
    }

    /// What agent `target` receives of agent `source`'s state. Outgoing
    /// messages carry the true state unless this specific edge is attacked.
    pub fn received(&self, target: usize, source: usize) -> &DVector<f64> {
        self.edge_overrides.get(&(source, target)).unwrap_or(&self.truth[source])
    }

    /// Neighbour views `(j, x̄ⱼ as seen by i)` for agent `i`, ascending by
    /// source index.
    pub fn neighbour_views(
        &self,
        graph: &DirectedWeightedGraph,
        i: usize,
    ) -> Vec<(usize, DVector<f64>)> {
        graph
            .in_neighbours(i)
            .into_iter()
            .map(|(j, _)| (j, self.received(i, j).clone()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use crate::signal::{TermSpec, VectorSignal};

    fn vec2(a: f64, b: f64) -> DVector<f64> {
        DVector::from_vec(vec![a, b])
    }

    fn sin_signal(amps: &[(f64, f64)]) -> VectorSignal {
        VectorSignal::from_specs(
            &amps
                .iter()
                .map(|&(amplitude, frequency)| vec![TermSpec::sin(amplitude, frequency)])
                .collect::<Vec<_>>(),
        )
        .unwrap()
    }

    fn actuator_spec() -> AttackSpec {
        AttackSpec {
            id: "act".into(),
            kind: AttackKind::Actuator,
            target: 0,
            source: None,
            window: (50.0, 70.0),
            signal: sin_signal(&[(2.0, 0.25), (3.0, 4.0)]),
        }
    }

    fn triangle() -> DirectedWeightedGraph {
        DirectedWeightedGraph::new(
            3,
            &[Edge::unit(1, 3), Edge::unit(3, 2), Edge::unit(2, 1)],
            &[1.0, 0.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn inactive_outside_window_inclusive_at_ends() {
        let spec = actuator_spec();
        assert!(!spec.active(49.999));
        assert!(spec.active(50.0));
        assert!(spec.active(60.0));
        assert!(spec.active(70.0));
        assert!(!spec.active(70.001));
        let u = vec2(1.0, 2.0);
        assert_eq!(apply_actuator(&u, &spec, 10.0), u);
    }

    #[test]
    fn actuator_signal_value_at_window_start() {
        // u = 0 at t = 50: uᶜ = (2·sin(12.5), 3·sin(200)).
        let spec = actuator_spec();
        let u = apply_actuator(&DVector::zeros(2), &spec, 50.0);
        assert!((u[0] - 2.0 * (12.5f64).sin()).abs() < 1e-15);
        assert!((u[1] - 3.0 * (200.0f64).sin()).abs() < 1e-15);
    }

    #[test]
    fn actuator_application_is_additive() {
        let spec = actuator_spec();
        let u1 = vec2(0.3, -0.7);
        let u2 = vec2(1.1, 0.2);
        let lhs = apply_actuator(&(&u1 + &u2), &spec, 55.0) - apply_actuator(&u2, &spec, 55.0);
        assert!((lhs - u1).norm() < 1e-15);
    }

    #[test]
    fn sensor_zero_signal_leaves_reading_unchanged() {
        let spec = AttackSpec {
            id: "null".into(),
            kind: AttackKind::Sensor,
            target: 2,
            source: None,
            window: (0.0, 10.0),
            signal: VectorSignal::zero(2),
        };
        let x = vec2(3.0, -5.0);
        assert_eq!(apply_sensor(&x, &spec, 5.0), x);
    }

    #[test]
    fn attack_free_view_equals_truth_exactly() {
        let states = vec![vec2(1.0, -1.0), vec2(3.0, 4.0), vec2(3.0, -5.0)];
        let view = ChannelView::build(&states, &[], 12.0);
        for i in 0..3 {
            assert_eq!(view.sensor(i), &states[i]);
            assert_eq!(view.sensor_corruption(i), DVector::zeros(2));
        }
        assert_eq!(view.received(1, 2), &states[2]);
    }

    #[test]
    fn neighbour_attack_scopes_to_one_edge() {
        // Edges 1→2 and 1→3 (0-based sources 0→1, 0→2); attack only 0→1.
        let graph = DirectedWeightedGraph::new(
            3,
            &[Edge::unit(1, 2), Edge::unit(1, 3), Edge::unit(2, 1), Edge::unit(3, 1)],
            &[1.0, 0.0, 0.0],
        )
        .unwrap();
        let spec = AttackSpec {
            id: "nbr".into(),
            kind: AttackKind::Neighbour,
            target: 1,
            source: Some(0),
            window: (50.0, 70.0),
            signal: sin_signal(&[(-4.0, 1.0), (3.0, 1.0)]),
        };
        spec.validate(&graph, 2, 100.0).unwrap();
        let states = vec![vec2(1.0, -1.0), vec2(3.0, 4.0), vec2(3.0, -5.0)];
        let t = 55.0;
        let view = ChannelView::build(&states, std::slice::from_ref(&spec), t);
        // Receiver 1 sees the corrupted value; receiver 2 sees the truth.
        let delta = view.received(1, 0) - &states[0];
        assert!((delta - spec.signal.eval(t)).norm() < 1e-15);
        assert_eq!(view.received(2, 0), &states[0]);
        // The map form used for residual-effect composition agrees.
        let map = neighbour_corruptions(std::slice::from_ref(&spec), 1, t);
        assert_eq!(map.len(), 1);
        assert!((map.get(&0).unwrap() - spec.signal.eval(t)).norm() < 1e-15);
        assert!(neighbour_corruptions(std::slice::from_ref(&spec), 2, t).is_empty());
    }

    #[test]
    fn sensor_attack_feeds_only_the_targets_own_reading() {
        let spec = AttackSpec {
            id: "sef".into(),
            kind: AttackKind::Sensor,
            target: 2,
            source: None,
            window: (50.0, 70.0),
            signal: sin_signal(&[(4.0, 0.25), (5.0, 5.0)]),
        };
        let states = vec![vec2(1.0, -1.0), vec2(3.0, 4.0), vec2(3.0, -5.0)];
        let view = ChannelView::build(&states, std::slice::from_ref(&spec), 60.0);
        assert_eq!(view.sensor(0), &states[0]);
        assert_eq!(view.sensor(1), &states[1]);
        let corruption = view.sensor_corruption(2);
        assert!((corruption - spec.signal.eval(60.0)).norm() < 1e-15);
        // Outgoing messages carry the truth: receivers of agent 2 are unaffected.
        assert_eq!(view.received(1, 2), &states[2]);
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let graph = triangle();
        let base = actuator_spec();

        let mut bad = base.clone();
        bad.window = (80.0, 60.0);
        assert!(matches!(
            bad.validate(&graph, 2, 100.0),
            Err(AttackError::BadWindow { .. })
        ));

        let mut bad = base.clone();
        bad.window = (120.0, 130.0);
        assert!(matches!(
            bad.validate(&graph, 2, 100.0),
            Err(AttackError::WindowOutsideHorizon { .. })
        ));

        let mut bad = base.clone();
        bad.target = 7;
        assert!(matches!(
            bad.validate(&graph, 2, 100.0),
            Err(AttackError::TargetOutOfRange { .. })
        ));

        let mut bad = base.clone();
        bad.source = Some(1);
        assert!(matches!(
            bad.validate(&graph, 2, 100.0),
            Err(AttackError::UnexpectedSource { .. })
        ));

        let mut bad = base.clone();
        bad.kind = AttackKind::Neighbour;
        bad.source = None;
        assert!(matches!(
            bad.validate(&graph, 2, 100.0),
            Err(AttackError::MissingSource { .. })
        ));

        // Agent 1 (0-based) hears only from agent 2 in the triangle, so the
        // edge 0→1 cannot be attacked.
        let mut bad = base.clone();
        bad.kind = AttackKind::Neighbour;
        bad.target = 1;
        bad.source = Some(0);
        assert!(matches!(
            bad.validate(&graph, 2, 100.0),
            Err(AttackError::MissingEdge { .. })
        ));

        let mut ok = base.clone();
        ok.kind = AttackKind::Neighbour;
        ok.target = 1;
        ok.source = Some(2);
        ok.validate(&graph, 2, 100.0).unwrap();

        let mut bad = base;
        bad.signal = VectorSignal::zero(3);
        assert!(matches!(
            bad.validate(&graph, 2, 100.0),
            Err(AttackError::SignalDim { .. })
        ));
    }
}
