//! Closed-loop engine: plant, controller, observer, and adaptive weights
//! advanced in lockstep over a scenario's horizon.
//!
//! Each tick follows the same order for every agent:
//!
//! 1. evaluate leader and disturbance signals, collect active attacks;
//! 2. build the [`ChannelView`] every agent reads through (sensor and
//!    neighbour corruption applied, outgoing messages truthful);
//! 3. form the local formation error and the control from those readings;
//! 4. add actuator corruption to obtain the input the plant actually sees;
//! 5. advance the true plant;
//! 6. advance the observer from the same corrupted readings and the
//!    *computed* control — an actuator attack therefore shows up in the
//!    residual rather than in the observer's input;
//! 7. tune the weights against the next reading, measured through the
//!    sensor channel at the next sample time;
//! 8. record the step.
//!
//! The loop is deterministic: no randomness, a fixed agent order, and
//! fixed-order floating-point reductions, so identical scenarios produce
//! bit-identical traces.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::attack::{
    actuator_corruption, neighbour_corruptions, sensor_corruption, AttackKind, ChannelView,
};
use crate::formation::{control_from_estimate, local_error};
use crate::observer::{
    attack_effect, compute_formation_error_bound, compute_threshold, detectability_series,
    nuisance_from_truth, observer_step, BoundSet, DetectabilityPoint, FormationErrorBound,
    ThresholdParts,
};
use crate::rbf::{estimate, prediction_error, tune_weights};
use crate::scenario::Scenario;

/// Magnitude at which a run is declared divergent and aborted.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(
        "state diverged at step {step} (t = {t:.3} s): agent {agent} reached \
         |x| = {magnitude:.3e}; check gains and dynamics"
    )]
    Diverged { step: usize, t: f64, agent: usize, magnitude: f64 },
    #[error("no attack with id '{id}' in this scenario")]
    UnknownAttack { id: String },
    #[error("attack '{id}' has an activity window no sample time falls into")]
    WindowNeverSampled { id: String },
}

/// One-step plant map `x⁺ = f(x) + u + w`.
#[derive(Debug, Clone, PartialEq)]
pub enum Dynamics {
    /// Two-dimensional bounded cross-coupling
    /// `f(x) = (x₂/(1+x₂²), x₁/(1+x₂²))`.
    SaturatingCross,
    /// `f(x) = A·x` for a square matrix `A`.
    Linear { matrix: DMatrix<f64> },
}

impl Dynamics {
    /// The drift `f(x)` alone.
    pub fn drift(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Dynamics::SaturatingCross => {
                let denom = 1.0 + x[1] * x[1];
                DVector::from_column_slice(&[x[1] / denom, x[0] / denom])
            }
            Dynamics::Linear { matrix } => matrix * x,
        }
    }

    /// Advances one sample.
    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        self.drift(x) + u + w
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Dynamics::SaturatingCross => "saturating_cross",
            Dynamics::Linear { .. } => "linear",
        }
    }
}

/// Everything one executed step produced. `states`/`estimates` are the values
/// *entering* the step (so `step 0` reports the initial condition), the rest
/// is what the step computed from them.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub step: usize,
    /// `step × sample_period`.
    pub t: f64,
    pub leader: DVector<f64>,
    /// True states `x_i(k)`.
    pub states: Vec<DVector<f64>>,
    /// Observer states `x̂_i(k)`.
    pub estimates: Vec<DVector<f64>>,
    /// Local formation errors, computed from the (possibly corrupted)
    /// channel readings — exactly what the controller consumed.
    pub errors: Vec<DVector<f64>>,
    /// Controls as computed by each agent.
    pub controls: Vec<DVector<f64>>,
    /// Controls as received by each plant (actuator corruption added).
    pub applied: Vec<DVector<f64>>,
    /// Drift estimates `Ŵᵢᵀφ(xᶜᵢ)` at the channel readings.
    pub predictions: Vec<DVector<f64>>,
    /// Frobenius norms `‖Ŵᵢ(k)‖_F` before this step's tuning.
    pub weight_norms: Vec<f64>,
    /// Per-agent activity bits: 1 = actuator, 2 = sensor, 4 = incoming
    /// neighbour link.
    pub attack_mask: Vec<u8>,
}

/// The closed loop in motion. [`run`] drives it over a whole horizon; drive
/// it manually to inspect intermediate state (weights, estimates) that the
/// recorded trace does not keep.
pub struct Engine<'a> {
    scenario: &'a Scenario,
    step_index: usize,
    states: Vec<DVector<f64>>,
    estimates: Vec<DVector<f64>>,
    weights: Vec<DMatrix<f64>>,
}

impl<'a> Engine<'a> {
    pub fn new(scenario: &'a Scenario) -> Self {
        let states = scenario.initial_states.clone();
        // The observer starts on the plant: x̂(0) = x(0).
        let estimates = states.clone();
        let weights =
            vec![
                DMatrix::zeros(scenario.basis.len(), scenario.state_dim);
                scenario.n_agents()
            ];
        Self { scenario, step_index: 0, states, estimates, weights }
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.scenario.sample_period
    }

    /// True plant states at the current time.
    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    /// Observer states at the current time.
    pub fn estimates(&self) -> &[DVector<f64>] {
        &self.estimates
    }

    /// Current weight estimates, one `ϑ × n` matrix per agent.
    pub fn weights(&self) -> &[DMatrix<f64>] {
        &self.weights
    }

    /// Executes one tick and advances the engine.
    pub fn step(&mut self) -> Result<StepOutput, SimError> {
        let sc = self.scenario;
        let n = sc.n_agents();
        let dim = sc.state_dim;
        let k = self.step_index;
        let t = k as f64 * sc.sample_period;

        let leader_now = sc.leader.eval(t);
        let view = ChannelView::build(&self.states, &sc.attacks, t);

        let mut activations = Vec::with_capacity(n);
        let mut predictions = Vec::with_capacity(n);
        let mut errors = Vec::with_capacity(n);
        let mut controls = Vec::with_capacity(n);
        let mut applied = Vec::with_capacity(n);
        for i in 0..n {
            let own = view.sensor(i);
            let neighbours = view.neighbour_views(&sc.graph, i);
            let e = local_error(&sc.graph, &sc.formation, i, own, &neighbours, &leader_now);
            let phi = sc.basis.activation(own);
            let f_hat = estimate(&self.weights[i], &phi);
            let u = control_from_estimate(&sc.gains, i, own, &e, &f_hat);
            let u_applied = &u + actuator_corruption(&sc.attacks, i, t, dim);
            activations.push(phi);
            predictions.push(f_hat);
            errors.push(e);
            controls.push(u);
            applied.push(u_applied);
        }

        let weight_norms: Vec<f64> = self.weights.iter().map(DMatrix::norm).collect();

        let mut attack_mask = vec![0u8; n];
        for spec in &sc.attacks {
            if spec.active(t) {
                attack_mask[spec.target] |= match spec.kind {
                    AttackKind::Actuator => 1,
                    AttackKind::Sensor => 2,
                    AttackKind::Neighbour => 4,
                };
            }
        }

        let mut next_states = Vec::with_capacity(n);
        let mut next_estimates = Vec::with_capacity(n);
        for i in 0..n {
            let w_i = sc.disturbances[i].eval(t);
            next_states.push(sc.dynamics.step(&self.states[i], &applied[i], &w_i));
            next_estimates.push(observer_step(
                view.sensor(i),
                &self.estimates[i],
                &controls[i],
                &errors[i],
                &predictions[i],
                sc.gains.observer(i),
            ));
        }

        for (i, x) in next_states.iter().enumerate() {
            let magnitude = x.amax();
            // `!(a <= b)` also trips on NaN.
            if !(magnitude <= DIVERGENCE_LIMIT) {
                return Err(SimError::Diverged { step: k, t, agent: i + 1, magnitude });
            }
        }

        // Tuning sees the *measured* next reading: the true next state plus
        // whatever sensor corruption is active at the next sample time.
        let t_next = (k + 1) as f64 * sc.sample_period;
        for i in 0..n {
            let measured_next = &next_states[i] + sensor_corruption(&sc.attacks, i, t_next, dim);
            let h_bar = prediction_error(&measured_next, &controls[i], &predictions[i]);
            self.weights[i] = tune_weights(&self.weights[i], &activations[i], &h_bar, sc.tuning);
        }

        let out = StepOutput {
            step: k,
            t,
            leader: leader_now,
            states: std::mem::replace(&mut self.states, next_states),
            estimates: std::mem::replace(&mut self.estimates, next_estimates),
            errors,
            controls,
            applied,
            predictions,
            weight_norms,
            attack_mask,
        };
        self.step_index = k + 1;
        Ok(out)
    }
}

/// Column-major recording of a whole run: one record per executed step, each
/// quantity in a flat array indexed by `(step, agent, component)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    n_agents: usize,
    state_dim: usize,
    sample_period: f64,
    steps: usize,
    leader: Vec<f64>,
    states: Vec<f64>,
    estimates: Vec<f64>,
    errors: Vec<f64>,
    controls: Vec<f64>,
    applied: Vec<f64>,
    weight_norms: Vec<f64>,
    attack_mask: Vec<u8>,
}

impl Trace {
    fn with_capacity(n_agents: usize, state_dim: usize, sample_period: f64, steps: usize) -> Self {
        let per_agent = steps * n_agents * state_dim;
        Self {
            n_agents,
            state_dim,
            sample_period,
            steps: 0,
            leader: Vec::with_capacity(steps * state_dim),
            states: Vec::with_capacity(per_agent),
            estimates: Vec::with_capacity(per_agent),
            errors: Vec::with_capacity(per_agent),
            controls: Vec::with_capacity(per_agent),
            applied: Vec::with_capacity(per_agent),
            weight_norms: Vec::with_capacity(steps * n_agents),
            attack_mask: Vec::with_capacity(steps * n_agents),
        }
    }

    fn push(&mut self, out: &StepOutput) {
        debug_assert_eq!(out.step, self.steps, "steps must be recorded in order");
        self.leader.extend(out.leader.iter());
        for arrays in [
            (&out.states, &mut self.states),
            (&out.estimates, &mut self.estimates),
            (&out.errors, &mut self.errors),
            (&out.controls, &mut self.controls),
            (&out.applied, &mut self.applied),
        ] {
            let (source, sink) = arrays;
            for v in source.iter() {
                sink.extend(v.iter());
            }
        }
        self.weight_norms.extend_from_slice(&out.weight_norms);
        self.attack_mask.extend_from_slice(&out.attack_mask);
        self.steps += 1;
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    /// `step × sample_period`, the same product the engine used.
    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.sample_period
    }

    fn agent_block<'t>(&self, data: &'t [f64], step: usize, agent: usize) -> &'t [f64] {
        let start = (step * self.n_agents + agent) * self.state_dim;
        &data[start..start + self.state_dim]
    }

    pub fn leader_state(&self, step: usize) -> DVector<f64> {
        let start = step * self.state_dim;
        DVector::from_column_slice(&self.leader[start..start + self.state_dim])
    }

    pub fn state(&self, step: usize, agent: usize) -> DVector<f64> {
        DVector::from_column_slice(self.agent_block(&self.states, step, agent))
    }

    pub fn estimate(&self, step: usize, agent: usize) -> DVector<f64> {
        DVector::from_column_slice(self.agent_block(&self.estimates, step, agent))
    }

    pub fn error(&self, step: usize, agent: usize) -> DVector<f64> {
        DVector::from_column_slice(self.agent_block(&self.errors, step, agent))
    }

    pub fn control(&self, step: usize, agent: usize) -> DVector<f64> {
        DVector::from_column_slice(self.agent_block(&self.controls, step, agent))
    }

    pub fn applied(&self, step: usize, agent: usize) -> DVector<f64> {
        DVector::from_column_slice(self.agent_block(&self.applied, step, agent))
    }

    /// Residual `x̃_i(k) = x_i(k) − x̂_i(k)`.
    pub fn residual(&self, step: usize, agent: usize) -> DVector<f64> {
        self.state(step, agent) - self.estimate(step, agent)
    }

    /// `‖x̃_i(k)‖∞`, the quantity the alarm compares against the threshold.
    pub fn residual_inf_norm(&self, step: usize, agent: usize) -> f64 {
        self.agent_block(&self.states, step, agent)
            .iter()
            .zip(self.agent_block(&self.estimates, step, agent))
            .map(|(x, xh)| (x - xh).abs())
            .fold(0.0, f64::max)
    }

    /// All residual ∞-norms, `[agent][step]` — the shape detection consumes.
    pub fn residual_inf_norms(&self) -> Vec<Vec<f64>> {
        (0..self.n_agents)
            .map(|agent| (0..self.steps).map(|k| self.residual_inf_norm(k, agent)).collect())
            .collect()
    }

    /// Norm of the stacked formation error at one step.
    pub fn global_error_norm(&self, step: usize) -> f64 {
        let start = step * self.n_agents * self.state_dim;
        self.errors[start..start + self.n_agents * self.state_dim]
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn weight_norm(&self, step: usize, agent: usize) -> f64 {
        self.weight_norms[step * self.n_agents + agent]
    }

    pub fn attack_mask(&self, step: usize, agent: usize) -> u8 {
        self.attack_mask[step * self.n_agents + agent]
    }
}

/// A completed run: the recorded trace plus the loop state one step past its
/// end (the trace records values *entering* each step).
#[derive(Debug, Clone)]
pub struct RunResult {
    pub trace: Trace,
    pub final_states: Vec<DVector<f64>>,
    pub final_estimates: Vec<DVector<f64>>,
    pub final_weights: Vec<DMatrix<f64>>,
}

/// Runs a scenario over its whole horizon.
pub fn run(scenario: &Scenario) -> Result<RunResult, SimError> {
    let mut engine = Engine::new(scenario);
    let mut trace = Trace::with_capacity(
        scenario.n_agents(),
        scenario.state_dim,
        scenario.sample_period,
        scenario.horizon,
    );
    for _ in 0..scenario.horizon {
        trace.push(&engine.step()?);
    }
    Ok(RunResult {
        trace,
        final_states: engine.states.clone(),
        final_estimates: engine.estimates.clone(),
        final_weights: engine.weights.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrateError {
    #[error(
        "calibration needs an attack-free run, but the scenario declares \
         {0} attack(s); strip them first"
    )]
    AttacksPresent(usize),
    #[error(
        "the horizon ({horizon} steps) ends inside the transient cutoff \
         ({cutoff} steps), so there is nothing steady to measure; lengthen \
         the horizon or lower the cutoff"
    )]
    HorizonInsideTransient { cutoff: usize, horizon: usize },
    #[error(
        "steady-state residuals are identically zero past the cutoff; a \
         positive alarm threshold cannot be calibrated from this run"
    )]
    DegenerateResidual,
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Output of [`calibrate`]: measured bound constants and the operational
/// alarm threshold, with the closed-form bounds alongside whenever the gain
/// conditions let them be evaluated.
#[derive(Debug, Clone)]
pub struct Calibration {
    /// Measured bound constants, already safety-scaled where applicable.
    pub bounds: BoundSet,
    pub safety_factor: f64,
    pub transient_cutoff_s: f64,
    /// Largest per-agent residual ∞-norm observed past the cutoff.
    pub steady_residual_max: f64,
    /// Operational alarm threshold: `safety_factor × steady_residual_max`.
    pub threshold: f64,
    /// Largest stacked formation-error norm observed past the cutoff.
    pub steady_error_max: f64,
    /// `safety_factor × steady_error_max` — the measured stand-in for the
    /// formation-error ultimate bound.
    pub e_m_measured: f64,
    /// Closed-form ultimate bounds, when the spectral conditions hold.
    pub formation_bound: Option<FormationErrorBound>,
    /// Why `formation_bound` is absent, when it is.
    pub formation_bound_note: Option<String>,
    /// Closed-form residual bound, evaluated with the measured `e_M`.
    pub threshold_parts: Option<ThresholdParts>,
    /// Why `threshold_parts` is absent, when it is.
    pub threshold_note: Option<String>,
    /// Reference threshold declared by the scenario, for comparison.
    pub reference: Option<f64>,
}

/// Runs the scenario attack-free and measures every bound constant the
/// residual threshold needs, then sizes the operational threshold from the
/// steady-state residual plateau.
///
/// Measured maxima that stand in for analytic bounds (`w_M`, the
/// approximation floor, `‖Ŵ‖_F`, `e_M`, the residual plateau) are scaled by
/// the scenario's safety factor; exact constants (`φ_M`, the stacked offset
/// norm, the leader scan) are not.
pub fn calibrate(scenario: &Scenario) -> Result<Calibration, CalibrateError> {
    if !scenario.attacks.is_empty() {
        return Err(CalibrateError::AttacksPresent(scenario.attacks.len()));
    }
    let n = scenario.n_agents();
    let cutoff = scenario.transient_cutoff_step();
    if cutoff >= scenario.horizon {
        return Err(CalibrateError::HorizonInsideTransient {
            cutoff,
            horizon: scenario.horizon,
        });
    }
    let safety = scenario.bounds.safety_factor;

    let mut engine = Engine::new(scenario);
    let mut steady_residual_max = 0.0f64;
    let mut steady_error_max = 0.0f64;
    let mut steady_weight_max = 0.0f64;
    let mut steady_mismatch_max = 0.0f64;
    let mut disturbance_max = 0.0f64;
    let mut leader_next_max = 0.0f64;

    // The prediction mismatch of step k needs x(k+1), so it is folded in one
    // step late, from `prev`.
    let mut fold_mismatch = |prev: &StepOutput, next_states: &[DVector<f64>]| {
        if prev.step < cutoff {
            return;
        }
        let mut sum_sq = 0.0;
        for i in 0..n {
            let h_bar = prediction_error(&next_states[i], &prev.controls[i], &prev.predictions[i]);
            let w_prev = scenario.disturbances[i].eval(prev.t);
            sum_sq += (h_bar - w_prev).norm_squared();
        }
        steady_mismatch_max = steady_mismatch_max.max(sum_sq.sqrt());
    };

    let mut prev: Option<StepOutput> = None;
    for _ in 0..scenario.horizon {
        let out = engine.step().map_err(CalibrateError::Sim)?;

        let mut disturbance_sq = 0.0;
        for i in 0..n {
            disturbance_sq += scenario.disturbances[i].eval(out.t).norm_squared();
        }
        disturbance_max = disturbance_max.max(disturbance_sq.sqrt());
        leader_next_max =
            leader_next_max.max(scenario.leader.eval(out.t + scenario.sample_period).norm());

        if out.step >= cutoff {
            let mut error_sq = 0.0;
            for i in 0..n {
                let residual = &out.states[i] - &out.estimates[i];
                steady_residual_max = steady_residual_max.max(residual.amax());
                error_sq += out.errors[i].norm_squared();
            }
            steady_error_max = steady_error_max.max(error_sq.sqrt());
            let weight_sq: f64 = out.weight_norms.iter().map(|v| v * v).sum();
            steady_weight_max = steady_weight_max.max(weight_sq.sqrt());
        }

        if let Some(prev_out) = &prev {
            fold_mismatch(prev_out, &out.states);
        }
        prev = Some(out);
    }
    if let Some(prev_out) = &prev {
        fold_mismatch(prev_out, engine.states());
    }
    drop(fold_mismatch);

    if !(steady_residual_max > 0.0) {
        return Err(CalibrateError::DegenerateResidual);
    }

    let bounds = BoundSet::new(
        safety * disturbance_max,
        safety * steady_mismatch_max,
        safety * steady_weight_max,
        scenario.basis.activation_bound(),
        leader_next_max,
        scenario.formation.stacked_norm(),
    )
    .expect("measured bounds are finite and non-negative");

    let e_m_measured = safety * steady_error_max;
    let bundle = scenario.graph.laplacian(scenario.state_dim);
    let (formation_bound, formation_bound_note) =
        match compute_formation_error_bound(&bounds, &bundle, &scenario.gains, scenario.tuning) {
            Ok(bound) => (Some(bound), None),
            Err(err) => (None, Some(err.to_string())),
        };
    let (threshold_parts, threshold_note) = match compute_threshold(
        &bounds,
        e_m_measured,
        scenario.tuning,
        scenario.gains.sigma_max_observer(),
    ) {
        Ok(parts) => (Some(parts), None),
        Err(err) => (None, Some(err.to_string())),
    };

    Ok(Calibration {
        bounds,
        safety_factor: safety,
        transient_cutoff_s: scenario.bounds.transient_cutoff_s,
        steady_residual_max,
        threshold: safety * steady_residual_max,
        steady_error_max,
        e_m_measured,
        formation_bound,
        formation_bound_note,
        threshold_parts,
        threshold_note,
        reference: scenario.bounds.reference_pi,
    })
}

/// Outcome of the accumulated-response detectability test for one attack.
#[derive(Debug, Clone)]
pub struct DetectabilityReport {
    pub attack_id: String,
    /// Target agent (0-based).
    pub agent: usize,
    pub threshold: f64,
    pub sample_period: f64,
    /// First and last simulation step inside the activity window.
    pub window_steps: (usize, usize),
    /// One margin per window step, in order.
    pub points: Vec<DetectabilityPoint>,
}

impl DetectabilityReport {
    /// First simulation step at which the accumulated attack drive clears
    /// the threshold plus the worst nuisance response.
    pub fn first_detectable_step(&self) -> Option<usize> {
        self.points.iter().position(DetectabilityPoint::detectable).map(|i| self.window_steps.0 + i)
    }

    pub fn detectable(&self) -> bool {
        self.points.iter().any(DetectabilityPoint::detectable)
    }
}

/// Replays the closed loop and evaluates, at every step of one attack's
/// activity window, whether the residual driven by the attack alone must
/// already exceed the threshold plus the accumulated attack-free response.
///
/// The drive is composed from the attack signals and the live loop state;
/// the nuisance is the true one-step prediction mismatch plus the true
/// formation error — everything the residual recursion carries besides the
/// attack.
pub fn detectability_analysis(
    scenario: &Scenario,
    attack_id: &str,
    threshold: f64,
) -> Result<DetectabilityReport, SimError> {
    let spec = scenario
        .attacks
        .iter()
        .find(|a| a.id == attack_id)
        .ok_or_else(|| SimError::UnknownAttack { id: attack_id.to_string() })?;
    let target = spec.target;
    let dim = scenario.state_dim;
    let period = scenario.sample_period;

    // Active steps are defined exactly as the engine sees them: the sample
    // times falling inside the window.
    let mut window_steps: Option<(usize, usize)> = None;
    for k in 0..scenario.horizon {
        if spec.active(k as f64 * period) {
            window_steps = Some(match window_steps {
                None => (k, k),
                Some((start, _)) => (start, k),
            });
        }
    }
    let Some(window_steps) = window_steps else {
        return Err(SimError::WindowNeverSampled { id: attack_id.to_string() });
    };

    let mut engine = Engine::new(scenario);
    let span = window_steps.1 - window_steps.0 + 1;
    let mut drives = Vec::with_capacity(span);
    let mut nuisances = Vec::with_capacity(span);
    for k in 0..=window_steps.1 {
        let in_window = k >= window_steps.0;
        let before = if in_window {
            let t = k as f64 * period;
            let x_true = engine.states()[target].clone();
            let weights = &engine.weights()[target];
            let drive = attack_effect(
                &scenario.basis,
                weights,
                &scenario.graph,
                scenario.gains.observer(target),
                target,
                &x_true,
                &actuator_corruption(&scenario.attacks, target, t, dim),
                &sensor_corruption(&scenario.attacks, target, t, dim),
                &neighbour_corruptions(&scenario.attacks, target, t),
            );
            let f_hat_true = estimate(weights, &scenario.basis.activation(&x_true));
            let neighbours: Vec<(usize, DVector<f64>)> = scenario
                .graph
                .in_neighbours(target)
                .into_iter()
                .map(|(j, _)| (j, engine.states()[j].clone()))
                .collect();
            let e_true = local_error(
                &scenario.graph,
                &scenario.formation,
                target,
                &x_true,
                &neighbours,
                &scenario.leader.eval(t),
            );
            Some((drive, f_hat_true, e_true))
        } else {
            None
        };

        let out = engine.step()?;
        if let Some((drive, f_hat_true, e_true)) = before {
            let nuisance = nuisance_from_truth(
                &engine.states()[target],
                &out.applied[target],
                &f_hat_true,
                &e_true,
            );
            drives.push(drive);
            nuisances.push(nuisance);
        }
    }

    let points =
        detectability_series(&drives, &nuisances, scenario.gains.observer(target), threshold);
    Ok(DetectabilityReport {
        attack_id: attack_id.to_string(),
        agent: target,
        threshold,
        sample_period: period,
        window_steps,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::AttackSpec;
    use crate::formation::{ControlGains, FormationSpec};
    use crate::graph::{DirectedWeightedGraph, Edge};
    use crate::rbf::{RbfBasis, TuningParams};
    use crate::scenario::{BoundsConfig, BoundsSource, GridLayout};
    use crate::signal::{TermSpec, VectorSignal};

    fn grid_layout_1d() -> GridLayout {
        GridLayout { min: vec![-5.0], max: vec![5.0], counts: vec![3], width: 10.0 }
    }

    /// One pinned agent holding position: zero drift, constant leader equal
    /// to the initial state, zero gains apart from the observer. Every loop
    /// quantity stays constant, which makes regressions loud.
    fn hold_scenario(horizon: usize) -> Scenario {
        Scenario {
            name: "hold".into(),
            description: None,
            state_dim: 1,
            sample_period: 0.1,
            horizon,
            graph: DirectedWeightedGraph::new(1, &[], &[1.0]).unwrap(),
            dynamics: Dynamics::Linear { matrix: DMatrix::zeros(1, 1) },
            formation: FormationSpec::new(vec![DVector::zeros(1)], 1.0).unwrap(),
            gains: ControlGains::new(
                vec![DVector::zeros(1)],
                0.0,
                vec![DVector::from_element(1, 0.5)],
            )
            .unwrap(),
            force_gains: true,
            tuning: TuningParams::new(0.1, 0.1).unwrap(),
            basis: RbfBasis::grid(&[-5.0], &[5.0], &[3], 10.0).unwrap(),
            rbf_layout: grid_layout_1d(),
            leader: VectorSignal::from_specs(&[vec![TermSpec::constant(2.0)]]).unwrap(),
            disturbances: vec![VectorSignal::zero(1)],
            attacks: vec![],
            initial_states: vec![DVector::from_element(1, 2.0)],
            bounds: BoundsConfig {
                source: BoundsSource::Auto,
                safety_factor: 1.2,
                transient_cutoff_s: 0.5,
                reference_pi: None,
            },
        }
    }

    /// Two coupled agents with bounded drift and small disturbances — a
    /// stable loop whose residual settles to a small nonzero plateau.
    fn coupled_scenario() -> Scenario {
        Scenario {
            name: "coupled".into(),
            description: None,
            state_dim: 2,
            sample_period: 0.01,
            horizon: 300,
            graph: DirectedWeightedGraph::new(
                2,
                &[Edge::unit(1, 2), Edge::unit(2, 1)],
                &[1.0, 0.0],
            )
            .unwrap(),
            dynamics: Dynamics::SaturatingCross,
            formation: FormationSpec::new(
                vec![
                    DVector::from_column_slice(&[1.0, 0.0]),
                    DVector::from_column_slice(&[-1.0, 0.0]),
                ],
                5.0,
            )
            .unwrap(),
            gains: ControlGains::new(
                vec![DVector::from_element(2, 0.2); 2],
                0.05,
                vec![DVector::from_element(2, 0.1); 2],
            )
            .unwrap(),
            force_gains: false,
            tuning: TuningParams::new(0.05, 0.1).unwrap(),
            basis: RbfBasis::grid(&[-5.0, -5.0], &[5.0, 5.0], &[3, 3], 10.0).unwrap(),
            rbf_layout: GridLayout {
                min: vec![-5.0, -5.0],
                max: vec![5.0, 5.0],
                counts: vec![3, 3],
                width: 10.0,
            },
            leader: VectorSignal::from_specs(&[
                vec![TermSpec::constant(1.0)],
                vec![TermSpec::constant(4.0)],
            ])
            .unwrap(),
            disturbances: vec![
                VectorSignal::from_specs(&[vec![TermSpec::sin(0.05, 2.0)], vec![]]).unwrap(),
                VectorSignal::from_specs(&[vec![], vec![TermSpec::cos(0.03, 3.0)]]).unwrap(),
            ],
            attacks: vec![],
            initial_states: vec![
                DVector::from_column_slice(&[0.5, 0.5]),
                DVector::from_column_slice(&[-0.5, 1.0]),
            ],
            bounds: BoundsConfig {
                source: BoundsSource::Auto,
                safety_factor: 1.2,
                transient_cutoff_s: 1.0,
                reference_pi: None,
            },
        }
    }

    fn constant_attack(kind: AttackKind, value: f64, window: (f64, f64)) -> AttackSpec {
        AttackSpec {
            id: "probe".into(),
            kind,
            target: 0,
            source: None,
            window,
            signal: VectorSignal::from_specs(&[vec![TermSpec::constant(value)]]).unwrap(),
        }
    }

    #[test]
    fn saturating_cross_values() {
        let d = Dynamics::SaturatingCross;
        let x = DVector::from_column_slice(&[1.0, 1.0]);
        let zero = DVector::zeros(2);
        let next = d.step(&x, &zero, &zero);
        assert_eq!(next, DVector::from_column_slice(&[0.5, 0.5]));
        // The origin is a fixed point of the drift.
        assert_eq!(d.drift(&zero), zero);
        // Drift components stay inside [−1/2, 1/2].
        let far = DVector::from_column_slice(&[500.0, -40.0]);
        assert!(d.drift(&far).amax() <= 0.5 + 1e-12);
    }

    #[test]
    fn linear_dynamics_is_matrix_action() {
        let matrix = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let d = Dynamics::Linear { matrix };
        let x = DVector::from_column_slice(&[2.0, 3.0]);
        let u = DVector::from_column_slice(&[0.5, 0.0]);
        let w = DVector::zeros(2);
        assert_eq!(d.step(&x, &u, &w), DVector::from_column_slice(&[3.5, -2.0]));
        assert_eq!(d.kind_name(), "linear");
    }

    #[test]
    fn hold_loop_is_stationary() {
        let scenario = hold_scenario(50);
        let result = run(&scenario).unwrap();
        let trace = &result.trace;
        assert_eq!(trace.steps(), 50);
        for k in 0..trace.steps() {
            assert_eq!(trace.state(k, 0)[0], 2.0);
            assert_eq!(trace.estimate(k, 0)[0], 2.0);
            assert_eq!(trace.residual_inf_norm(k, 0), 0.0);
            assert_eq!(trace.error(k, 0)[0], 0.0);
            assert_eq!(trace.control(k, 0)[0], 2.0);
            assert_eq!(trace.weight_norm(k, 0), 0.0);
            assert_eq!(trace.attack_mask(k, 0), 0);
        }
        assert_eq!(result.final_states[0][0], 2.0);
        assert_eq!(result.final_weights[0].norm(), 0.0);
    }

    #[test]
    fn unstable_plant_reports_divergence() {
        let mut scenario = hold_scenario(1000);
        scenario.dynamics = Dynamics::Linear { matrix: DMatrix::from_element(1, 1, 3.0) };
        scenario.leader = VectorSignal::from_specs(&[vec![TermSpec::constant(0.0)]]).unwrap();
        scenario.initial_states = vec![DVector::from_element(1, 1.0)];
        match run(&scenario) {
            Err(SimError::Diverged { agent: 1, magnitude, .. }) => {
                assert!(magnitude > DIVERGENCE_LIMIT);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn zero_amplitude_attack_leaves_the_trace_bit_identical() {
        let clean = hold_scenario(40);
        let mut nulled = clean.clone();
        nulled.attacks.push(constant_attack(AttackKind::Sensor, 0.0, (1.0, 2.0)));

        let a = run(&clean).unwrap().trace;
        let b = run(&nulled).unwrap().trace;
        // The mask records the (inert) activity, so compare the numbers.
        for k in 0..a.steps() {
            assert!(a.state(k, 0) == b.state(k, 0), "state differs at step {k}");
            assert!(a.estimate(k, 0) == b.estimate(k, 0), "estimate differs at step {k}");
            assert!(a.control(k, 0) == b.control(k, 0), "control differs at step {k}");
        }
    }

    #[test]
    fn repeated_runs_are_bit_identical() {
        let scenario = coupled_scenario();
        let a = run(&scenario).unwrap().trace;
        let b = run(&scenario).unwrap().trace;
        assert!(a == b, "two runs of one scenario must agree exactly");
    }

    #[test]
    fn actuator_attack_marks_only_its_window() {
        let mut scenario = hold_scenario(30);
        scenario.attacks.push(constant_attack(AttackKind::Actuator, 1.0, (1.0, 2.0)));
        let trace = run(&scenario).unwrap().trace;
        for k in 0..trace.steps() {
            let active = scenario.attacks[0].active(trace.time(k));
            assert_eq!(trace.attack_mask(k, 0) == 1, active, "mask wrong at step {k}");
        }
        // The plant drifts away from the observer's prediction while pushed.
        let during = trace.residual_inf_norm(12, 0);
        assert!(during > 0.1, "attack should open the residual, got {during}");
    }

    #[test]
    fn calibration_measures_the_loop() {
        let scenario = coupled_scenario();
        let cal = calibrate(&scenario).unwrap();
        assert!(cal.steady_residual_max > 0.0);
        assert_eq!(cal.threshold, 1.2 * cal.steady_residual_max);
        assert_eq!(cal.e_m_measured, 1.2 * cal.steady_error_max);
        assert_eq!(cal.bounds.activation, 3.0);
        assert_eq!(cal.bounds.offset, 2.0f64.sqrt());
        assert!(cal.bounds.disturbance > 0.0 && cal.bounds.disturbance <= 1.2 * 0.08001);
        // Leader is constant, so the scan is exact.
        assert_eq!(cal.bounds.leader, 17.0f64.sqrt());
        // Mild gains keep every spectral condition satisfied, so the
        // closed-form bounds come out too.
        assert!(cal.formation_bound.is_some(), "note: {:?}", cal.formation_bound_note);
        assert!(cal.threshold_parts.is_some(), "note: {:?}", cal.threshold_note);
        let parts = cal.threshold_parts.unwrap();
        assert!(parts.pi > cal.threshold, "closed-form bound should be the looser one");
    }

    #[test]
    fn calibration_refuses_attacked_scenarios() {
        let mut scenario = coupled_scenario();
        scenario.attacks.push(AttackSpec {
            id: "edge".into(),
            kind: AttackKind::Actuator,
            target: 1,
            source: None,
            window: (0.5, 1.5),
            signal: VectorSignal::from_specs(&[vec![TermSpec::constant(1.0)], vec![]]).unwrap(),
        });
        assert_eq!(calibrate(&scenario).unwrap_err(), CalibrateError::AttacksPresent(1));
    }

    #[test]
    fn calibration_rejects_degenerate_runs() {
        // Horizon shorter than the transient cutoff: nothing steady to measure.
        let short = hold_scenario(3);
        assert!(matches!(
            calibrate(&short).unwrap_err(),
            CalibrateError::HorizonInsideTransient { cutoff: 3, horizon: 3 }
        ));

        // The hold scenario starts the observer on the plant state and nothing
        // ever perturbs it, so every residual is exactly zero — no positive
        // threshold can come out of that run.
        let stationary = hold_scenario(20);
        assert_eq!(calibrate(&stationary).unwrap_err(), CalibrateError::DegenerateResidual);
    }

    #[test]
    fn detectability_of_a_constant_push() {
        let mut scenario = hold_scenario(30);
        scenario.attacks.push(constant_attack(AttackKind::Actuator, 1.0, (0.5, 1.0)));
        let report = detectability_analysis(&scenario, "probe", 0.4).unwrap();
        assert_eq!(report.agent, 0);
        // Every sampled window step is active, and none outside.
        let (start, end) = report.window_steps;
        assert_eq!(report.points.len(), end - start + 1);
        for k in 0..scenario.horizon {
            let active = scenario.attacks[0].active(k as f64 * scenario.sample_period);
            assert_eq!(active, (start..=end).contains(&k), "window mismatch at step {k}");
        }
        // Before the attack the loop is exactly stationary, so the first
        // window step has unit drive and zero nuisance.
        let first = &report.points[0];
        assert_eq!(first.driven, 1.0);
        assert_eq!(first.nuisance, 0.0);
        assert!((first.margin - 0.6).abs() < 1e-15);
        assert_eq!(report.first_detectable_step(), Some(start));
        assert!(report.detectable());
    }

    #[test]
    fn detectability_needs_a_known_attack() {
        let scenario = hold_scenario(10);
        assert_eq!(
            detectability_analysis(&scenario, "ghost", 0.4).unwrap_err(),
            SimError::UnknownAttack { id: "ghost".into() }
        );
    }

    #[test]
    fn trace_layout_round_trips_through_accessors() {
        let scenario = coupled_scenario();
        let trace = run(&scenario).unwrap().trace;
        assert_eq!(trace.steps(), 300);
        assert_eq!(trace.n_agents(), 2);
        assert_eq!(trace.state_dim(), 2);
        assert_eq!(trace.time(100), 100.0 * 0.01); // the engine's own product
        assert_eq!(trace.leader_state(0), DVector::from_column_slice(&[1.0, 4.0]));
        // Initial conditions land in step 0 of the trace.
        assert_eq!(trace.state(0, 0), DVector::from_column_slice(&[0.5, 0.5]));
        assert_eq!(trace.state(0, 1), DVector::from_column_slice(&[-0.5, 1.0]));
        assert_eq!(trace.residual_inf_norm(0, 0), 0.0);
        // Residual norms come out agent-major for the detector.
        let norms = trace.residual_inf_norms();
        assert_eq!(norms.len(), 2);
        assert_eq!(norms[0].len(), 300);
        assert_eq!(norms[1][17], trace.residual_inf_norm(17, 1));
        // Global error norm is the stacked norm of the per-agent blocks.
        let manual = (trace.error(5, 0).norm_squared() + trace.error(5, 1).norm_squared()).sqrt();
        assert_eq!(trace.global_error_norm(5), manual);
    }
}
