//! Per-agent observer, residual generation, the detection threshold, alarm
//! extraction, and the accumulated-effect detectability test.
//!
//! Each agent runs a one-step observer
//!
//! `x̂ᵢ⁺ = Ŵᵢᵀφ(xᵢ) + uᵢ − Gᵢ(xᵢ − x̂ᵢ) − eᵢ`
//!
//! whose error `x̃ᵢ = xᵢ − x̂ᵢ` is the detection residual. Substituting the
//! plant map gives the exact residual recursion
//!
//! `x̃ᵢ⁺ = Gᵢ x̃ᵢ + W̃ᵢᵀφ(xᵢ) + εᵢ + wᵢ + eᵢ (+ sᵢ under attack)`
//!
//! so in the attack-free steady state the residual is driven only by the
//! bounded nuisance terms. The threshold `π` is the ultimate bound the
//! stability analysis yields for that recursion: any residual at or above π
//! is attributable to an attack effect `sᵢ`, not to model error, disturbance,
//! or formation error. Alarms compare the per-agent ∞-norm against π
//! (`‖x̃‖∞ ≤ ‖x̃‖₂` keeps the stacked bound valid per agent).

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::formation::ControlGains;
use crate::graph::{DirectedWeightedGraph, LaplacianBundle};
use crate::rbf::{estimate, RbfBasis, TuningParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObserverError {
    #[error("{what} has dimension {got}, expected {expected}")]
    DimensionMismatch { what: &'static str, got: usize, expected: usize },
    #[error("bound {name} must be finite and non-negative (got {value})")]
    BadBound { name: &'static str, value: f64 },
    #[error(
        "learning-rate bound violated: alpha*phi_M^2 = {product} >= 1, so eta is undefined"
    )]
    LearningRateBound { product: f64 },
    #[error(
        "coupling-gain bound violated: 1 - eta*c^2*sigma_max(P'P) = {denominator} <= 0, \
         so the formation-error bound is undefined"
    )]
    CouplingGainBound { denominator: f64 },
    #[error(
        "observer-gain bound violated: 1 - eta*sigma_max(G)^2 = {denominator} <= 0, \
         so the threshold is undefined"
    )]
    ObserverGainBound { denominator: f64 },
    #[error("negative discriminant {value} in the {what} bound; no real solution")]
    NegativeDiscriminant { what: &'static str, value: f64 },
}

/// One observer update. `own` is the agent's state reading (corrupted under a
/// sensor attack), `f_hat` the dynamics estimate at that reading, `u` the
/// control the agent computed, and `e` its neighbourhood error — all as seen
/// by the agent.
pub fn observer_step(
    own: &DVector<f64>,
    x_hat: &DVector<f64>,
    u: &DVector<f64>,
    e: &DVector<f64>,
    f_hat: &DVector<f64>,
    g_diag: &DVector<f64>,
) -> DVector<f64> {
    f_hat + u - g_diag.component_mul(&(own - x_hat)) - e
}

/// The scalar uncertainty bounds the threshold formulas consume.
///
/// All six primal bounds are supplied (typically by calibration against an
/// attack-free run); `noise_bound` and `drift_bound` are the derived sums the
/// formulas use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSet {
    /// `w_M`: bound on every disturbance norm.
    pub disturbance: f64,
    /// `ε_M`: bound on the basis-approximation error norm.
    pub approximation: f64,
    /// `W_M`: bound on the ideal weight Frobenius norm.
    pub ideal_weight: f64,
    /// `φ_M`: bound on the activation norm (`√ϑ` for a Gaussian basis).
    pub activation: f64,
    /// `F_M`: bound on the leader one-step map norm.
    pub leader: f64,
    /// `d_M`: norm of the stacked formation offsets.
    pub offset: f64,
}

impl BoundSet {
    pub fn new(
        disturbance: f64,
        approximation: f64,
        ideal_weight: f64,
        activation: f64,
        leader: f64,
        offset: f64,
    ) -> Result<Self, ObserverError> {
        let fields = [
            ("disturbance", disturbance),
            ("approximation", approximation),
            ("ideal_weight", ideal_weight),
            ("activation", activation),
            ("leader", leader),
            ("offset", offset),
        ];
        for (name, value) in fields {
            if !value.is_finite() || value < 0.0 {
                return Err(ObserverError::BadBound { name, value });
            }
        }
        Ok(Self { disturbance, approximation, ideal_weight, activation, leader, offset })
    }

    /// `μ_M = ε_M + w_M`, the per-step noise seen by the residual.
    pub fn noise_bound(&self) -> f64 {
        self.approximation + self.disturbance
    }

    /// `ν_M = F_M + d_M`, the reference-motion contribution.
    pub fn drift_bound(&self) -> f64 {
        self.leader + self.offset
    }
}

fn eta(alpha: f64, phi_m: f64) -> Result<f64, ObserverError> {
    let product = alpha * phi_m * phi_m;
    if product >= 1.0 {
        return Err(ObserverError::LearningRateBound { product });
    }
    Ok(1.0 + 1.0 / (1.0 - product))
}

/// Closed-form ultimate bound on the formation error, with the quantities it
/// is assembled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormationErrorBound {
    pub lambda1: f64,
    pub lambda2: f64,
    /// `e_M`: ultimate bound on `‖e‖`.
    pub e_m: f64,
    /// `ξ`: the constant in the companion weight-error bound.
    pub xi: f64,
    /// Ultimate bound on `‖W̃‖_F`.
    pub weight_error_bound: f64,
}

/// Evaluates the formation-error ultimate bound
///
/// `e_M = (Λ₁ + √(Λ₁² + (1 − η c² σ̄(PᵀP)) Λ₂)) / (1 − η c² σ̄(PᵀP))`
///
/// together with `ξ` and the weight-error bound. Errors (naming the violated
/// gain condition) when a denominator is non-positive instead of clamping.
pub fn compute_formation_error_bound(
    bounds: &BoundSet,
    bundle: &LaplacianBundle,
    gains: &ControlGains,
    tuning: TuningParams,
) -> Result<FormationErrorBound, ObserverError> {
    let alpha = tuning.learning_rate;
    let gamma = tuning.leak;
    let phi = bounds.activation;
    let mu = bounds.noise_bound();
    let nu = bounds.drift_bound();
    let w_m = bounds.ideal_weight;
    let eta = eta(alpha, phi)?;
    let one_m = 1.0 - alpha * phi * phi;

    let c = gains.coupling();
    let sigma_p = gains.p_matrix(bundle).svd(false, false).singular_values.max();
    let sigma_l = bundle.sigma_max();
    let sigma_ltl = sigma_l * sigma_l; // σ̄(L̄ᵀL̄) = σ̄(L̄)²

    let denominator = 1.0 - eta * c * c * sigma_p * sigma_p;
    if denominator <= 0.0 {
        return Err(ObserverError::CouplingGainBound { denominator });
    }

    let lambda1 = (1.0 / sigma_ltl)
        * c
        * sigma_p
        * sigma_l
        * ((gamma + 1.0) / one_m * mu + (2.0 - alpha) / one_m * nu);
    let lambda2 = 2.0 * gamma * w_m * mu
        + (1.0 / alpha) * (gamma / (2.0 - gamma)) * w_m * w_m
        + (-2.0 * gamma + (1.0 + gamma).powi(2) / one_m) * mu * mu
        + 2.0 * (1.0 + gamma) / one_m * mu * nu
        + (2.0 - alpha) / one_m * nu * nu;

    let discriminant = lambda1 * lambda1 + denominator * lambda2;
    if discriminant < 0.0 {
        return Err(ObserverError::NegativeDiscriminant {
            what: "formation-error",
            value: discriminant,
        });
    }
    let e_m = (lambda1 + discriminant.sqrt()) / denominator;

    let xi = 2.0 * alpha * gamma * w_m * mu
        + gamma * gamma * w_m * w_m
        + (-2.0 * alpha * gamma + alpha * (1.0 + gamma).powi(2) / one_m) * mu * mu
        + 2.0 * alpha * (1.0 + gamma) / one_m * mu * nu
        + alpha * (2.0 - alpha) / one_m * nu * nu
        + sigma_ltl / denominator * lambda1 * lambda1;

    let w_disc = gamma * gamma * (1.0 - gamma) * (1.0 - gamma) * w_m * w_m
        + gamma * (2.0 - gamma) * xi;
    if w_disc < 0.0 {
        return Err(ObserverError::NegativeDiscriminant { what: "weight-error", value: w_disc });
    }
    let weight_error_bound =
        (gamma * (1.0 - gamma) * w_m + w_disc.sqrt()) / (gamma * (2.0 - gamma));

    Ok(FormationErrorBound { lambda1, lambda2, e_m, xi, weight_error_bound })
}

/// The detection threshold with the two constants it is assembled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdParts {
    pub rho1: f64,
    pub rho2: f64,
    pub pi: f64,
}

/// Evaluates the residual ultimate bound
///
/// `π = (ρ₁ + √(ρ₁² + (1 − η σ̄²(G)) ρ₂)) / (1 − η σ̄²(G))`
///
/// with
///
/// `ρ₁ = ((γ+1)/(1−αφ_M²)) σ̄(G) μ_M + η σ̄(G) e_M`.
///
/// `e_m` is supplied by the caller: either the closed-form
/// [`compute_formation_error_bound`] value or an empirically calibrated bound.
pub fn compute_threshold(
    bounds: &BoundSet,
    e_m: f64,
    tuning: TuningParams,
    sigma_g: f64,
) -> Result<ThresholdParts, ObserverError> {
    let alpha = tuning.learning_rate;
    let gamma = tuning.leak;
    let phi = bounds.activation;
    let mu = bounds.noise_bound();
    let w_m = bounds.ideal_weight;
    let eta = eta(alpha, phi)?;
    let one_m = 1.0 - alpha * phi * phi;

    let denominator = 1.0 - eta * sigma_g * sigma_g;
    if denominator <= 0.0 {
        return Err(ObserverError::ObserverGainBound { denominator });
    }

    let rho1 = (gamma + 1.0) / one_m * sigma_g * mu + eta * sigma_g * e_m;
    let rho2 = 2.0 * gamma * mu * w_m
        + (1.0 / alpha) * (gamma / (2.0 - gamma)) * w_m * w_m
        + (-2.0 * gamma + (1.0 + gamma).powi(2) / one_m) * mu * mu
        + 2.0 * mu * ((gamma + 1.0) / one_m) * e_m
        + eta * e_m * e_m;

    let discriminant = rho1 * rho1 + denominator * rho2;
    if discriminant < 0.0 {
        return Err(ObserverError::NegativeDiscriminant {
            what: "residual",
            value: discriminant,
        });
    }
    let pi = (rho1 + discriminant.sqrt()) / denominator;
    Ok(ThresholdParts { rho1, rho2, pi })
}

// ---- Detection ----

/// Contiguous run of alarm steps, both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlarmInterval {
    pub start_step: usize,
    pub end_step: usize,
}

/// Alarm decisions for one run: alarm at step `t` iff `‖x̃ᵢ(t)‖∞ ≥ π`
/// (boundary inclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub threshold: f64,
    /// `[agent][step]` residual ∞-norms, as supplied.
    pub residual_norms: Vec<Vec<f64>>,
    /// Merged alarm intervals per agent.
    pub alarms: Vec<Vec<AlarmInterval>>,
}

impl DetectionReport {
    pub fn n_agents(&self) -> usize {
        self.residual_norms.len()
    }

    pub fn alarm_at(&self, agent: usize, step: usize) -> bool {
        self.residual_norms[agent][step] >= self.threshold
    }

    /// First alarm step at or after `from_step` for `agent`.
    pub fn first_alarm_at_or_after(&self, agent: usize, from_step: usize) -> Option<usize> {
        self.alarms[agent].iter().find_map(|iv| {
            if iv.end_step >= from_step {
                Some(iv.start_step.max(from_step))
            } else {
                None
            }
        })
    }

    /// Detection latency in steps for an attack window `[start, end]`
    /// (inclusive steps): first alarm inside the window minus window start,
    /// `None` if the window never alarms.
    pub fn latency_steps(&self, agent: usize, start_step: usize, end_step: usize) -> Option<usize> {
        self.first_alarm_at_or_after(agent, start_step)
            .filter(|&s| s <= end_step)
            .map(|s| s - start_step)
    }
}

/// Scans per-agent residual ∞-norm series and merges contiguous alarm steps
/// into intervals.
pub fn detect(residual_norms: Vec<Vec<f64>>, threshold: f64) -> DetectionReport {
    debug_assert!(threshold > 0.0, "detection needs a positive threshold");
    let alarms = residual_norms
        .iter()
        .map(|series| {
            let mut intervals: Vec<AlarmInterval> = Vec::new();
            let mut open: Option<usize> = None;
            for (step, &norm) in series.iter().enumerate() {
                match (norm >= threshold, open) {
                    (true, None) => open = Some(step),
                    (false, Some(start)) => {
                        intervals.push(AlarmInterval { start_step: start, end_step: step - 1 });
                        open = None;
                    }
                    _ => {}
                }
            }
            if let Some(start) = open {
                intervals.push(AlarmInterval { start_step: start, end_step: series.len() - 1 });
            }
            intervals
        })
        .collect();
    DetectionReport { threshold, residual_norms, alarms }
}

// ---- Detectability ----

/// Detectability margin at one step of the accumulated-response test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectabilityPoint {
    /// Step `k` of the test (1-based number of accumulated terms).
    pub step: usize,
    /// `‖Σ_{l<k} G^{k−1−l} s(l)‖`: accumulated attack drive.
    pub driven: f64,
    /// `‖Σ_{l<k} G^{k−1−l} n(l)‖`: accumulated nuisance response.
    pub nuisance: f64,
    /// `driven − (π + nuisance)`; detectable iff ≥ 0.
    pub margin: f64,
}

impl DetectabilityPoint {
    pub fn detectable(&self) -> bool {
        self.margin >= 0.0
    }
}

/// Evaluates the accumulated-response detectability test for every prefix:
/// the attack is guaranteed detectable at step `k` when the residual driven
/// by the attack alone exceeds the threshold plus the worst accumulated
/// nuisance response. Both matrix-power sums are evaluated by the running
/// recursion `S ← G·S + term`.
pub fn detectability_series(
    attack_effects: &[DVector<f64>],
    nuisances: &[DVector<f64>],
    g_diag: &DVector<f64>,
    threshold: f64,
) -> Vec<DetectabilityPoint> {
    assert_eq!(attack_effects.len(), nuisances.len(), "sequences must have equal length");
    let dim = g_diag.len();
    let mut s_acc = DVector::zeros(dim);
    let mut n_acc = DVector::zeros(dim);
    let mut points = Vec::with_capacity(attack_effects.len());
    for (idx, (s, n)) in attack_effects.iter().zip(nuisances).enumerate() {
        s_acc = g_diag.component_mul(&s_acc) + s;
        n_acc = g_diag.component_mul(&n_acc) + n;
        let driven = s_acc.norm();
        let nuisance = n_acc.norm();
        points.push(DetectabilityPoint {
            step: idx + 1,
            driven,
            nuisance,
            margin: driven - threshold - nuisance,
        });
    }
    points
}

/// One-shot form of [`detectability_series`]: the decision and signed margin
/// after `k` accumulated terms.
pub fn detectability_check(
    attack_effects: &[DVector<f64>],
    nuisances: &[DVector<f64>],
    g_diag: &DVector<f64>,
    threshold: f64,
    k: usize,
) -> (bool, f64) {
    assert!(k >= 1 && k <= attack_effects.len(), "k must index into the sequences");
    let point = detectability_series(&attack_effects[..k], &nuisances[..k], g_diag, threshold)
        .pop()
        .expect("k >= 1 guarantees a point");
    (point.detectable(), point.margin)
}

/// The nuisance term of the detectability test, composed from ground truth:
/// `h̄ + e` where `h̄ = x⁺ − u_applied − Ŵᵀφ(x)` is the true one-step
/// prediction error. By the residual recursion this equals the full nuisance
/// (weight error, approximation error, disturbance, and formation error)
/// exactly.
pub fn nuisance_from_truth(
    x_next: &DVector<f64>,
    u_applied: &DVector<f64>,
    f_hat_true: &DVector<f64>,
    e_true: &DVector<f64>,
) -> DVector<f64> {
    x_next - u_applied - f_hat_true + e_true
}

// ---- Attack effect on the residual ----

/// One-step effect of the active attacks on agent `i`'s residual:
///
/// `sᵢ = κuᵃ + λGxᵃ + f̂(xᵢ) − f̂(xᵢ + λxᵃ) − [Σⱼ a_ij(λxᵃ − φʲᵢ x̄ᵃⱼ) + bᵢλxᵃ]`
///
/// `actuator` is the active actuator signal `κ·uᵃ(t)` (zero outside its
/// window), `sensor` the active sensor signal `λ·xᵃ(t)`, and `neighbour_in`
/// maps source agents `j` to the active signal `φʲᵢ·x̄ᵃⱼ(t)` on the attacked
/// in-edge `j→i`. The sum runs over every in-neighbour because the agent's
/// own sensor corruption perturbs each relative term it computes.
pub fn attack_effect(
    basis: &RbfBasis,
    weights: &DMatrix<f64>,
    graph: &DirectedWeightedGraph,
    g_diag: &DVector<f64>,
    i: usize,
    x_true: &DVector<f64>,
    actuator: &DVector<f64>,
    sensor: &DVector<f64>,
    neighbour_in: &BTreeMap<usize, DVector<f64>>,
) -> DVector<f64> {
    let f_at_true = estimate(weights, &basis.activation(x_true));
    let f_at_corrupted = estimate(weights, &basis.activation(&(x_true + sensor)));

    let mut relative = sensor * graph.pin_gain(i);
    for (j, weight) in graph.in_neighbours(i) {
        let mut term = sensor.clone();
        if let Some(signal) = neighbour_in.get(&j) {
            term -= signal;
        }
        relative += term * weight;
    }

    actuator + g_diag.component_mul(sensor) + f_at_true - f_at_corrupted - relative
}
