//! Radial-basis-function approximation of the unknown agent dynamics, with
//! the one-step weight tuning rule used by both controller and observer.
//!
//! Each agent carries a Gaussian basis `φ_j(x) = exp(−‖x − m_j‖² / p_j)` and
//! a weight matrix `Ŵ ∈ R^{ϑ×n}` so the dynamics estimate is `f̂(x) = Ŵᵀφ(x)`.
//! Activations lie in `(0, 1]`, hence `‖φ(x)‖ ≤ √ϑ` — the constructive
//! activation bound every spectral condition downstream uses.
//!
//! Weights update once per sample from the measurable prediction error
//! `h̄ = x⁺ − u − Ŵᵀφ(x)` via
//!
//! `Ŵ⁺ = Ŵ + α · φ(x) · h̄ᵀ − γ · Ŵ`
//!
//! with learning rate `α` and leakage `γ ∈ (0, 1)`; the leakage keeps the
//! weight norm ultimately bounded without a projection step.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RbfError {
    #[error("basis needs at least one centre")]
    EmptyBasis,
    #[error("centre {index} has dimension {got}, expected {expected}")]
    CentreDim { index: usize, got: usize, expected: usize },
    #[error("width {index} must be positive and finite (got {value})")]
    BadWidth { index: usize, value: f64 },
    #[error("grid bounds have mismatched dimensions")]
    GridDims,
    #[error("grid axis {axis} needs at least one point")]
    EmptyAxis { axis: usize },
    #[error("grid axis {axis} has min {min} > max {max}")]
    InvertedAxis { axis: usize, min: f64, max: f64 },
    #[error("learning rate must be positive (got {0})")]
    BadLearningRate(f64),
    #[error("leakage must lie strictly inside (0, 1) (got {0})")]
    BadLeak(f64),
    #[error("learning rate {alpha} must stay below 1/φ_M² = {bound} for this basis")]
    LearningRateVsBasis { alpha: f64, bound: f64 },
}

/// Gaussian basis: centres `m_j` and widths `p_j > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfBasis {
    centres: Vec<DVector<f64>>,
    widths: Vec<f64>,
    state_dim: usize,
}

impl RbfBasis {
    pub fn new(centres: Vec<DVector<f64>>, widths: Vec<f64>) -> Result<Self, RbfError> {
        if centres.is_empty() {
            return Err(RbfError::EmptyBasis);
        }
        let state_dim = centres[0].len();
        for (index, c) in centres.iter().enumerate() {
            if c.len() != state_dim {
                return Err(RbfError::CentreDim { index, got: c.len(), expected: state_dim });
            }
        }
        if widths.len() != centres.len() {
            return Err(RbfError::BadWidth { index: widths.len(), value: f64::NAN });
        }
        for (index, &p) in widths.iter().enumerate() {
            if !(p > 0.0) || !p.is_finite() {
                return Err(RbfError::BadWidth { index, value: p });
            }
        }
        Ok(Self { centres, widths, state_dim })
    }

    /// Centres on a regular grid over the box `[min, max]` with `counts`
    /// points per axis and one shared width. Axes with a single point sit at
    /// the interval midpoint.
    pub fn grid(min: &[f64], max: &[f64], counts: &[usize], width: f64) -> Result<Self, RbfError> {
        let dim = min.len();
        if max.len() != dim || counts.len() != dim || dim == 0 {
            return Err(RbfError::GridDims);
        }
        for axis in 0..dim {
            if counts[axis] == 0 {
                return Err(RbfError::EmptyAxis { axis });
            }
            if min[axis] > max[axis] {
                return Err(RbfError::InvertedAxis { axis, min: min[axis], max: max[axis] });
            }
        }
        let axis_points: Vec<Vec<f64>> = (0..dim)
            .map(|axis| {
                let k = counts[axis];
                if k == 1 {
                    vec![0.5 * (min[axis] + max[axis])]
                } else {
                    (0..k)
                        .map(|i| {
                            min[axis] + (max[axis] - min[axis]) * i as f64 / (k - 1) as f64
                        })
                        .collect()
                }
            })
            .collect();

        // Cartesian product, last axis fastest, so centre order is stable.
        let total: usize = counts.iter().product();
        let mut centres = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut c = DVector::zeros(dim);
            for axis in (0..dim).rev() {
                c[axis] = axis_points[axis][rem % counts[axis]];
                rem /= counts[axis];
            }
            centres.push(c);
        }
        Self::new(centres, vec![width; total])
    }

    /// Number of neurons ϑ.
    pub fn len(&self) -> usize {
        self.centres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centres.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// `φ_M = √ϑ`, the constructive bound with every activation at its
    /// maximum of 1.
    pub fn activation_bound(&self) -> f64 {
        (self.len() as f64).sqrt()
    }

    /// Activation vector `φ(x)`. Components lie in `[0, 1]`: strictly
    /// positive anywhere near the grid, underflowing to exactly zero only
    /// when an input sits hundreds of widths away from a centre.
    pub fn activation(&self, x: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(x.len(), self.state_dim);
        DVector::from_iterator(
            self.centres.len(),
            self.centres.iter().zip(&self.widths).map(|(m, &p)| {
                let d = x - m;
                (-d.dot(&d) / p).exp()
            }),
        )
    }
}

/// Learning rate and leakage for the weight update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningParams {
    pub learning_rate: f64,
    pub leak: f64,
}

impl TuningParams {
    pub fn new(learning_rate: f64, leak: f64) -> Result<Self, RbfError> {
        if !(learning_rate > 0.0) || !learning_rate.is_finite() {
            return Err(RbfError::BadLearningRate(learning_rate));
        }
        if !(leak > 0.0 && leak < 1.0) {
            return Err(RbfError::BadLeak(leak));
        }
        Ok(Self { learning_rate, leak })
    }

    /// Additionally enforces `α < 1/φ_M²` against a concrete basis, the
    /// stability margin of the tuning recursion.
    pub fn validated_against(self, basis: &RbfBasis) -> Result<Self, RbfError> {
        let bound = 1.0 / (basis.activation_bound() * basis.activation_bound());
        if self.learning_rate >= bound {
            return Err(RbfError::LearningRateVsBasis { alpha: self.learning_rate, bound });
        }
        Ok(self)
    }
}

/// Dynamics estimate `f̂(x) = Ŵᵀ φ`.
pub fn estimate(weights: &DMatrix<f64>, phi: &DVector<f64>) -> DVector<f64> {
    weights.transpose() * phi
}

/// Measurable prediction error `h̄ = x⁺ − u − f̂(x)`.
pub fn prediction_error(
    x_next: &DVector<f64>,
    u: &DVector<f64>,
    f_hat: &DVector<f64>,
) -> DVector<f64> {
    x_next - u - f_hat
}

/// One tuning step `Ŵ⁺ = (1 − γ)·Ŵ + α·φ·h̄ᵀ`.
pub fn tune_weights(
    weights: &DMatrix<f64>,
    phi: &DVector<f64>,
    h_bar: &DVector<f64>,
    params: TuningParams,
) -> DMatrix<f64> {
    weights * (1.0 - params.leak) + params.learning_rate * phi * h_bar.transpose()
}
