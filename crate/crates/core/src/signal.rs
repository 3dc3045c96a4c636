//! Deterministic time signals for leader trajectories, disturbances, and
//! attack injections.
//!
//! A signal is a vector of components; each component is a finite sum of
//! terms drawn from a fixed function set:
//!
//! * `constant`: `v`
//! * `ramp`:     `s·t`
//! * `sin`:      `a·sin(f·t)`
//! * `cos`:      `a·cos(f·t)`
//!
//! Time `t` is in seconds, frequencies in rad/s. The set is closed under the
//! scaled sums the scenario format needs and deliberately admits no user
//! code, so scenario files stay data.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Raw term as it appears in a scenario file. Field applicability depends on
/// `kind`; [`TermSpec::validate`] enforces it and rejects stray fields so a
/// typo such as a `frequency` on a `constant` cannot silently change meaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub kind: TermKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Constant,
    Ramp,
    Sin,
    Cos,
}

/// Validated signal term.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Constant(f64),
    Ramp(f64),
    Sin { amplitude: f64, frequency: f64 },
    Cos { amplitude: f64, frequency: f64 },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SignalError {
    #[error("{kind} term requires field `{field}`")]
    MissingField { kind: &'static str, field: &'static str },
    #[error("{kind} term does not accept field `{field}`")]
    ForeignField { kind: &'static str, field: &'static str },
    #[error("signal value is not finite at term validation")]
    NonFinite,
}

impl TermSpec {
    fn blank(kind: TermKind) -> Self {
        Self { kind, value: None, slope: None, amplitude: None, frequency: None }
    }

    pub fn constant(value: f64) -> Self {
        Self { value: Some(value), ..Self::blank(TermKind::Constant) }
    }

    pub fn ramp(slope: f64) -> Self {
        Self { slope: Some(slope), ..Self::blank(TermKind::Ramp) }
    }

    pub fn sin(amplitude: f64, frequency: f64) -> Self {
        Self {
            amplitude: Some(amplitude),
            frequency: Some(frequency),
            ..Self::blank(TermKind::Sin)
        }
    }

    pub fn cos(amplitude: f64, frequency: f64) -> Self {
        Self {
            amplitude: Some(amplitude),
            frequency: Some(frequency),
            ..Self::blank(TermKind::Cos)
        }
    }

    pub fn validate(&self) -> Result<Term, SignalError> {
        let kind_name = match self.kind {
            TermKind::Constant => "constant",
            TermKind::Ramp => "ramp",
            TermKind::Sin => "sin",
            TermKind::Cos => "cos",
        };
        let require = |v: Option<f64>, field: &'static str| {
            let v = v.ok_or(SignalError::MissingField { kind: kind_name, field })?;
            if v.is_finite() { Ok(v) } else { Err(SignalError::NonFinite) }
        };
        let forbid = |v: Option<f64>, field: &'static str| {
            if v.is_some() {
                Err(SignalError::ForeignField { kind: kind_name, field })
            } else {
                Ok(())
            }
        };
        match self.kind {
            TermKind::Constant => {
                forbid(self.slope, "slope")?;
                forbid(self.amplitude, "amplitude")?;
                forbid(self.frequency, "frequency")?;
                Ok(Term::Constant(require(self.value, "value")?))
            }
            TermKind::Ramp => {
                forbid(self.value, "value")?;
                forbid(self.amplitude, "amplitude")?;
                forbid(self.frequency, "frequency")?;
                Ok(Term::Ramp(require(self.slope, "slope")?))
            }
            TermKind::Sin | TermKind::Cos => {
                forbid(self.value, "value")?;
                forbid(self.slope, "slope")?;
                let amplitude = require(self.amplitude, "amplitude")?;
                let frequency = require(self.frequency, "frequency")?;
                Ok(match self.kind {
                    TermKind::Sin => Term::Sin { amplitude, frequency },
                    _ => Term::Cos { amplitude, frequency },
                })
            }
        }
    }
}

impl Term {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Term::Constant(v) => v,
            Term::Ramp(s) => s * t,
            Term::Sin { amplitude, frequency } => amplitude * (frequency * t).sin(),
            Term::Cos { amplitude, frequency } => amplitude * (frequency * t).cos(),
        }
    }

    /// Spec form, for serializing a programmatically built signal.
    pub fn to_spec(&self) -> TermSpec {
        match *self {
            Term::Constant(v) => TermSpec::constant(v),
            Term::Ramp(s) => TermSpec::ramp(s),
            Term::Sin { amplitude, frequency } => TermSpec::sin(amplitude, frequency),
            Term::Cos { amplitude, frequency } => TermSpec::cos(amplitude, frequency),
        }
    }
}

/// A fixed-dimension vector signal: one summed term list per component.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSignal {
    components: Vec<Vec<Term>>,
}

impl VectorSignal {
    pub fn new(components: Vec<Vec<Term>>) -> Self {
        Self { components }
    }

    /// Builds from the file representation, validating every term.
    pub fn from_specs(specs: &[Vec<TermSpec>]) -> Result<Self, SignalError> {
        let components = specs
            .iter()
            .map(|terms| terms.iter().map(TermSpec::validate).collect())
            .collect::<Result<Vec<Vec<Term>>, SignalError>>()?;
        Ok(Self { components })
    }

    /// The all-zero signal of dimension `dim` (empty term sums).
    pub fn zero(dim: usize) -> Self {
        Self { components: vec![Vec::new(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// Structurally zero: no terms in any component.
    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Vec::is_empty)
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.components.len(),
            self.components
                .iter()
                .map(|terms| terms.iter().map(|term| term.eval(t)).sum()),
        )
    }

    pub fn to_specs(&self) -> Vec<Vec<TermSpec>> {
        self.components
            .iter()
            .map(|terms| terms.iter().map(Term::to_spec).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: TermKind) -> TermSpec {
        TermSpec { kind, value: None, slope: None, amplitude: None, frequency: None }
    }

    #[test]
    fn constant_and_ramp_eval() {
        assert_eq!(Term::Constant(2.0).eval(123.0), 2.0);
        assert_eq!(Term::Ramp(8.0).eval(0.5), 4.0);
    }

    #[test]
    fn sinusoid_eval_matches_direct_formula() {
        let s = Term::Sin { amplitude: 2.0, frequency: 0.25 };
        let c = Term::Cos { amplitude: 3.0, frequency: 4.0 };
        let t = 50.0;
        assert_eq!(s.eval(t), 2.0 * (0.25 * t).sin());
        assert_eq!(c.eval(t), 3.0 * (4.0 * t).cos());
    }

    #[test]
    fn missing_required_field_rejected() {
        let err = spec(TermKind::Sin).validate().unwrap_err();
        assert!(matches!(err, SignalError::MissingField { field: "amplitude", .. }));
        let err = spec(TermKind::Constant).validate().unwrap_err();
        assert!(matches!(err, SignalError::MissingField { field: "value", .. }));
    }

    #[test]
    fn foreign_field_rejected() {
        let bad = TermSpec { frequency: Some(1.0), value: Some(2.0), ..spec(TermKind::Constant) };
        let err = bad.validate().unwrap_err();
        assert!(matches!(err, SignalError::ForeignField { field: "frequency", .. }));
    }

    #[test]
    fn leader_style_vector_signal() {
        // (t + 2, 8t + 4)
        let sig = VectorSignal::new(vec![
            vec![Term::Ramp(1.0), Term::Constant(2.0)],
            vec![Term::Ramp(8.0), Term::Constant(4.0)],
        ]);
        assert_eq!(sig.eval(0.0), DVector::from_vec(vec![2.0, 4.0]));
        assert_eq!(sig.eval(1.0), DVector::from_vec(vec![3.0, 12.0]));
    }

    #[test]
    fn zero_signal_is_zero() {
        let z = VectorSignal::zero(3);
        assert_eq!(z.eval(17.0), DVector::zeros(3));
    }

    #[test]
    fn spec_round_trip_preserves_terms() {
        let sig = VectorSignal::new(vec![
            vec![Term::Sin { amplitude: 0.01, frequency: 2.0 }],
            vec![Term::Cos { amplitude: 0.05, frequency: 3.0 }, Term::Constant(1.0)],
        ]);
        let back = VectorSignal::from_specs(&sig.to_specs()).unwrap();
        assert_eq!(sig, back);
    }
}
