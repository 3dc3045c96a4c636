//! Run artifacts: CSV writers, the persisted bound file, and human-readable
//! summaries.
//!
//! Every writer is deterministic. Floats are printed with the shortest
//! representation that round-trips exactly, so identical runs produce
//! byte-identical files and parsing a written file recovers the exact values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};

use thiserror::Error;

use crate::observer::{DetectionReport, ObserverError};
use crate::scenario::Scenario;
use crate::sim::{Calibration, DetectabilityReport, Trace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("bound file line {line} is not 'key = value': '{content}'")]
    BadLine { line: usize, content: String },
    #[error("bound file line {line}: value of '{key}' is not a number: '{value}'")]
    BadValue { line: usize, key: String, value: String },
    #[error("bound file is missing required key '{0}'")]
    MissingKey(&'static str),
    #[error("bound file has unknown key '{0}'")]
    UnknownKey(String),
    #[error(transparent)]
    Bounds(#[from] ObserverError),
}

// ---- CSV writers ----

/// Writes the full trace.
///
/// Columns, in order: `step`, `t`, the leader components, then for each agent
/// `a` (1-based) its state `x{a}_*`, observer state `xhat{a}_*`, local
/// formation error `e{a}_*`, computed control `u{a}_*`, applied control
/// `u_applied{a}_*`, residual ∞-norm `residual_inf{a}`, weight norm
/// `weight_norm{a}`, and active-attack bitmask `attack_mask{a}`
/// (1 = actuator, 2 = sensor, 4 = incoming neighbour link).
pub fn write_trace_csv<W: Write>(mut w: W, trace: &Trace) -> io::Result<()> {
    let n = trace.n_agents();
    let dim = trace.state_dim();

    let mut header = String::from("step,t");
    for c in 1..=dim {
        write!(header, ",leader_{c}").unwrap();
    }
    for a in 1..=n {
        for label in ["x", "xhat", "e", "u", "u_applied"] {
            for c in 1..=dim {
                write!(header, ",{label}{a}_{c}").unwrap();
            }
        }
        write!(header, ",residual_inf{a},weight_norm{a},attack_mask{a}").unwrap();
    }
    writeln!(w, "{header}")?;

    let mut row = String::new();
    for k in 0..trace.steps() {
        row.clear();
        write!(row, "{},{}", k, trace.time(k)).unwrap();
        let leader = trace.leader_state(k);
        for c in 0..dim {
            write!(row, ",{}", leader[c]).unwrap();
        }
        for a in 0..n {
            for block in [
                trace.state(k, a),
                trace.estimate(k, a),
                trace.error(k, a),
                trace.control(k, a),
                trace.applied(k, a),
            ] {
                for c in 0..dim {
                    write!(row, ",{}", block[c]).unwrap();
                }
            }
            write!(
                row,
                ",{},{},{}",
                trace.residual_inf_norm(k, a),
                trace.weight_norm(k, a),
                trace.attack_mask(k, a)
            )
            .unwrap();
        }
        writeln!(w, "{row}")?;
    }
    Ok(())
}

/// Writes the alarm decisions: `step,agent,residual_inf_norm,alarm` for every
/// step and agent (agent 1-based, alarm 0/1).
pub fn write_detection_csv<W: Write>(mut w: W, report: &DetectionReport) -> io::Result<()> {
    writeln!(w, "step,agent,residual_inf_norm,alarm")?;
    let steps = report.residual_norms.first().map_or(0, Vec::len);
    for k in 0..steps {
        for agent in 0..report.n_agents() {
            writeln!(
                w,
                "{},{},{},{}",
                k,
                agent + 1,
                report.residual_norms[agent][k],
                u8::from(report.alarm_at(agent, k))
            )?;
        }
    }
    Ok(())
}

/// Writes one agent's plot-ready residual series:
/// `step,t,residual_inf_norm,threshold`.
pub fn write_residual_csv<W: Write>(
    mut w: W,
    trace: &Trace,
    agent: usize,
    threshold: f64,
) -> io::Result<()> {
    writeln!(w, "step,t,residual_inf_norm,threshold")?;
    for k in 0..trace.steps() {
        writeln!(
            w,
            "{},{},{},{}",
            k,
            trace.time(k),
            trace.residual_inf_norm(k, agent),
            threshold
        )?;
    }
    Ok(())
}

/// Writes the step-wise detectability margins:
/// `step,t,driven,nuisance,margin,detectable`.
pub fn write_detectability_csv<W: Write>(
    mut w: W,
    report: &DetectabilityReport,
) -> io::Result<()> {
    writeln!(w, "step,t,driven,nuisance,margin,detectable")?;
    for (offset, point) in report.points.iter().enumerate() {
        let step = report.window_steps.0 + offset;
        writeln!(
            w,
            "{},{},{},{},{},{}",
            step,
            step as f64 * report.sample_period,
            point.driven,
            point.nuisance,
            point.margin,
            u8::from(point.detectable())
        )?;
    }
    Ok(())
}

// ---- Bound file ----

/// The persisted form of a calibration: the measured bound constants, the
/// operational threshold, and the closed-form bounds when they were
/// evaluable. Round-trips exactly through [`BoundsFile::to_text`] /
/// [`BoundsFile::parse`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsFile {
    pub disturbance: f64,
    pub approximation: f64,
    pub ideal_weight: f64,
    pub activation: f64,
    pub leader: f64,
    pub offset: f64,
    pub safety_factor: f64,
    pub transient_cutoff_s: f64,
    pub steady_residual_max: f64,
    pub steady_error_max: f64,
    pub e_m_measured: f64,
    /// Operational alarm threshold.
    pub threshold: f64,
    pub formation_error_bound: Option<f64>,
    pub weight_error_bound: Option<f64>,
    pub threshold_formula: Option<f64>,
    /// Why the closed-form formation bound is absent (not parsed back).
    pub formation_note: Option<String>,
    /// Why the closed-form threshold is absent (not parsed back).
    pub threshold_note: Option<String>,
}

impl BoundsFile {
    pub fn from_calibration(cal: &Calibration) -> Self {
        Self {
            disturbance: cal.bounds.disturbance,
            approximation: cal.bounds.approximation,
            ideal_weight: cal.bounds.ideal_weight,
            activation: cal.bounds.activation,
            leader: cal.bounds.leader,
            offset: cal.bounds.offset,
            safety_factor: cal.safety_factor,
            transient_cutoff_s: cal.transient_cutoff_s,
            steady_residual_max: cal.steady_residual_max,
            steady_error_max: cal.steady_error_max,
            e_m_measured: cal.e_m_measured,
            threshold: cal.threshold,
            formation_error_bound: cal.formation_bound.as_ref().map(|b| b.e_m),
            weight_error_bound: cal.formation_bound.as_ref().map(|b| b.weight_error_bound),
            threshold_formula: cal.threshold_parts.as_ref().map(|p| p.pi),
            formation_note: cal.formation_bound_note.clone(),
            threshold_note: cal.threshold_note.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("# Bound constants measured from an attack-free run.\n");
        for (key, value) in [
            ("disturbance", self.disturbance),
            ("approximation", self.approximation),
            ("ideal_weight", self.ideal_weight),
            ("activation", self.activation),
            ("leader", self.leader),
            ("offset", self.offset),
            ("safety_factor", self.safety_factor),
            ("transient_cutoff_s", self.transient_cutoff_s),
            ("steady_residual_max", self.steady_residual_max),
            ("steady_error_max", self.steady_error_max),
            ("e_m_measured", self.e_m_measured),
            ("threshold", self.threshold),
        ] {
            writeln!(s, "{key} = {value}").unwrap();
        }
        s.push_str("# Closed-form ultimate bounds (absent when a gain condition fails):\n");
        for (key, value) in [
            ("formation_error_bound", self.formation_error_bound),
            ("weight_error_bound", self.weight_error_bound),
            ("threshold_formula", self.threshold_formula),
        ] {
            if let Some(value) = value {
                writeln!(s, "{key} = {value}").unwrap();
            }
        }
        if let Some(note) = &self.formation_note {
            writeln!(s, "# formation bound unavailable: {note}").unwrap();
        }
        if let Some(note) = &self.threshold_note {
            writeln!(s, "# threshold formula unavailable: {note}").unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, ReportError> {
        let mut values: BTreeMap<String, f64> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ReportError::BadLine { line: idx + 1, content: raw.to_string() });
            };
            let key = key.trim();
            let value = value.trim();
            let parsed: f64 = value.parse().map_err(|_| ReportError::BadValue {
                line: idx + 1,
                key: key.to_string(),
                value: value.to_string(),
            })?;
            values.insert(key.to_string(), parsed);
        }

        let mut take = |key: &'static str| -> Result<f64, ReportError> {
            values.remove(key).ok_or(ReportError::MissingKey(key))
        };
        let file = Self {
            disturbance: take("disturbance")?,
            approximation: take("approximation")?,
            ideal_weight: take("ideal_weight")?,
            activation: take("activation")?,
            leader: take("leader")?,
            offset: take("offset")?,
            safety_factor: take("safety_factor")?,
            transient_cutoff_s: take("transient_cutoff_s")?,
            steady_residual_max: take("steady_residual_max")?,
            steady_error_max: take("steady_error_max")?,
            e_m_measured: take("e_m_measured")?,
            threshold: take("threshold")?,
            formation_error_bound: values.remove("formation_error_bound"),
            weight_error_bound: values.remove("weight_error_bound"),
            threshold_formula: values.remove("threshold_formula"),
            formation_note: None,
            threshold_note: None,
        };
        if let Some(unknown) = values.into_keys().next() {
            return Err(ReportError::UnknownKey(unknown));
        }
        Ok(file)
    }
}

// ---- Summaries ----

fn format_interval(start_step: usize, end_step: usize, period: f64) -> String {
    format!(
        "steps {start_step}–{end_step} ({:.3} s – {:.3} s)",
        start_step as f64 * period,
        end_step as f64 * period
    )
}

/// Renders the run summary: threshold provenance, per-agent alarm intervals,
/// and per-attack detection latencies. Key-value lines first, then one block
/// per agent and per attack.
pub fn render_summary(
    scenario: &Scenario,
    threshold_source: &str,
    calibration: Option<&Calibration>,
    detection: &DetectionReport,
) -> String {
    let period = scenario.sample_period;
    let mut s = String::new();
    writeln!(s, "scenario = {}", scenario.name).unwrap();
    writeln!(s, "agents = {}", scenario.n_agents()).unwrap();
    writeln!(s, "state_dim = {}", scenario.state_dim).unwrap();
    writeln!(s, "sample_period_s = {}", period).unwrap();
    writeln!(s, "horizon_steps = {}", scenario.horizon).unwrap();
    writeln!(s, "transient_cutoff_s = {}", scenario.bounds.transient_cutoff_s).unwrap();
    writeln!(s, "threshold = {}", detection.threshold).unwrap();
    writeln!(s, "threshold_source = {threshold_source}").unwrap();
    if let Some(reference) = scenario.bounds.reference_pi {
        writeln!(s, "reference_threshold = {reference}").unwrap();
        writeln!(
            s,
            "threshold_vs_reference = {:+.3}",
            detection.threshold - reference
        )
        .unwrap();
    }
    if let Some(cal) = calibration {
        writeln!(s, "steady_residual_max = {}", cal.steady_residual_max).unwrap();
        writeln!(s, "steady_error_max = {}", cal.steady_error_max).unwrap();
        match (&cal.threshold_parts, &cal.threshold_note) {
            (Some(parts), _) => writeln!(s, "threshold_formula = {}", parts.pi).unwrap(),
            (None, Some(note)) => writeln!(s, "threshold_formula_note = {note}").unwrap(),
            (None, None) => {}
        }
    }

    let cutoff = scenario.transient_cutoff_step();
    s.push('\n');
    for agent in 0..detection.n_agents() {
        let intervals = &detection.alarms[agent];
        if intervals.is_empty() {
            writeln!(s, "agent {}: no alarms", agent + 1).unwrap();
            continue;
        }
        let shown = intervals.iter().take(5);
        let listed: Vec<String> =
            shown.map(|iv| format_interval(iv.start_step, iv.end_step, period)).collect();
        let more = intervals.len().saturating_sub(5);
        let suffix = if more > 0 { format!(" (+{more} more)") } else { String::new() };
        writeln!(
            s,
            "agent {}: {} alarm interval(s): {}{}",
            agent + 1,
            intervals.len(),
            listed.join("; "),
            suffix
        )
        .unwrap();
        if let Some(first_steady) = detection.first_alarm_at_or_after(agent, cutoff) {
            writeln!(
                s,
                "agent {}: first alarm past transient at step {} ({:.3} s)",
                agent + 1,
                first_steady,
                first_steady as f64 * period
            )
            .unwrap();
        }
    }

    for attack in &scenario.attacks {
        let start_step = (0..scenario.horizon)
            .find(|&k| attack.active(k as f64 * period));
        let end_step = (0..scenario.horizon)
            .rev()
            .find(|&k| attack.active(k as f64 * period));
        let (Some(start_step), Some(end_step)) = (start_step, end_step) else {
            writeln!(s, "attack '{}': window outside the sampled horizon", attack.id).unwrap();
            continue;
        };
        let target = attack.target;
        let line = match detection.latency_steps(target, start_step, end_step) {
            Some(latency) => format!(
                "first alarm after {latency} step(s) ({:.3} s into the window)",
                latency as f64 * period
            ),
            None => "no alarm inside the window".to_string(),
        };
        writeln!(
            s,
            "attack '{}' ({} on agent {}, {}): {}",
            attack.id,
            attack.kind.label(),
            target + 1,
            format_interval(start_step, end_step, period),
            line
        )
        .unwrap();
    }
    s
}

/// Renders the detectability verdict plus a decimated step-wise table (full
/// resolution goes to [`write_detectability_csv`]).
pub fn render_detectability(report: &DetectabilityReport) -> String {
    let mut s = String::new();
    writeln!(s, "attack_id = {}", report.attack_id).unwrap();
    writeln!(s, "agent = {}", report.agent + 1).unwrap();
    writeln!(s, "threshold = {}", report.threshold).unwrap();
    writeln!(
        s,
        "window = {}",
        format_interval(report.window_steps.0, report.window_steps.1, report.sample_period)
    )
    .unwrap();
    match report.first_detectable_step() {
        Some(step) => writeln!(
            s,
            "guaranteed_detectable = yes, from step {} ({:.3} s)",
            step,
            step as f64 * report.sample_period
        )
        .unwrap(),
        None => writeln!(s, "guaranteed_detectable = no").unwrap(),
    }

    if report.points.is_empty() {
        return s;
    }
    s.push('\n');
    writeln!(s, "{:>10} {:>12} {:>14} {:>14} {:>14}", "step", "t", "driven", "nuisance", "margin")
        .unwrap();
    let stride = (report.points.len() / 40).max(1);
    let first_hit = report.first_detectable_step();
    for (offset, point) in report.points.iter().enumerate() {
        let step = report.window_steps.0 + offset;
        let is_edge = offset == 0 || offset == report.points.len() - 1;
        if !is_edge && offset % stride != 0 && first_hit != Some(step) {
            continue;
        }
        writeln!(
            s,
            "{:>10} {:>12.3} {:>14.6} {:>14.6} {:>14.6}{}",
            step,
            step as f64 * report.sample_period,
            point.driven,
            point.nuisance,
            point.margin,
            if point.detectable() { "  <- detectable" } else { "" }
        )
        .unwrap();
    }
    s
}
