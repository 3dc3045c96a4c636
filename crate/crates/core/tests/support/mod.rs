//! Shared helpers for the acceptance suite: an independent singular-value
//! oracle and a generator of small random scenarios.
//!
//! The oracle is a one-sided Jacobi iteration written from scratch so that
//! every spectral quantity the library reports can be cross-checked against
//! arithmetic that shares no code with it.

use flocksim_core::scenario::{BoundsConfig, BoundsSource, GridLayout};
use flocksim_core::{
    ControlGains, DirectedWeightedGraph, Dynamics, Edge, FormationSpec, RbfBasis, Scenario,
    TuningParams, VectorSignal,
};
use flocksim_core::signal::Term;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Singular values by one-sided Jacobi orthogonalisation, sorted descending.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut u = a.clone();
    let n = u.ncols();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = u.column(p).dot(&u.column(p));
                let beta: f64 = u.column(q).dot(&u.column(q));
                let gamma: f64 = u.column(p).dot(&u.column(q));
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..u.nrows() {
                    let up = u[(r, p)];
                    let uq = u[(r, q)];
                    u[(r, p)] = c * up - s * uq;
                    u[(r, q)] = s * up + c * uq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n).map(|j| u.column(j).norm()).collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

pub fn sigma_max(a: &DMatrix<f64>) -> f64 {
    singular_values(a)[0]
}

pub fn sigma_min(a: &DMatrix<f64>) -> f64 {
    *singular_values(a).last().unwrap()
}

/// A random scenario plus the raw ingredients the oracle tests recompute
/// from, kept separately so the checks do not round-trip through the library
/// accessors.
pub struct RandomScenario {
    pub scenario: Scenario,
    pub offsets: Vec<DVector<f64>>,
}

/// Builds a small random closed-loop scenario: ring-connected topology with
/// extra random edges, mild gains, mixed leader/disturbance signals, and
/// states near the basis grid.
pub fn random_scenario(rng: &mut ChaCha8Rng) -> RandomScenario {
    let n = rng.gen_range(2..=5usize);
    let dim = rng.gen_range(1..=3usize);

    let mut edges: Vec<Edge> = Vec::new();
    for i in 1..=n {
        let j = i % n + 1;
        edges.push(Edge::new(i, j, rng.gen_range(0.3..1.5)));
    }
    for _ in 0..rng.gen_range(0..=n) {
        let from = rng.gen_range(1..=n);
        let to = rng.gen_range(1..=n);
        let duplicate = edges.iter().any(|e| e.from == from && e.to == to);
        if from != to && !duplicate {
            edges.push(Edge::new(from, to, rng.gen_range(0.3..1.5)));
        }
    }
    let mut pins = vec![0.0; n];
    pins[rng.gen_range(0..n)] = rng.gen_range(0.5..1.5);
    if rng.gen_bool(0.5) {
        pins[rng.gen_range(0..n)] = rng.gen_range(0.5..1.5);
    }
    let graph = DirectedWeightedGraph::new(n, &edges, &pins).expect("ring topology is valid");

    let dynamics = if dim == 2 && rng.gen_bool(0.5) {
        Dynamics::SaturatingCross
    } else {
        let mut a = DMatrix::zeros(dim, dim);
        for r in 0..dim {
            for c in 0..dim {
                a[(r, c)] = rng.gen_range(-0.3..0.3);
            }
        }
        Dynamics::Linear { matrix: a }
    };

    let offsets: Vec<DVector<f64>> =
        (0..n).map(|_| DVector::from_fn(dim, |_, _| rng.gen_range(-2.0..2.0))).collect();
    let bound = offsets.iter().map(|d| d.norm_squared()).sum::<f64>().sqrt() + 1.0;
    let formation = FormationSpec::new(offsets.clone(), bound).expect("finite offsets");

    let feedback: Vec<DVector<f64>> =
        (0..n).map(|_| DVector::from_fn(dim, |_, _| rng.gen_range(0.05..0.3))).collect();
    let observer: Vec<DVector<f64>> =
        (0..n).map(|_| DVector::from_fn(dim, |_, _| rng.gen_range(0.05..0.3))).collect();
    let gains = ControlGains::new(feedback, rng.gen_range(0.02..0.2), observer)
        .expect("positive diagonals");

    let tuning = TuningParams::new(rng.gen_range(0.01..0.1), rng.gen_range(0.01..0.2))
        .expect("valid tuning");
    let grid_min = vec![-3.0; dim];
    let grid_max = vec![3.0; dim];
    let counts = vec![rng.gen_range(2..=3usize); dim];
    let basis = RbfBasis::grid(&grid_min, &grid_max, &counts, 8.0).expect("valid grid");
    let rbf_layout =
        GridLayout { min: grid_min, max: grid_max, counts, width: 8.0 };

    let random_terms = |rng: &mut ChaCha8Rng, scale: f64| -> Vec<Term> {
        match rng.gen_range(0..4) {
            0 => vec![Term::Constant(rng.gen_range(-scale..scale))],
            1 => vec![Term::Ramp(rng.gen_range(-0.1..0.1))],
            2 => vec![Term::Sin {
                amplitude: rng.gen_range(0.0..scale),
                frequency: rng.gen_range(0.5..4.0),
            }],
            _ => vec![Term::Cos {
                amplitude: rng.gen_range(0.0..scale),
                frequency: rng.gen_range(0.5..4.0),
            }],
        }
    };
    let leader = VectorSignal::new((0..dim).map(|_| random_terms(rng, 1.5)).collect());
    let disturbances: Vec<VectorSignal> = (0..n)
        .map(|_| VectorSignal::new((0..dim).map(|_| random_terms(rng, 0.05)).collect()))
        .collect();

    let initial_states: Vec<DVector<f64>> =
        (0..n).map(|_| DVector::from_fn(dim, |_, _| rng.gen_range(-2.0..2.0))).collect();

    let scenario = Scenario {
        name: "randomised".to_string(),
        description: None,
        state_dim: dim,
        sample_period: 0.01,
        horizon: 40,
        graph,
        dynamics,
        formation,
        gains,
        force_gains: true,
        tuning,
        basis,
        rbf_layout,
        leader,
        disturbances,
        attacks: Vec::new(),
        initial_states,
        bounds: BoundsConfig {
            source: BoundsSource::Auto,
            safety_factor: 1.2,
            transient_cutoff_s: 0.1,
            reference_pi: None,
        },
    };
    RandomScenario { scenario, offsets }
}
