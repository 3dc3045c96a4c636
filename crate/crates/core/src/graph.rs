//! Directed weighted communication topology and its pinned Laplacian.
//!
//! Agents are vertices; an edge `j -> i` with weight `a_ij > 0` means agent
//! `i` receives agent `j`'s broadcast state. The in-degree Laplacian is
//! `L = Δ − A` with `Δ = diag(Σ_j a_ij)`; pinning gains `b_i ≥ 0` (at least
//! one positive) couple followers to the leader through `B = diag(b_i)`.
//!
//! All spectral quantities the control and detection layers need come from
//! the pinned matrix `L + B`:
//!
//! * `σ̲(L+B) > 0` exactly when the graph is strongly connected and some
//!   agent is pinned — both are enforced at construction, so downstream code
//!   may divide by `σ̲` freely;
//! * the stacked coupling operator `L̄ = (L+B) ⊗ I_n` shares its largest
//!   singular value with `L+B`, so spectra are computed on the N×N matrix
//!   and never on the nN×nN lift.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("graph needs at least one agent")]
    Empty,
    #[error("edge ({from}, {to}) references agent out of range 1..={n}")]
    EdgeOutOfRange { from: usize, to: usize, n: usize },
    #[error("self-loop on agent {agent} is not allowed (a_ii = 0)")]
    SelfLoop { agent: usize },
    #[error("edge ({from}, {to}) has non-positive weight {weight}")]
    BadWeight { from: usize, to: usize, weight: f64 },
    #[error("duplicate edge ({from}, {to})")]
    DuplicateEdge { from: usize, to: usize },
    #[error("pin gain vector has length {got}, expected {expected}")]
    PinLength { got: usize, expected: usize },
    #[error("pin gain for agent {agent} is negative ({value})")]
    NegativePin { agent: usize, value: f64 },
    #[error("no agent is pinned to the leader (all b_i = 0)")]
    NoPin,
    #[error("graph is not strongly connected; the coupling matrix would be singular")]
    NotStronglyConnected,
    #[error("leader information does not reach every agent")]
    LeaderUnreachable,
}

/// Directed edge `from -> to` with positive weight, agents numbered 1-based
/// as in scenario files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(from: usize, to: usize, weight: f64) -> Self {
        Self { from, to, weight }
    }

    pub fn unit(from: usize, to: usize) -> Self {
        Self::new(from, to, 1.0)
    }
}

/// Validated topology: adjacency `a[(i,j)]` = weight of edge `j -> i`
/// (0-based internally), plus leader pin gains.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedWeightedGraph {
    n_agents: usize,
    adjacency: DMatrix<f64>,
    pin_gains: DVector<f64>,
}

/// Is there a directed path between every ordered vertex pair?
/// Pure reachability over the edge list, usable before graph construction.
pub fn is_strongly_connected(n_agents: usize, edges: &[Edge]) -> bool {
    if n_agents == 0 {
        return false;
    }
    (1..=n_agents).all(|start| reach_from(n_agents, edges, &[start]).iter().all(|&r| r))
}

/// Does leader information reach every agent, i.e. is every vertex reachable
/// from the pinned set through directed edges?
pub fn leader_reaches_all(n_agents: usize, edges: &[Edge], pin_gains: &[f64]) -> bool {
    let pinned: Vec<usize> = (1..=n_agents).filter(|&i| pin_gains[i - 1] > 0.0).collect();
    if pinned.is_empty() {
        return false;
    }
    reach_from(n_agents, edges, &pinned).iter().all(|&r| r)
}

fn reach_from(n_agents: usize, edges: &[Edge], starts: &[usize]) -> Vec<bool> {
    let mut seen = vec![false; n_agents];
    let mut stack: Vec<usize> = starts.iter().map(|&s| s - 1).collect();
    for &s in &stack {
        seen[s] = true;
    }
    while let Some(v) = stack.pop() {
        for e in edges {
            if e.from - 1 == v && !seen[e.to - 1] {
                seen[e.to - 1] = true;
                stack.push(e.to - 1);
            }
        }
    }
    seen
}

impl DirectedWeightedGraph {
    /// Builds and fully validates a topology. Fails fast on anything that
    /// would make the pinned coupling matrix singular later.
    pub fn new(n_agents: usize, edges: &[Edge], pin_gains: &[f64]) -> Result<Self, GraphError> {
        if n_agents == 0 {
            return Err(GraphError::Empty);
        }
        if pin_gains.len() != n_agents {
            return Err(GraphError::PinLength { got: pin_gains.len(), expected: n_agents });
        }
        for (idx, &b) in pin_gains.iter().enumerate() {
            if b < 0.0 || !b.is_finite() {
                return Err(GraphError::NegativePin { agent: idx + 1, value: b });
            }
        }
        if !pin_gains.iter().any(|&b| b > 0.0) {
            return Err(GraphError::NoPin);
        }

        let mut adjacency = DMatrix::zeros(n_agents, n_agents);
        for e in edges {
            if e.from == 0 || e.to == 0 || e.from > n_agents || e.to > n_agents {
                return Err(GraphError::EdgeOutOfRange { from: e.from, to: e.to, n: n_agents });
            }
            if e.from == e.to {
                return Err(GraphError::SelfLoop { agent: e.from });
            }
            if !(e.weight > 0.0) || !e.weight.is_finite() {
                return Err(GraphError::BadWeight { from: e.from, to: e.to, weight: e.weight });
            }
            let (i, j) = (e.to - 1, e.from - 1);
            if adjacency[(i, j)] != 0.0 {
                return Err(GraphError::DuplicateEdge { from: e.from, to: e.to });
            }
            adjacency[(i, j)] = e.weight;
        }

        if n_agents > 1 && !is_strongly_connected(n_agents, edges) {
            return Err(GraphError::NotStronglyConnected);
        }
        if !leader_reaches_all(n_agents, edges, pin_gains) {
            return Err(GraphError::LeaderUnreachable);
        }

        Ok(Self {
            n_agents,
            adjacency,
            pin_gains: DVector::from_column_slice(pin_gains),
        })
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    /// Weight of edge `j -> i`; zero when absent. 0-based indices.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[(i, j)]
    }

    /// Leader pin gain of agent `i` (0-based).
    pub fn pin_gain(&self, i: usize) -> f64 {
        self.pin_gains[i]
    }

    /// Weighted in-degree `Σ_j a_ij` of agent `i` (0-based).
    pub fn in_degree(&self, i: usize) -> f64 {
        self.adjacency.row(i).sum()
    }

    /// All edges in deterministic order (by receiver, then source),
    /// 1-based as accepted by [`DirectedWeightedGraph::new`].
    pub fn edges(&self) -> Vec<Edge> {
        let mut edges = Vec::new();
        for i in 0..self.n_agents {
            for j in 0..self.n_agents {
                let weight = self.adjacency[(i, j)];
                if weight > 0.0 {
                    edges.push(Edge::new(j + 1, i + 1, weight));
                }
            }
        }
        edges
    }

    /// In-neighbours of agent `i` with weights, ascending by source index.
    pub fn in_neighbours(&self, i: usize) -> Vec<(usize, f64)> {
        (0..self.n_agents)
            .filter(|&j| self.adjacency[(i, j)] > 0.0)
            .map(|j| (j, self.adjacency[(i, j)]))
            .collect()
    }

    /// Assembles the Laplacian family and its spectra.
    pub fn laplacian(&self, state_dim: usize) -> LaplacianBundle {
        let n = self.n_agents;
        let mut laplacian = -self.adjacency.clone();
        for i in 0..n {
            laplacian[(i, i)] = self.in_degree(i);
        }
        let mut pinned = laplacian.clone();
        for i in 0..n {
            pinned[(i, i)] += self.pin_gains[i];
        }

        let svd = pinned.clone().svd(false, false);
        let sigma_max = svd.singular_values.max();
        let sigma_min = svd.singular_values.min();
        let l_bar = pinned.kronecker(&DMatrix::identity(state_dim, state_dim));

        LaplacianBundle { laplacian, pinned, l_bar, sigma_min, sigma_max, state_dim }
    }
}

/// The Laplacian `L`, pinned matrix `L + B`, stacked lift `L̄ = (L+B) ⊗ I_n`,
/// and the extreme singular values of `L + B`. Because the Kronecker factor
/// is an identity, `σ̄(L̄) = σ̄(L+B)` and `σ̲(L̄) = σ̲(L+B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianBundle {
    laplacian: DMatrix<f64>,
    pinned: DMatrix<f64>,
    l_bar: DMatrix<f64>,
    sigma_min: f64,
    sigma_max: f64,
    state_dim: usize,
}

impl LaplacianBundle {
    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    /// `L + B`.
    pub fn pinned(&self) -> &DMatrix<f64> {
        &self.pinned
    }

    /// `(L + B) ⊗ I_n`, the operator that maps stacked per-agent offsets to
    /// stacked local errors.
    pub fn l_bar(&self) -> &DMatrix<f64> {
        &self.l_bar
    }

    /// `σ̲(L + B)`; strictly positive by the construction-time checks.
    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    /// `σ̄(L + B) = σ̄(L̄)`.
    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn n_agents(&self) -> usize {
        self.pinned.nrows()
    }
}
