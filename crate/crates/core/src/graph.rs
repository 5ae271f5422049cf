//! Graph instances, model parameters, and the conductivity feasible set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;
use crate::spectral::fiedler_value;

/// Undirected simple graph with fixed edge lengths. The adjacency is 0/1
/// symmetric with an empty diagonal; lengths are symmetric, positive on
/// edges, and bounded by 1 everywhere. Length entries on non-edges are
/// stored but never read by any energy computation.
#[derive(Clone, Debug)]
pub struct GraphInstance<S> {
    n: usize,
    adjacency: Vec<bool>,
    lengths: SquareMatrix<S>,
}

impl<S: Scalar> GraphInstance<S> {
    pub fn new(adjacency: SquareMatrix<S>, lengths: SquareMatrix<S>) -> Result<Self> {
        let n = adjacency.n();
        if lengths.n() != n {
            return Err(Error::Shape(format!(
                "adjacency is {n}x{n} but lengths is {0}x{0}",
                lengths.n()
            )));
        }
        let mut adj = vec![false; n * n];
        for i in 0..n {
            if adjacency[(i, i)] != S::zero() {
                return Err(Error::InvalidGraph(format!("loop at node {i}")));
            }
            for j in 0..n {
                let a = adjacency[(i, j)];
                if a != S::zero() && a != S::one() {
                    return Err(Error::InvalidGraph(format!(
                        "adjacency entry ({i}, {j}) = {a} is not 0 or 1"
                    )));
                }
                if a != adjacency[(j, i)] {
                    return Err(Error::InvalidGraph(format!(
                        "adjacency not symmetric at ({i}, {j})"
                    )));
                }
                adj[i * n + j] = a == S::one();
            }
        }
        Self::from_parts(n, adj, lengths)
    }

    /// Build from an edge list with 0-based endpoints. Non-edge length slots
    /// are filled with 1.
    pub fn from_edges(n: usize, edges: &[(usize, usize, S)]) -> Result<Self> {
        let mut adj = vec![false; n * n];
        let mut lengths = SquareMatrix::constant(n, S::one());
        for &(i, j, len) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) out of range for n = {n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("loop at node {i}")));
            }
            adj[i * n + j] = true;
            adj[j * n + i] = true;
            lengths.set_sym(i, j, len);
        }
        Self::from_parts(n, adj, lengths)
    }

    fn from_parts(n: usize, adjacency: Vec<bool>, lengths: SquareMatrix<S>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("empty graph".into()));
        }
        for i in 0..n {
            for j in 0..n {
                let l = lengths[(i, j)];
                if l != lengths[(j, i)] {
                    return Err(Error::InvalidGraph(format!(
                        "lengths not symmetric at ({i}, {j})"
                    )));
                }
                if l > S::one() {
                    return Err(Error::InvalidGraph(format!(
                        "length ({i}, {j}) = {l} exceeds 1"
                    )));
                }
                if adjacency[i * n + j] && l <= S::zero() {
                    return Err(Error::InvalidGraph(format!(
                        "non-positive length {l} on edge ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self {
            n,
            adjacency,
            lengths,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j]
    }

    pub fn length(&self, i: usize, j: usize) -> S {
        self.lengths[(i, j)]
    }

    pub fn lengths(&self) -> &SquareMatrix<S> {
        &self.lengths
    }

    /// Adjacency as a 0/1 matrix.
    pub fn adjacency_matrix(&self) -> SquareMatrix<S> {
        SquareMatrix::from_fn(self.n, |i, j| {
            if self.has_edge(i, j) {
                S::one()
            } else {
                S::zero()
            }
        })
    }

    pub fn degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.has_edge(i, j)).count()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|i| self.degree(i)).sum::<usize>() / 2
    }

    /// Unordered edges, `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n)
            .flat_map(move |i| ((i + 1)..self.n).map(move |j| (i, j)))
            .filter(move |&(i, j)| self.has_edge(i, j))
    }

    pub fn is_connected(&self) -> bool {
        connected_components(self.n, |i, j| self.has_edge(i, j)).len() == 1
    }

    /// Relabel nodes: node `i` of the result is node `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n;
        let mut adjacency = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                adjacency[i * n + j] = self.has_edge(perm[i], perm[j]);
            }
        }
        Self {
            n,
            adjacency,
            lengths: self.lengths.permuted(perm),
        }
    }
}

/// Connected components of the node set under an arbitrary edge predicate.
#[allow(clippy::needless_range_loop)]
pub(crate) fn connected_components(
    n: usize,
    has_edge: impl Fn(usize, usize) -> bool,
) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        let mut comp = Vec::new();
        seen[start] = true;
        while let Some(i) = stack.pop() {
            comp.push(i);
            for j in 0..n {
                if !seen[j] && has_edge(i, j) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components
}

/// Model parameters: metabolic exponent and coefficient, conductivity floor,
/// and the target connectivity constant.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ModelParams<S> {
    pub gamma: S,
    pub nu: S,
    pub r: S,
    pub lambda: S,
}

impl<S: Scalar> ModelParams<S> {
    // negated comparisons reject NaN parameters as well
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(gamma: S, nu: S, r: S, lambda: S) -> Result<Self> {
        if !(gamma > S::one()) {
            return Err(Error::InvalidParams(format!("gamma = {gamma} must be > 1")));
        }
        if !(nu > S::zero()) {
            return Err(Error::InvalidParams(format!("nu = {nu} must be > 0")));
        }
        if !(r > S::zero()) {
            return Err(Error::InvalidParams(format!("r = {r} must be > 0")));
        }
        if !(lambda > S::zero()) {
            return Err(Error::InvalidParams(format!(
                "lambda = {lambda} must be > 0"
            )));
        }
        Ok(Self {
            gamma,
            nu,
            r,
            lambda,
        })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.gamma, self.nu, self.r, self.lambda).map(|_| ())
    }
}

/// Symmetric edge conductivities respecting the floor: at least `r` on every
/// edge, exactly zero off edges.
#[derive(Clone, Debug)]
pub struct ConductivityMatrix<S> {
    values: SquareMatrix<S>,
}

impl<S: Scalar> ConductivityMatrix<S> {
    pub fn new(values: SquareMatrix<S>, graph: &GraphInstance<S>, r: S) -> Result<Self> {
        if values.n() != graph.n() {
            return Err(Error::Shape(format!(
                "conductivities are {0}x{0} but graph has {1} nodes",
                values.n(),
                graph.n()
            )));
        }
        for i in 0..values.n() {
            for j in 0..values.n() {
                let v = values[(i, j)];
                if v != values[(j, i)] {
                    return Err(Error::InfeasibleConductivity(format!(
                        "not symmetric at ({i}, {j})"
                    )));
                }
                if graph.has_edge(i, j) {
                    if v < r {
                        return Err(Error::InfeasibleConductivity(format!(
                            "entry ({i}, {j}) = {v} below floor {r}"
                        )));
                    }
                } else if v != S::zero() {
                    return Err(Error::InfeasibleConductivity(format!(
                        "nonzero entry ({i}, {j}) off the edge set"
                    )));
                }
            }
        }
        Ok(Self { values })
    }

    /// Constant value on every edge, zero elsewhere.
    pub fn constant(graph: &GraphInstance<S>, value: S) -> Self {
        let n = graph.n();
        let values = SquareMatrix::from_fn(n, |i, j| {
            if graph.has_edge(i, j) {
                value
            } else {
                S::zero()
            }
        });
        Self { values }
    }

    /// Skip-validation constructor for internal paths that maintain
    /// feasibility themselves (projected iterates and the like).
    pub(crate) fn from_raw(values: SquareMatrix<S>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &SquareMatrix<S> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.values[(i, j)]
    }

    pub fn n(&self) -> usize {
        self.values.n()
    }
}

pub use crate::spectral::DENSE_EIGEN_LIMIT;

/// Connectivity constant: twice the second-smallest Laplacian eigenvalue of
/// the unweighted adjacency, divided by N. Positive exactly when the graph
/// is connected.
pub fn connectivity_constant<S: Scalar>(graph: &GraphInstance<S>) -> S {
    let f = fiedler_value(&graph.adjacency_matrix());
    if f.is_infinite() {
        return f;
    }
    S::f(2.0) * f / S::from_usize_(graph.n())
}

/// Sufficient (not necessary) degree condition for the connectivity
/// constant to reach `lambda`: every vertex degree at least `(1+lambda)N/2`.
pub fn check_min_degree_bound<S: Scalar>(graph: &GraphInstance<S>, lambda: S) -> bool {
    let n = graph.n();
    let threshold = (S::one() + lambda) * S::from_usize_(n) / S::f(2.0);
    (0..n).all(|i| S::from_usize_(graph.degree(i)) >= threshold)
}

/// True when the entries sum to zero within `1e-12 * N` (widened to a few
/// machine epsilons for scalar types coarser than f64).
pub fn check_mass_conservation<S: Scalar>(values: &[S]) -> bool {
    let sum: S = values.iter().copied().sum();
    let unit = S::f(1e-12).max(S::epsilon() * S::f(10.0));
    sum.abs() <= unit * S::from_usize_(values.len())
}

/// Change of variables from raw conductivities to the rescaled ones:
/// `B_ij = (C_ij + r) / L_ij` on edges, zero off edges. Since `C >= 0` and
/// `L <= 1`, the result always respects the floor `r`.
pub fn map_c_to_b<S: Scalar>(
    c: &SquareMatrix<S>,
    graph: &GraphInstance<S>,
    r: S,
) -> Result<ConductivityMatrix<S>> {
    let n = graph.n();
    if c.n() != n {
        return Err(Error::Shape(format!(
            "conductivities are {0}x{0} but graph has {n} nodes",
            c.n()
        )));
    }
    let mut values = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if !graph.has_edge(i, j) {
                continue;
            }
            if c[(i, j)] != c[(j, i)] || c[(i, j)] < S::zero() {
                return Err(Error::InfeasibleConductivity(format!(
                    "raw conductivity at ({i}, {j}) must be symmetric and nonnegative"
                )));
            }
            let l = graph.length(i, j);
            if l == S::zero() {
                return Err(Error::DegenerateLength { i, j });
            }
            values.set_sym(i, j, (c[(i, j)] + r) / l);
        }
    }
    ConductivityMatrix::new(values, graph, r)
}

/// Raw conductivities recovered from rescaled ones: `C_ij = B_ij L_ij - r`
/// on edges. Entries can dip below zero when the floor is active on a short
/// edge; those are flagged, not rejected.
#[derive(Clone, Debug)]
pub struct RecoveredConductivities<S> {
    pub values: SquareMatrix<S>,
    /// Unordered edges `(i, j)` with `i < j` where the recovered value is
    /// negative (floor-active short edges).
    pub negative_edges: Vec<(usize, usize)>,
}

/// On-disk graph description: 1-based endpoints with `i < j`, symmetrized
/// on load.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphFile<S> {
    pub n: usize,
    pub edges: Vec<(usize, usize, S)>,
}

impl<S: Scalar> GraphFile<S> {
    pub fn to_graph(&self) -> Result<GraphInstance<S>> {
        let mut seen = std::collections::HashSet::new();
        let mut edges = Vec::with_capacity(self.edges.len());
        for &(i, j, len) in &self.edges {
            if i == 0 || j == 0 || i > self.n || j > self.n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) out of 1-based range for n = {}",
                    self.n
                )));
            }
            if i >= j {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) must satisfy i < j"
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i}, {j})")));
            }
            edges.push((i - 1, j - 1, len));
        }
        GraphInstance::from_edges(self.n, &edges)
    }

    pub fn from_graph(graph: &GraphInstance<S>) -> Self {
        Self {
            n: graph.n(),
            edges: graph
                .edges()
                .map(|(i, j)| (i + 1, j + 1, graph.length(i, j)))
                .collect(),
        }
    }
}

pub fn load_graph<S: Scalar + serde::de::DeserializeOwned>(
    path: &std::path::Path,
) -> Result<GraphInstance<S>> {
    let text = std::fs::read_to_string(path)?;
    let file: GraphFile<S> = serde_json::from_str(&text)?;
    file.to_graph()
}

pub fn map_b_to_c<S: Scalar>(
    b: &ConductivityMatrix<S>,
    graph: &GraphInstance<S>,
    r: S,
) -> RecoveredConductivities<S> {
    let n = graph.n();
    let mut values = SquareMatrix::zeros(n);
    let mut negative_edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if graph.has_edge(i, j) {
                let c = b.get(i, j) * graph.length(i, j) - r;
                values.set_sym(i, j, c);
                if c < S::zero() {
                    negative_edges.push((i, j));
                }
            }
        }
    }
    RecoveredConductivities {
        values,
        negative_edges,
    }
}
