//! Communication graphs and the linear operators built from them.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::rng_from_seed;

const STOCHASTIC_TOL: f64 = 1e-12;
const RGG_RETRY_CAP: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph needs at least {min} agents, got {got}")]
    InvalidSize { min: usize, got: usize },
    #[error("radius must lie in (0, 1), got {0}")]
    InvalidRadius(f64),
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge ({u}, {v}) references an agent outside 0..{n}")]
    EdgeOutOfRange { u: usize, v: usize, n: usize },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("graph is not connected")]
    Disconnected,
    #[error("no connected random geometric graph after {0} attempts")]
    RetriesExhausted(usize),
    #[error("mixing matrix failed a certificate: {0}")]
    Construction(String),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("edge list line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// An undirected, connected, simple graph on agents `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    positions: Option<Vec<[f64; 2]>>,
}

impl Graph {
    /// Validates and normalizes an edge list: each edge stored as `(low, high)`,
    /// sorted.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        Self::build(n, edges, None)
    }

    fn build(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        positions: Option<Vec<[f64; 2]>>,
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::InvalidSize { min: 1, got: 0 });
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(GraphError::SelfLoop(u, v));
            }
            if u >= n || v >= n {
                return Err(GraphError::EdgeOutOfRange { u, v, n });
            }
            if !set.insert((u.min(v), u.max(v))) {
                return Err(GraphError::DuplicateEdge(u, v));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in &edges {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        let g = Graph {
            n,
            edges,
            neighbors,
            positions,
        };
        if !g.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    pub fn n_agents(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn positions(&self) -> Option<&[[f64; 2]]> {
        self.positions.as_deref()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }

    fn bfs_depths(&self, src: usize) -> Vec<Option<usize>> {
        let mut depth = vec![None; self.n];
        depth[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let d = depth[u].unwrap_or(0);
            for &v in &self.neighbors[u] {
                if depth[v].is_none() {
                    depth[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        depth
    }

    fn is_connected(&self) -> bool {
        self.bfs_depths(0).iter().all(Option::is_some)
    }

    /// Longest shortest path, in hops.
    pub fn diameter(&self) -> usize {
        (0..self.n)
            .map(|s| self.bfs_depths(s).into_iter().flatten().max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// Dense Laplacian `D − Adj`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for &(u, v) in &self.edges {
            l[(u, u)] += 1.0;
            l[(v, v)] += 1.0;
            l[(u, v)] -= 1.0;
            l[(v, u)] -= 1.0;
        }
        l
    }

    /// Serializes as `n <N>` followed by one `u v` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("n {}\n", self.n);
        for &(u, v) in &self.edges {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }

    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        text.parse()
    }
}

impl FromStr for Graph {
    type Err = GraphError;

    fn from_str(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            msg: "missing `n <N>` header".into(),
        })?;
        let n = header
            .strip_prefix('n')
            .and_then(|rest| rest.trim().parse::<usize>().ok())
            .ok_or_else(|| GraphError::Parse {
                line,
                msg: format!("expected `n <N>`, found `{header}`"),
            })?;
        let mut edges = Vec::new();
        for (line, l) in lines {
            let mut parts = l.split_whitespace().map(str::parse::<usize>);
            match (parts.next(), parts.next(), parts.next()) {
                (Some(Ok(u)), Some(Ok(v)), None) => edges.push((u, v)),
                _ => {
                    return Err(GraphError::Parse {
                        line,
                        msg: format!("expected `u v`, found `{l}`"),
                    })
                }
            }
        }
        Graph::new(n, edges)
    }
}

pub fn build_path_graph(n: usize) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidSize { min: 2, got: n });
    }
    Graph::new(n, (0..n - 1).map(|i| (i, i + 1)))
}

pub fn build_complete_graph(n: usize) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidSize { min: 2, got: n });
    }
    Graph::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
}

/// Points uniform in the unit square, edge iff distance `< radius`.
///
/// A disconnected draw is discarded and redrawn from a derived seed, at most
/// 100 times.
pub fn build_random_geometric_graph(n: usize, radius: f64, seed: u64) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidSize { min: 2, got: n });
    }
    if !(radius > 0.0 && radius < 1.0) {
        return Err(GraphError::InvalidRadius(radius));
    }
    for attempt in 0..RGG_RETRY_CAP as u64 {
        let mut rng = rng_from_seed(seed.wrapping_add(attempt.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let d = ((pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2)).sqrt();
                if d < radius {
                    edges.push((i, j));
                }
            }
        }
        match Graph::build(n, edges, Some(pts)) {
            Ok(g) => return Ok(g),
            Err(GraphError::Disconnected) => {
                log::debug!("random geometric graph attempt {attempt} disconnected; redrawing");
            }
            Err(e) => return Err(e),
        }
    }
    Err(GraphError::RetriesExhausted(RGG_RETRY_CAP))
}

/// Signed edge-agent incidence: `+1` at the lower endpoint, `−1` at the higher.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    entries: DMatrix<f64>,
}

impl IncidenceMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// `AᵀA`, which equals the graph Laplacian.
    pub fn gram(&self) -> DMatrix<f64> {
        self.entries.transpose() * &self.entries
    }

    /// Largest eigenvalue of `AᵀA`.
    pub fn lambda_max(&self) -> f64 {
        let gram = self.gram();
        if gram.nrows() == 0 {
            return 0.0;
        }
        SymmetricEigen::new(gram).eigenvalues.max()
    }
}

pub fn incidence_matrix(g: &Graph) -> IncidenceMatrix {
    let mut a = DMatrix::zeros(g.edges.len(), g.n);
    for (e, &(u, v)) in g.edges.iter().enumerate() {
        a[(e, u)] = 1.0;
        a[(e, v)] = -1.0;
    }
    IncidenceMatrix { entries: a }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum MixingRule {
    /// `W = I − L/(λ_max(L) + δ)` with `δ = delta_factor · λ_max(L)`.
    LaplacianShift {
        #[serde(default = "default_delta_factor")]
        delta_factor: f64,
    },
    /// `W_ij = 1/(1 + max(deg_i, deg_j))` on edges, diagonal fills rows to 1.
    #[default]
    MetropolisHastings,
}

fn default_delta_factor() -> f64 {
    0.1
}

impl MixingRule {
    pub fn laplacian_shift() -> Self {
        MixingRule::LaplacianShift {
            delta_factor: default_delta_factor(),
        }
    }
}

/// A certified mixing matrix together with its spectral summary.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    entries: DMatrix<f64>,
    eta: f64,
    deviation_norm: f64,
    sparse: Vec<Vec<(usize, f64)>>,
    graph: Graph,
}

impl MixingMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Second-largest eigenvalue.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `‖W − 11ᵀ/N‖₂`, the contraction factor on the disagreement subspace.
    pub fn deviation_norm(&self) -> f64 {
        self.deviation_norm
    }

    pub fn n_agents(&self) -> usize {
        self.entries.nrows()
    }

    /// The graph whose sparsity pattern this matrix certifies.
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Nonzero pattern as per-row `(column, weight)` lists.
    pub fn sparse_rows(&self) -> &[Vec<(usize, f64)>] {
        &self.sparse
    }

    /// One communication round: `W X`.
    pub fn mix(&self, x: &crate::linalg::AgentMatrix) -> crate::linalg::AgentMatrix {
        x.left_mul_sparse(&self.sparse)
    }

    /// Wraps an explicit matrix after checking every certificate against `g`.
    pub fn from_entries(g: &Graph, w: DMatrix<f64>) -> Result<Self, GraphError> {
        let n = g.n_agents();
        if w.nrows() != n || w.ncols() != n {
            return Err(GraphError::Construction(format!(
                "expected {n}x{n}, got {}x{}",
                w.nrows(),
                w.ncols()
            )));
        }
        for i in 0..n {
            let row_sum: f64 = w.row(i).iter().sum();
            if (row_sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(GraphError::Construction(format!("row {i} sums to {row_sum}")));
            }
            for j in 0..n {
                if (w[(i, j)] - w[(j, i)]).abs() > STOCHASTIC_TOL {
                    return Err(GraphError::Construction(format!("asymmetric at ({i}, {j})")));
                }
                if i != j {
                    let edge = g.has_edge(i, j);
                    if edge && w[(i, j)] <= 0.0 {
                        return Err(GraphError::Construction(format!(
                            "edge ({i}, {j}) has weight {}",
                            w[(i, j)]
                        )));
                    }
                    if !edge && w[(i, j)] != 0.0 {
                        return Err(GraphError::Construction(format!(
                            "non-edge ({i}, {j}) has weight {}",
                            w[(i, j)]
                        )));
                    }
                }
            }
        }
        let mut eig = SymmetricEigen::new(w.clone()).eigenvalues.as_slice().to_vec();
        eig.sort_by(|a, b| b.total_cmp(a));
        if eig
            .iter()
            .any(|&l| !(-1.0 - STOCHASTIC_TOL..=1.0 + STOCHASTIC_TOL).contains(&l))
        {
            return Err(GraphError::Construction(format!(
                "eigenvalues outside [-1, 1]: {eig:?}"
            )));
        }
        let eta = eig.get(1).copied().unwrap_or(0.0).max(0.0);
        let avg = DMatrix::from_element(n, n, 1.0 / n as f64);
        let deviation = &w - avg;
        let deviation_norm = SymmetricEigen::new(deviation)
            .eigenvalues
            .iter()
            .fold(0.0_f64, |m, l| m.max(l.abs()));
        if eta >= 1.0 || deviation_norm >= 1.0 {
            return Err(GraphError::Construction(format!(
                "no spectral gap: eta = {eta}, deviation norm = {deviation_norm}"
            )));
        }
        let sparse = (0..n)
            .map(|i| (0..n).filter(|&j| w[(i, j)] != 0.0).map(|j| (j, w[(i, j)])).collect())
            .collect();
        Ok(MixingMatrix {
            entries: w,
            eta,
            deviation_norm,
            sparse,
            graph: g.clone(),
        })
    }
}

pub fn build_mixing_matrix(g: &Graph, rule: MixingRule) -> Result<MixingMatrix, GraphError> {
    let n = g.n_agents();
    let w = match rule {
        MixingRule::LaplacianShift { delta_factor } => {
            if !(delta_factor >= 0.0) {
                return Err(GraphError::Construction(format!(
                    "delta factor must be >= 0, got {delta_factor}"
                )));
            }
            let l = g.laplacian();
            let lmax = incidence_matrix(g).lambda_max();
            if lmax <= 0.0 {
                DMatrix::identity(n, n)
            } else {
                let s = lmax * (1.0 + delta_factor);
                let mut w = DMatrix::identity(n, n) - l / s;
                // Re-impose exact zeros so the sparsity certificate is exact.
                for i in 0..n {
                    for j in 0..n {
                        if i != j && !g.has_edge(i, j) {
                            w[(i, j)] = 0.0;
                        }
                    }
                }
                w
            }
        }
        MixingRule::MetropolisHastings => {
            let mut w = DMatrix::zeros(n, n);
            for &(u, v) in g.edges() {
                let wt = 1.0 / (1.0 + g.degree(u).max(g.degree(v)) as f64);
                w[(u, v)] = wt;
                w[(v, u)] = wt;
            }
            for i in 0..n {
                let off: f64 = g.neighbors(i).iter().map(|&j| w[(i, j)]).sum();
                w[(i, i)] = 1.0 - off;
            }
            w
        }
    };
    MixingMatrix::from_entries(g, w)
}

/// Synchronous max-consensus: `diameter(g)` rounds of closed-neighbourhood max.
pub fn max_consensus(values: &[f64], g: &Graph) -> Result<Vec<f64>, GraphError> {
    max_consensus_rounds(values, g, g.diameter())
}

pub fn max_consensus_rounds(values: &[f64], g: &Graph, rounds: usize) -> Result<Vec<f64>, GraphError> {
    if values.len() != g.n_agents() {
        return Err(GraphError::LengthMismatch {
            expected: g.n_agents(),
            got: values.len(),
        });
    }
    let mut cur = values.to_vec();
    for _ in 0..rounds {
        cur = (0..g.n_agents())
            .map(|i| g.neighbors(i).iter().fold(cur[i], |m, &j| m.max(cur[j])))
            .collect();
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graphs() {
        assert_eq!(build_path_graph(2).unwrap().edges(), &[(0, 1)]);
        assert_eq!(build_path_graph(3).unwrap().edges(), &[(0, 1), (1, 2)]);
        assert_eq!(build_path_graph(1), Err(GraphError::InvalidSize { min: 2, got: 1 }));
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(Graph::new(2, [(0, 0)]), Err(GraphError::SelfLoop(0, 0)));
        assert_eq!(Graph::new(2, [(0, 1), (1, 0)]), Err(GraphError::DuplicateEdge(1, 0)));
        assert_eq!(Graph::new(3, [(0, 1)]), Err(GraphError::Disconnected));
        assert!(matches!(
            Graph::new(2, [(0, 2)]),
            Err(GraphError::EdgeOutOfRange { .. })
        ));
    }

    #[test]
    fn incidence_sign_convention() {
        let a = incidence_matrix(&build_path_graph(3).unwrap());
        let expected = DMatrix::from_row_slice(2, 3, &[1.0, -1.0, 0.0, 0.0, 1.0, -1.0]);
        assert_eq!(a.entries(), &expected);
        assert_eq!(incidence_matrix(&build_path_graph(2).unwrap()).lambda_max(), 2.0);
    }

    #[test]
    fn two_node_average_matrix() {
        let g = build_path_graph(2).unwrap();
        let w = build_mixing_matrix(&g, MixingRule::LaplacianShift { delta_factor: 0.0 }).unwrap();
        assert_eq!(w.entries(), &DMatrix::from_element(2, 2, 0.5));
        assert!(w.eta().abs() < 1e-15);
        assert!(w.deviation_norm().abs() < 1e-15);
    }

    #[test]
    fn radius_out_of_range() {
        assert_eq!(
            build_random_geometric_graph(5, 1.5, 0),
            Err(GraphError::InvalidRadius(1.5))
        );
    }

    #[test]
    fn max_consensus_examples() {
        let g2 = build_path_graph(2).unwrap();
        assert_eq!(max_consensus(&[3.0, 7.0], &g2).unwrap(), vec![7.0, 7.0]);
        let g3 = build_path_graph(3).unwrap();
        assert_eq!(
            max_consensus_rounds(&[1.0, 5.0, 2.0], &g3, 1).unwrap(),
            vec![5.0, 5.0, 5.0]
        );
        assert_eq!(max_consensus(&[9.0, 1.0, 2.0], &g3).unwrap(), vec![9.0; 3]);
        assert_eq!(max_consensus(&[4.0; 3], &g3).unwrap(), vec![4.0; 3]);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = build_random_geometric_graph(8, 0.5, 3).unwrap();
        let back: Graph = g.to_edge_list().parse().unwrap();
        assert_eq!(back.edges(), g.edges());
        assert!(matches!(
            "n x\n".parse::<Graph>(),
            Err(GraphError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            "n 2\n0\n".parse::<Graph>(),
            Err(GraphError::Parse { line: 2, .. })
        ));
    }
}
