//! Structured model topologies, feature maps and observed structures.
//!
//! Every model is flattened to a coordinate vector over which pseudomarginals live:
//!
//! * matchings: one coordinate per edge, the probability that the edge is used;
//! * pairwise binary graphs: two coordinates per node `(μ_n(0), μ_n(1))` followed by four
//!   per edge `(μ_e(0,0), μ_e(0,1), μ_e(1,0), μ_e(1,1))`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::general;
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    BipartiteMatching,
    GeneralPerfectMatching,
    PairwiseBinaryGrid,
}

impl ModelKind {
    pub fn is_matching(self) -> bool {
        !matches!(self, ModelKind::PairwiseBinaryGrid)
    }
}

/// Clamping status of a matching edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeState {
    Free,
    /// Present in every perfect matching.
    Forced,
    /// Present in no perfect matching.
    Forbidden,
}

impl EdgeState {
    pub fn clamped_value(self) -> Option<f64> {
        match self {
            EdgeState::Free => None,
            EdgeState::Forced => Some(1.0),
            EdgeState::Forbidden => Some(0.0),
        }
    }
}

/// Graph structure of a model, shared by all samples of a dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    kind: ModelKind,
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    side: usize,
    edge_states: Vec<EdgeState>,
    grid_shape: Option<(usize, usize)>,
}

impl Topology {
    /// Complete bipartite graph with `n` left vertices `0..n` and `n` right vertices `n..2n`.
    /// Edge `i * n + j` joins left `i` to right `j`.
    pub fn bipartite(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::structure(
                "bipartite matching needs at least one vertex per side",
            ));
        }
        let edges = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, n + j)))
            .collect::<Vec<_>>();
        Ok(Topology {
            kind: ModelKind::BipartiteMatching,
            num_nodes: 2 * n,
            edge_states: vec![EdgeState::Free; edges.len()],
            edges,
            side: n,
            grid_shape: None,
        })
    }

    /// General graph over which perfect matchings are modelled. Edges are normalised to
    /// `(min, max)` and sorted; forced and forbidden edges are detected up front.
    pub fn general_matching(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if num_nodes % 2 == 1 {
            return Err(Error::Infeasible(format!(
                "{num_nodes} vertices cannot be perfectly matched"
            )));
        }
        let edges = normalise_edges(num_nodes, edges)?;
        let clamp = clamp_graph(num_nodes, &edges)?;
        let edge_states = edges
            .iter()
            .map(|e| {
                if clamp.forced.contains(e) {
                    EdgeState::Forced
                } else if clamp.forbidden.contains(e) {
                    EdgeState::Forbidden
                } else {
                    EdgeState::Free
                }
            })
            .collect();
        Ok(Topology {
            kind: ModelKind::GeneralPerfectMatching,
            num_nodes,
            edges,
            side: 0,
            edge_states,
            grid_shape: None,
        })
    }

    /// Pairwise binary model over an arbitrary simple graph.
    pub fn pairwise(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let edges = normalise_edges(num_nodes, edges)?;
        Ok(Topology {
            kind: ModelKind::PairwiseBinaryGrid,
            num_nodes,
            edge_states: Vec::new(),
            edges,
            side: 0,
            grid_shape: None,
        })
    }

    /// 4-connected `rows x cols` grid; node `r * cols + c`.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let n = r * cols + c;
                if c + 1 < cols {
                    edges.push((n, n + 1));
                }
                if r + 1 < rows {
                    edges.push((n, n + cols));
                }
            }
        }
        let mut t = Self::pairwise(rows * cols, &edges)?;
        t.grid_shape = Some((rows, cols));
        Ok(t)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Vertices per side for bipartite models.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn grid_shape(&self) -> Option<(usize, usize)> {
        self.grid_shape
    }

    /// Clamping status per edge (matchings only; empty for pairwise models).
    pub fn edge_states(&self) -> &[EdgeState] {
        &self.edge_states
    }

    pub fn is_free(&self, coord: usize) -> bool {
        !self.kind.is_matching() || self.edge_states[coord] == EdgeState::Free
    }

    pub fn num_coords(&self) -> usize {
        match self.kind {
            ModelKind::PairwiseBinaryGrid => 2 * self.num_nodes + 4 * self.edges.len(),
            _ => self.edges.len(),
        }
    }

    /// Length of a reweighting vector: one entry per vertex for matchings, per edge for grids.
    pub fn reweighting_len(&self) -> usize {
        match self.kind {
            ModelKind::PairwiseBinaryGrid => self.edges.len(),
            _ => self.num_nodes,
        }
    }

    pub fn node_coord(&self, node: usize, label: usize) -> usize {
        2 * node + label
    }

    pub fn edge_coord(&self, edge: usize, a: usize, b: usize) -> usize {
        2 * self.num_nodes + 4 * edge + 2 * a + b
    }

    /// Edges incident to each vertex.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.num_nodes];
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            inc[i].push(e);
            inc[j].push(e);
        }
        inc
    }

    /// Index of the edge joining `i` and `j`, if any.
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let key = (i.min(j), i.max(j));
        if self.kind == ModelKind::BipartiteMatching {
            let (l, r) = key;
            return (l < self.side && r >= self.side && r < 2 * self.side)
                .then(|| l * self.side + (r - self.side));
        }
        self.edges.binary_search(&key).ok()
    }
}

fn normalise_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::with_capacity(edges.len());
    for &(i, j) in edges {
        if i >= num_nodes || j >= num_nodes {
            return Err(Error::structure(format!(
                "edge ({i}, {j}) references a vertex outside 0..{num_nodes}"
            )));
        }
        if i == j {
            return Err(Error::structure(format!("self loop at vertex {i}")));
        }
        out.push((i.min(j), i.max(j)));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Edges that appear in every perfect matching and edges that appear in none.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClampSets {
    pub forced: Vec<(usize, usize)>,
    pub forbidden: Vec<(usize, usize)>,
}

/// Forced and forbidden edges of a matching model.
pub fn clamp_analysis(topology: &Topology) -> Result<ClampSets> {
    match topology.kind {
        ModelKind::PairwiseBinaryGrid => Err(Error::structure(
            "clamp analysis applies to matching models only",
        )),
        ModelKind::BipartiteMatching => Ok(ClampSets::default()),
        ModelKind::GeneralPerfectMatching => {
            let mut sets = ClampSets::default();
            for (&e, state) in topology.edges.iter().zip(&topology.edge_states) {
                match state {
                    EdgeState::Forced => sets.forced.push(e),
                    EdgeState::Forbidden => sets.forbidden.push(e),
                    EdgeState::Free => {}
                }
            }
            Ok(sets)
        }
    }
}

/// Clamp analysis on a raw graph. An edge `{i, j}` lies in some perfect matching iff the
/// graph minus `i` and `j` has one, and in every perfect matching iff both counts agree.
pub fn clamp_graph(num_nodes: usize, edges: &[(usize, usize)]) -> Result<ClampSets> {
    if num_nodes == 0 {
        return Ok(ClampSets::default());
    }
    let edges = normalise_edges(num_nodes, edges)?;
    let usable = vec![true; edges.len()];
    let counts = general::count_table(num_nodes, &edges, &usable)?;
    let full = (1usize << num_nodes) - 1;
    let total = counts[full];
    if total == 0 {
        return Err(Error::Infeasible(
            "graph has no perfect matching".to_string(),
        ));
    }
    let mut sets = ClampSets::default();
    for &(i, j) in &edges {
        let with = counts[full & !(1 << i) & !(1 << j)];
        if with == 0 {
            sets.forbidden.push((i, j));
        } else if with == total {
            sets.forced.push((i, j));
        }
    }
    Ok(sets)
}

/// Linear map from model coordinates to sufficient statistics.
///
/// The score of a structure with indicator vector `y` under parameters `θ` is
/// `⟨θ, Gᵀ y⟩`; `accumulate_stats` applies `Gᵀ` and `coord_scores` applies `G`.
#[derive(Clone, Debug, PartialEq)]
pub enum FeatureMap {
    /// `weights[k][e]` is feature matrix `F^k` at edge `e`.
    Matching { weights: Vec<Vec<f64>> },
    /// Node features `u_n` (rows of `node`, length C) and edge features `v_e` (rows of
    /// `edge`, length D). Parameters are `F` (2 x C) then `G` (4 x D), both row-major.
    Grid { node: Matrix, edge: Matrix },
}

impl FeatureMap {
    /// Feature matrices over a complete bipartite graph, each `n x n`.
    pub fn bipartite(topology: &Topology, matrices: &[Matrix]) -> Result<Self> {
        if topology.kind != ModelKind::BipartiteMatching {
            return Err(Error::structure(
                "bipartite features need a bipartite topology",
            ));
        }
        let n = topology.side;
        let weights = matrices
            .iter()
            .map(|f| {
                if f.rows() != n || f.cols() != n {
                    return Err(Error::structure(format!(
                        "feature matrix is {}x{}, expected {n}x{n}",
                        f.rows(),
                        f.cols()
                    )));
                }
                Ok(f.as_slice().to_vec())
            })
            .collect::<Result<_>>()?;
        Ok(FeatureMap::Matching { weights })
    }

    /// Symmetric `|V| x |V|` adjacency features restricted to the graph's edges.
    pub fn general(topology: &Topology, matrices: &[Matrix]) -> Result<Self> {
        if topology.kind != ModelKind::GeneralPerfectMatching {
            return Err(Error::structure(
                "adjacency features need a general matching topology",
            ));
        }
        let v = topology.num_nodes;
        let weights = matrices
            .iter()
            .map(|f| {
                if f.rows() != v || f.cols() != v {
                    return Err(Error::structure(format!(
                        "feature matrix is {}x{}, expected {v}x{v}",
                        f.rows(),
                        f.cols()
                    )));
                }
                for &(i, j) in &topology.edges {
                    if (f[(i, j)] - f[(j, i)]).abs() > 1e-12 {
                        return Err(Error::structure(format!(
                            "adjacency feature not symmetric at ({i}, {j})"
                        )));
                    }
                }
                Ok(topology.edges.iter().map(|&(i, j)| f[(i, j)]).collect())
            })
            .collect::<Result<_>>()?;
        Ok(FeatureMap::Matching { weights })
    }

    pub fn grid(topology: &Topology, node: Matrix, edge: Matrix) -> Result<Self> {
        if topology.kind != ModelKind::PairwiseBinaryGrid {
            return Err(Error::structure(
                "node/edge features need a pairwise topology",
            ));
        }
        if node.rows() != topology.num_nodes || edge.rows() != topology.num_edges() {
            return Err(Error::structure(format!(
                "feature rows ({}, {}) do not match {} nodes and {} edges",
                node.rows(),
                edge.rows(),
                topology.num_nodes,
                topology.num_edges()
            )));
        }
        Ok(FeatureMap::Grid { node, edge })
    }

    pub fn num_params(&self) -> usize {
        match self {
            FeatureMap::Matching { weights } => weights.len(),
            FeatureMap::Grid { node, edge } => 2 * node.cols() + 4 * edge.cols(),
        }
    }

    /// Whether the feature map is dimensioned for `topology`.
    pub fn conforms(&self, topology: &Topology) -> bool {
        match self {
            FeatureMap::Matching { weights } => {
                topology.kind.is_matching()
                    && weights.iter().all(|w| w.len() == topology.num_edges())
            }
            FeatureMap::Grid { node, edge } => {
                topology.kind == ModelKind::PairwiseBinaryGrid
                    && node.rows() == topology.num_nodes
                    && edge.rows() == topology.num_edges()
            }
        }
    }

    /// `out += scale * Gᵀ tau`.
    pub fn accumulate_stats(&self, tau: &[f64], scale: f64, out: &mut [f64]) {
        match self {
            FeatureMap::Matching { weights } => {
                for (o, w) in out.iter_mut().zip(weights) {
                    *o += scale * crate::matrix::dot(w, tau);
                }
            }
            FeatureMap::Grid { node, edge } => {
                let (c_dim, d_dim) = (node.cols(), edge.cols());
                let n_nodes = node.rows();
                for n in 0..n_nodes {
                    let u = node.row(n);
                    for l in 0..2 {
                        let t = scale * tau[2 * n + l];
                        if t != 0.0 {
                            for (o, &uc) in out[l * c_dim..(l + 1) * c_dim].iter_mut().zip(u) {
                                *o += t * uc;
                            }
                        }
                    }
                }
                let base = 2 * n_nodes;
                let pbase = 2 * c_dim;
                for e in 0..edge.rows() {
                    let v = edge.row(e);
                    for s in 0..4 {
                        let t = scale * tau[base + 4 * e + s];
                        if t != 0.0 {
                            let off = pbase + s * d_dim;
                            for (o, &vd) in out[off..off + d_dim].iter_mut().zip(v) {
                                *o += t * vd;
                            }
                        }
                    }
                }
            }
        }
    }

    /// `Gᵀ tau` as a fresh vector.
    pub fn stats(&self, tau: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_params()];
        self.accumulate_stats(tau, 1.0, &mut out);
        out
    }

    /// Per-coordinate scores `G θ`.
    pub fn coord_scores(&self, theta: &[f64]) -> Vec<f64> {
        match self {
            FeatureMap::Matching { weights } => {
                let len = weights.first().map_or(0, Vec::len);
                let mut out = vec![0.0; len];
                for (w, &t) in weights.iter().zip(theta) {
                    if t != 0.0 {
                        for (o, &x) in out.iter_mut().zip(w) {
                            *o += t * x;
                        }
                    }
                }
                out
            }
            FeatureMap::Grid { node, edge } => {
                let (c_dim, d_dim) = (node.cols(), edge.cols());
                let mut out = Vec::with_capacity(2 * node.rows() + 4 * edge.rows());
                for n in 0..node.rows() {
                    let u = node.row(n);
                    for l in 0..2 {
                        out.push(crate::matrix::dot(&theta[l * c_dim..(l + 1) * c_dim], u));
                    }
                }
                let pbase = 2 * c_dim;
                for e in 0..edge.rows() {
                    let v = edge.row(e);
                    for s in 0..4 {
                        let off = pbase + s * d_dim;
                        out.push(crate::matrix::dot(&theta[off..off + d_dim], v));
                    }
                }
                out
            }
        }
    }

    /// Feature matrices in the layout they were supplied in (matchings only).
    pub fn matching_matrices(&self, topology: &Topology) -> Result<Vec<Matrix>> {
        let FeatureMap::Matching { weights } = self else {
            return Err(Error::structure("not a matching feature map"));
        };
        weights
            .iter()
            .map(|w| edge_vector_to_matrix(topology, w))
            .collect()
    }
}

/// Lay an edge-indexed vector out as a bipartite biadjacency or symmetric adjacency matrix.
pub fn edge_vector_to_matrix(topology: &Topology, values: &[f64]) -> Result<Matrix> {
    match topology.kind {
        ModelKind::BipartiteMatching => {
            Matrix::from_row_major(topology.side, topology.side, values.to_vec())
        }
        ModelKind::GeneralPerfectMatching => {
            let v = topology.num_nodes;
            let mut m = Matrix::zeros(v, v);
            for (&(i, j), &x) in topology.edges.iter().zip(values) {
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
            Ok(m)
        }
        ModelKind::PairwiseBinaryGrid => Err(Error::structure("grid models have no weight matrix")),
    }
}

/// A topology together with one feature map: everything needed to score a structure.
#[derive(Clone, Debug)]
pub struct StructuredModel {
    topology: Arc<Topology>,
    features: Arc<FeatureMap>,
}

impl StructuredModel {
    pub fn new(topology: Arc<Topology>, features: Arc<FeatureMap>) -> Result<Self> {
        if !features.conforms(&topology) {
            return Err(Error::structure("feature map does not conform to topology"));
        }
        Ok(StructuredModel { topology, features })
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topology
    }

    pub fn features(&self) -> &Arc<FeatureMap> {
        &self.features
    }

    pub fn kind(&self) -> ModelKind {
        self.topology.kind
    }

    pub fn num_params(&self) -> usize {
        self.features.num_params()
    }

    pub fn num_coords(&self) -> usize {
        self.topology.num_coords()
    }

    pub fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params() {
            return Err(Error::structure(format!(
                "parameter vector has length {}, model expects {}",
                theta.len(),
                self.num_params()
            )));
        }
        Ok(())
    }

    /// Per-coordinate scores under `theta`.
    pub fn scores(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        Ok(self.features.coord_scores(theta))
    }

    /// Score `⟨θ, φ(y)⟩` of a 0/1 (or fractional) coordinate vector.
    pub fn score(&self, theta: &[f64], coords: &[f64]) -> Result<f64> {
        let scores = self.scores(theta)?;
        if coords.len() != scores.len() {
            return Err(Error::structure("coordinate vector length mismatch"));
        }
        Ok(crate::matrix::dot(&scores, coords))
    }
}

/// Weighted feature sum `W = Σ_k θ_k F^k` laid out as a matrix.
pub fn edge_weight_matrix(model: &StructuredModel, theta: &[f64]) -> Result<Matrix> {
    if !model.kind().is_matching() {
        return Err(Error::structure(
            "edge weight matrix is defined for matching models",
        ));
    }
    let scores = model.scores(theta)?;
    edge_vector_to_matrix(&model.topology, &scores)
}

/// An observed structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    /// Bipartite matching: left vertex `i` is matched to right vertex `perm[i]`.
    Permutation(Vec<usize>),
    /// Perfect matching of a general graph as vertex pairs.
    Matching(Vec<(usize, usize)>),
    /// Binary node labels.
    Labels(Vec<u8>),
}

impl Structure {
    /// 0/1 coordinate vector; fails unless the structure is a vertex of the model's polytope.
    pub fn indicator(&self, topology: &Topology) -> Result<Vec<f64>> {
        let mut y = vec![0.0; topology.num_coords()];
        match (self, topology.kind) {
            (Structure::Permutation(perm), ModelKind::BipartiteMatching) => {
                let n = topology.side;
                if perm.len() != n {
                    return Err(Error::structure(format!(
                        "permutation has length {}, expected {n}",
                        perm.len()
                    )));
                }
                let mut seen = vec![false; n];
                for (i, &j) in perm.iter().enumerate() {
                    if j >= n || std::mem::replace(&mut seen[j], true) {
                        return Err(Error::structure(format!("{perm:?} is not a permutation")));
                    }
                    y[i * n + j] = 1.0;
                }
            }
            (Structure::Matching(pairs), ModelKind::GeneralPerfectMatching) => {
                let mut covered = vec![false; topology.num_nodes];
                for &(i, j) in pairs {
                    let e = topology
                        .edge_index(i, j)
                        .ok_or_else(|| Error::structure(format!("({i}, {j}) is not an edge")))?;
                    for v in [i, j] {
                        if std::mem::replace(&mut covered[v], true) {
                            return Err(Error::structure(format!("vertex {v} matched twice")));
                        }
                    }
                    y[e] = 1.0;
                }
                if covered.iter().any(|c| !c) {
                    return Err(Error::structure("matching is not perfect"));
                }
            }
            (Structure::Labels(labels), ModelKind::PairwiseBinaryGrid) => {
                if labels.len() != topology.num_nodes {
                    return Err(Error::structure(format!(
                        "{} labels for {} nodes",
                        labels.len(),
                        topology.num_nodes
                    )));
                }
                if labels.iter().any(|&l| l > 1) {
                    return Err(Error::structure("labels must be 0 or 1"));
                }
                for (n, &l) in labels.iter().enumerate() {
                    y[topology.node_coord(n, l as usize)] = 1.0;
                }
                for (e, &(i, j)) in topology.edges.iter().enumerate() {
                    y[topology.edge_coord(e, labels[i] as usize, labels[j] as usize)] = 1.0;
                }
            }
            _ => return Err(Error::structure("structure type does not match model kind")),
        }
        Ok(y)
    }

    /// Read an integral vertex back into a structure. Half-integral grid nodes round to 1.
    pub fn from_vertex(topology: &Topology, coords: &[f64]) -> Result<Self> {
        if coords.len() != topology.num_coords() {
            return Err(Error::structure("coordinate vector length mismatch"));
        }
        Ok(match topology.kind {
            ModelKind::BipartiteMatching => {
                let n = topology.side;
                let perm = (0..n)
                    .map(|i| {
                        (0..n)
                            .find(|&j| coords[i * n + j] > 0.5)
                            .ok_or_else(|| Error::structure(format!("row {i} is unmatched")))
                    })
                    .collect::<Result<_>>()?;
                Structure::Permutation(perm)
            }
            ModelKind::GeneralPerfectMatching => Structure::Matching(
                topology
                    .edges
                    .iter()
                    .zip(coords)
                    .filter(|(_, &x)| x > 0.5)
                    .map(|(&e, _)| e)
                    .collect(),
            ),
            ModelKind::PairwiseBinaryGrid => Structure::Labels(
                (0..topology.num_nodes)
                    .map(|n| u8::from(coords[2 * n + 1] >= 0.5))
                    .collect(),
            ),
        })
    }

    /// Fraction of vertices (left vertices for bipartite) whose assignment differs.
    pub fn hamming_loss(&self, other: &Structure) -> Result<f64> {
        match (self, other) {
            (Structure::Permutation(a), Structure::Permutation(b)) if a.len() == b.len() => {
                Ok(fraction_differing(a, b))
            }
            (Structure::Labels(a), Structure::Labels(b)) if a.len() == b.len() => {
                Ok(fraction_differing(a, b))
            }
            (Structure::Matching(a), Structure::Matching(b)) => {
                let partners = |m: &[(usize, usize)]| {
                    let n = 2 * m.len();
                    let mut p = vec![usize::MAX; n];
                    for &(i, j) in m {
                        if i < n && j < n {
                            p[i] = j;
                            p[j] = i;
                        }
                    }
                    p
                };
                if a.len() != b.len() {
                    return Err(Error::structure("matchings cover different vertex counts"));
                }
                Ok(fraction_differing(&partners(a), &partners(b)))
            }
            _ => Err(Error::structure(
                "cannot compare structures of different shapes",
            )),
        }
    }
}

fn fraction_differing<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).filter(|(x, y)| x != y).count() as f64 / a.len() as f64
}

/// Counting numbers: one per vertex for matchings, one per edge for pairwise models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Reweighting(Vec<f64>);

impl Reweighting {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::InvalidParameter(format!(
                "reweighting entry {bad} outside [0, 1]"
            )));
        }
        Ok(Reweighting(values))
    }

    pub fn uniform(topology: &Topology, value: f64) -> Result<Self> {
        Self::new(vec![value; topology.reweighting_len()])
    }

    /// ρ = 1 (Bethe) for matchings, ρ = ½ per edge for pairwise models.
    pub fn default_for(topology: &Topology) -> Self {
        let value = if topology.kind.is_matching() {
            1.0
        } else {
            0.5
        };
        Reweighting(vec![value; topology.reweighting_len()])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn check(&self, topology: &Topology) -> Result<()> {
        if self.0.len() != topology.reweighting_len() {
            return Err(Error::structure(format!(
                "reweighting has {} entries, model expects {}",
                self.0.len(),
                topology.reweighting_len()
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for Reweighting {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Reweighting::new(v)
    }
}

impl From<Reweighting> for Vec<f64> {
    fn from(r: Reweighting) -> Self {
        r.0
    }
}
