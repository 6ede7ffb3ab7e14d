//! Exact log-partition functions and marginals for small models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::permanent;
use crate::map::{brute, general};
use crate::matrix::{log_sum_exp, Matrix};
use crate::model::{ModelKind, Structure, StructuredModel, Topology};

/// Largest bipartite side handled exactly (n² permanents of order n - 1 per call).
pub const MAX_EXACT_SIDE: usize = 12;
/// Largest pairwise model enumerated exactly (2^20 labelings).
pub const MAX_EXACT_NODES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactMethod {
    Ryser,
    Enumeration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactInferenceResult {
    pub log_z: f64,
    /// Exact marginals in model coordinates.
    pub marginals: Vec<f64>,
    pub method: ExactMethod,
}

/// `log Z(θ)` and exact marginals. Bipartite models use permanents, general matchings
/// the subset recursion, pairwise models full enumeration.
pub fn exact_partition(model: &StructuredModel, theta: &[f64]) -> Result<ExactInferenceResult> {
    let scores = model.scores(theta)?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::domain("non-finite scores"));
    }
    let topology = model.topology();
    match topology.kind() {
        ModelKind::BipartiteMatching => {
            let n = topology.side();
            if n > MAX_EXACT_SIDE {
                return Err(Error::SizeCap(format!(
                    "exact bipartite inference supports n <= {MAX_EXACT_SIDE}, got {n}"
                )));
            }
            let w = Matrix::from_row_major(n, n, scores)?;
            let (log_z, marg) = permanent::permanent_marginals(&w)?;
            Ok(ExactInferenceResult {
                log_z,
                marginals: marg.as_slice().to_vec(),
                method: ExactMethod::Ryser,
            })
        }
        ModelKind::GeneralPerfectMatching => general_partition(topology, &scores),
        ModelKind::PairwiseBinaryGrid => enumerate_pairwise(topology, &scores),
    }
}

fn general_partition(topology: &Topology, scores: &[f64]) -> Result<ExactInferenceResult> {
    let n = topology.num_nodes();
    let usable = vec![true; topology.num_edges()];
    let table = general::log_partition_table(n, topology.edges(), &usable, scores)?;
    let full = (1usize << n) - 1;
    let log_z = table[full];
    if log_z == f64::NEG_INFINITY {
        return Err(Error::Infeasible(
            "graph has no perfect matching".to_string(),
        ));
    }
    // matchings through {i, j} are {i, j} plus a perfect matching of the rest
    let marginals = topology
        .edges()
        .iter()
        .zip(scores)
        .map(|(&(i, j), &w)| (w + table[full & !(1 << i) & !(1 << j)] - log_z).exp())
        .collect();
    Ok(ExactInferenceResult {
        log_z,
        marginals,
        method: ExactMethod::Enumeration,
    })
}

fn enumerate_pairwise(topology: &Topology, scores: &[f64]) -> Result<ExactInferenceResult> {
    let n = topology.num_nodes();
    if n > MAX_EXACT_NODES {
        return Err(Error::SizeCap(format!(
            "exact pairwise inference supports at most {MAX_EXACT_NODES} nodes, got {n}"
        )));
    }
    let edges = topology.edges();
    let config_score = |code: usize| -> f64 {
        let bit = |p: usize| (code >> p) & 1;
        let mut s: f64 = (0..n).map(|p| scores[2 * p + bit(p)]).sum();
        for (e, &(i, j)) in edges.iter().enumerate() {
            s += scores[topology.edge_coord(e, bit(i), bit(j))];
        }
        s
    };
    let count = 1usize << n;
    let log_z = log_sum_exp((0..count).map(config_score));
    let mut marginals = vec![0.0; topology.num_coords()];
    for code in 0..count {
        let p = (config_score(code) - log_z).exp();
        let bit = |q: usize| (code >> q) & 1;
        for q in 0..n {
            marginals[2 * q + bit(q)] += p;
        }
        for (e, &(i, j)) in edges.iter().enumerate() {
            marginals[topology.edge_coord(e, bit(i), bit(j))] += p;
        }
    }
    Ok(ExactInferenceResult {
        log_z,
        marginals,
        method: ExactMethod::Enumeration,
    })
}

/// Reference computation by listing every structure (bipartite n <= 8, general graphs
/// within the subset cap, pairwise models up to 20 nodes).
pub fn partition_by_enumeration(
    model: &StructuredModel,
    theta: &[f64],
) -> Result<ExactInferenceResult> {
    let scores = model.scores(theta)?;
    let topology = model.topology();
    let vertices: Vec<Vec<f64>> = match topology.kind() {
        ModelKind::BipartiteMatching => {
            let n = topology.side();
            if n > brute::MAX_BRUTE_SIDE {
                return Err(Error::SizeCap(format!(
                    "enumeration supports n <= {}",
                    brute::MAX_BRUTE_SIDE
                )));
            }
            let mut out = Vec::new();
            brute::for_each_permutation(n, &mut |p| {
                out.push(
                    Structure::Permutation(p.to_vec())
                        .indicator(topology)
                        .expect("valid permutation"),
                );
            });
            out
        }
        ModelKind::GeneralPerfectMatching => {
            let usable = vec![true; topology.num_edges()];
            general::enumerate_perfect_matchings(topology.num_nodes(), topology.edges(), &usable)?
                .into_iter()
                .map(|m| {
                    let mut y = vec![0.0; topology.num_edges()];
                    for e in m {
                        y[e] = 1.0;
                    }
                    y
                })
                .collect()
        }
        ModelKind::PairwiseBinaryGrid => return enumerate_pairwise(topology, &scores),
    };
    let weights: Vec<f64> = vertices
        .iter()
        .map(|y| crate::matrix::dot(y, &scores))
        .collect();
    let log_z = log_sum_exp(weights.iter().copied());
    let mut marginals = vec![0.0; topology.num_coords()];
    for (y, w) in vertices.iter().zip(&weights) {
        let p = (w - log_z).exp();
        for (m, &v) in marginals.iter_mut().zip(y) {
            *m += p * v;
        }
    }
    Ok(ExactInferenceResult {
        log_z,
        marginals,
        method: ExactMethod::Enumeration,
    })
}
