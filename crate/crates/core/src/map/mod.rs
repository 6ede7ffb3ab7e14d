//! Linear minimisation over structure polytopes (MAP decoding).
//!
//! Every solver here is exact. Sign handling is centralised in [`linear_minimize`],
//! which returns the vertex `s` minimising `⟨s, g⟩`.

mod assignment;
pub mod brute;
pub mod general;
mod maxflow;
mod qpbo;

pub use assignment::min_cost_assignment;
pub use brute::{brute_force_local_lp, brute_force_map, brute_force_minimize};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{ModelKind, StructuredModel, Topology};

/// A vertex of a structure polytope in model coordinates, with its objective value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexSolution {
    /// Integral for matchings; entries in `{0, ½, 1}` for pairwise LP solutions.
    pub coords: Vec<f64>,
    pub objective: f64,
    pub exact: bool,
}

impl VertexSolution {
    pub fn is_integral(&self) -> bool {
        self.coords.iter().all(|&x| x == 0.0 || x == 1.0)
    }
}

/// Optimal assignment on an `n x n` weight matrix. The vertex is the row-major indicator
/// of the permutation; ties resolve to the lexicographically smallest permutation.
pub fn solve_bipartite_matching(weights: &Matrix, maximize: bool) -> Result<VertexSolution> {
    let cost = if maximize {
        weights.map(|w| -w)
    } else {
        weights.clone()
    };
    let (perm, _) = min_cost_assignment(&cost)?;
    let n = weights.rows();
    let mut coords = vec![0.0; n * n];
    let mut objective = 0.0;
    for (i, &j) in perm.iter().enumerate() {
        coords[i * n + j] = 1.0;
        objective += weights[(i, j)];
    }
    Ok(VertexSolution {
        coords,
        objective,
        exact: true,
    })
}

/// Maximum-weight perfect matching of a general graph (edge weights in topology order).
pub fn solve_general_perfect_matching(
    topology: &Topology,
    weights: &[f64],
) -> Result<VertexSolution> {
    if topology.kind() != ModelKind::GeneralPerfectMatching {
        return Err(Error::structure(
            "general matching solver needs a general matching topology",
        ));
    }
    if weights.len() != topology.num_edges() {
        return Err(Error::structure(format!(
            "{} weights for {} edges",
            weights.len(),
            topology.num_edges()
        )));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::domain("matching weights must be finite"));
    }
    let usable = vec![true; weights.len()];
    let (objective, chosen) = general::max_weight_perfect_matching(
        topology.num_nodes(),
        topology.edges(),
        &usable,
        weights,
    )?
    .ok_or_else(|| Error::Infeasible("graph has no perfect matching".to_string()))?;
    let mut coords = vec![0.0; weights.len()];
    for e in chosen {
        coords[e] = 1.0;
    }
    Ok(VertexSolution {
        coords,
        objective,
        exact: true,
    })
}

/// Minimum of a binary pairwise energy over the local polytope. `node_costs[n]` holds the
/// costs of labels 0 and 1; `edge_costs[e]` the costs of `00, 01, 10, 11`.
pub fn solve_pairwise_binary_lp(
    topology: &Topology,
    node_costs: &[[f64; 2]],
    edge_costs: &[[f64; 4]],
) -> Result<VertexSolution> {
    if topology.kind() != ModelKind::PairwiseBinaryGrid {
        return Err(Error::structure(
            "pairwise LP solver needs a pairwise topology",
        ));
    }
    let sol = qpbo::solve(
        topology.num_nodes(),
        topology.edges(),
        node_costs,
        edge_costs,
    )?;
    Ok(VertexSolution {
        coords: pairwise_coords(&sol.node, &sol.edge),
        objective: sol.objective,
        exact: true,
    })
}

/// Vertex minimising `⟨s, g⟩` over the model polytope (local polytope for pairwise models).
pub fn linear_minimize(topology: &Topology, g: &[f64]) -> Result<VertexSolution> {
    if g.len() != topology.num_coords() {
        return Err(Error::structure(format!(
            "gradient has {} coordinates, model has {}",
            g.len(),
            topology.num_coords()
        )));
    }
    match topology.kind() {
        ModelKind::BipartiteMatching => {
            let n = topology.side();
            solve_bipartite_matching(&Matrix::from_row_major(n, n, g.to_vec())?, false)
        }
        ModelKind::GeneralPerfectMatching => {
            let neg: Vec<f64> = g.iter().map(|x| -x).collect();
            let mut sol = solve_general_perfect_matching(topology, &neg)?;
            sol.objective = -sol.objective;
            Ok(sol)
        }
        ModelKind::PairwiseBinaryGrid => {
            let (nodes, edges) = split_pairwise_costs(topology, g);
            solve_pairwise_binary_lp(topology, &nodes, &edges)
        }
    }
}

/// MAP decoding: the vertex maximising the score under `theta`. For pairwise models this
/// is the LP relaxation optimum; `objective` is the (relaxed) score.
pub fn map_decode(model: &StructuredModel, theta: &[f64]) -> Result<VertexSolution> {
    let neg: Vec<f64> = model.scores(theta)?.iter().map(|s| -s).collect();
    let mut sol = linear_minimize(model.topology(), &neg)?;
    sol.objective = -sol.objective;
    Ok(sol)
}

pub(crate) fn split_pairwise_costs(
    topology: &Topology,
    g: &[f64],
) -> (Vec<[f64; 2]>, Vec<[f64; 4]>) {
    let nodes = (0..topology.num_nodes())
        .map(|n| [g[2 * n], g[2 * n + 1]])
        .collect();
    let edges = (0..topology.num_edges())
        .map(|e| {
            let b = topology.edge_coord(e, 0, 0);
            [g[b], g[b + 1], g[b + 2], g[b + 3]]
        })
        .collect();
    (nodes, edges)
}

pub(crate) fn pairwise_coords(node: &[f64], edge: &[[f64; 4]]) -> Vec<f64> {
    let mut coords = Vec::with_capacity(2 * node.len() + 4 * edge.len());
    for &x in node {
        coords.push(1.0 - x);
        coords.push(x);
    }
    for mu in edge {
        coords.extend_from_slice(mu);
    }
    coords
}
