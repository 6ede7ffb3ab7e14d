use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::general;
use crate::model::{EdgeState, ModelKind, Topology};

/// Default tolerance for local-polytope membership.
pub const POLYTOPE_TOL: f64 = 1e-9;

/// A point of a model's local polytope, stored in the flattened coordinate layout of
/// [`Topology`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pseudomarginals {
    values: Vec<f64>,
}

impl Pseudomarginals {
    pub fn new(values: Vec<f64>) -> Self {
        Pseudomarginals { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Node marginal `(μ_n(0), μ_n(1))` of a pairwise model.
    pub fn node(&self, node: usize) -> [f64; 2] {
        [self.values[2 * node], self.values[2 * node + 1]]
    }

    /// Joint edge marginal of a pairwise model, ordered `00, 01, 10, 11`.
    pub fn edge_joint(&self, topology: &Topology, edge: usize) -> [f64; 4] {
        let b = topology.edge_coord(edge, 0, 0);
        [
            self.values[b],
            self.values[b + 1],
            self.values[b + 2],
            self.values[b + 3],
        ]
    }

    /// `(1 - gamma) * self + gamma * other`.
    pub fn step_towards(&mut self, other: &[f64], gamma: f64) {
        for (x, &s) in self.values.iter_mut().zip(other) {
            *x += gamma * (s - *x);
        }
    }
}

/// Whether `tau` lies in the local polytope of `topology` up to `tol`.
///
/// Matchings: entries in `[0, 1]`, every vertex covered with total mass 1, clamped edges
/// at their clamp value. Pairwise models: node marginals normalised and every edge joint
/// marginalising onto both endpoint marginals.
pub fn validate_local_polytope(
    tau: &Pseudomarginals,
    topology: &Topology,
    tol: f64,
) -> Result<bool> {
    let v = tau.values();
    if v.len() != topology.num_coords() {
        return Err(Error::structure(format!(
            "pseudomarginals have {} coordinates, model has {}",
            v.len(),
            topology.num_coords()
        )));
    }
    if v.iter()
        .any(|&x| !x.is_finite() || x < -tol || x > 1.0 + tol)
    {
        return Ok(false);
    }
    match topology.kind() {
        ModelKind::BipartiteMatching | ModelKind::GeneralPerfectMatching => {
            let mut degree = vec![0.0; topology.num_nodes()];
            for (e, &(i, j)) in topology.edges().iter().enumerate() {
                degree[i] += v[e];
                degree[j] += v[e];
            }
            if degree.iter().any(|d| (d - 1.0).abs() > tol) {
                return Ok(false);
            }
            for (e, state) in topology.edge_states().iter().enumerate() {
                if let Some(c) = state.clamped_value() {
                    if (v[e] - c).abs() > tol {
                        return Ok(false);
                    }
                }
            }
        }
        ModelKind::PairwiseBinaryGrid => {
            for n in 0..topology.num_nodes() {
                if (v[2 * n] + v[2 * n + 1] - 1.0).abs() > tol {
                    return Ok(false);
                }
            }
            for (e, &(i, j)) in topology.edges().iter().enumerate() {
                let b = topology.edge_coord(e, 0, 0);
                let [p00, p01, p10, p11] = [v[b], v[b + 1], v[b + 2], v[b + 3]];
                let checks = [
                    (p00 + p01, v[2 * i]),
                    (p10 + p11, v[2 * i + 1]),
                    (p00 + p10, v[2 * j]),
                    (p01 + p11, v[2 * j + 1]),
                ];
                if checks.iter().any(|(a, b)| (a - b).abs() > tol) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Interior starting point of the local polytope.
///
/// Bipartite `n x n`: all entries `1/n`. Pairwise: uniform node and edge marginals.
/// General graphs: the average of the distinct perfect matchings obtained by finding, for
/// every free edge, one matching that uses it and one that avoids it.
pub fn init_pseudomarginals(topology: &Topology) -> Result<Pseudomarginals> {
    let values = match topology.kind() {
        ModelKind::BipartiteMatching => {
            vec![1.0 / topology.side() as f64; topology.num_coords()]
        }
        ModelKind::PairwiseBinaryGrid => {
            let mut v = vec![0.5; 2 * topology.num_nodes()];
            v.extend(std::iter::repeat(0.25).take(4 * topology.num_edges()));
            v
        }
        ModelKind::GeneralPerfectMatching => average_of_spanning_matchings(topology)?,
    };
    Ok(Pseudomarginals::new(values))
}

fn average_of_spanning_matchings(topology: &Topology) -> Result<Vec<f64>> {
    let n = topology.num_nodes();
    let edges = topology.edges();
    let states = topology.edge_states();
    let allowed: Vec<bool> = states.iter().map(|s| *s != EdgeState::Forbidden).collect();
    let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
    let infeasible = || Error::Infeasible("graph has no perfect matching".to_string());

    for (e, state) in states.iter().enumerate() {
        if *state != EdgeState::Free {
            continue;
        }
        let mut w = vec![0.0; edges.len()];
        w[e] = 1.0;
        let (_, with) =
            general::max_weight_perfect_matching(n, edges, &allowed, &w)?.ok_or_else(infeasible)?;
        found.insert(with);

        let mut without_usable = allowed.clone();
        without_usable[e] = false;
        let zero = vec![0.0; edges.len()];
        let (_, without) = general::max_weight_perfect_matching(n, edges, &without_usable, &zero)?
            .ok_or_else(infeasible)?;
        found.insert(without);
    }
    if found.is_empty() {
        // every edge clamped: the unique perfect matching
        let zero = vec![0.0; edges.len()];
        let (_, only) = general::max_weight_perfect_matching(n, edges, &allowed, &zero)?
            .ok_or_else(infeasible)?;
        found.insert(only);
    }
    let mut tau = vec![0.0; edges.len()];
    let weight = 1.0 / found.len() as f64;
    for m in &found {
        for &e in m {
            tau[e] += weight;
        }
    }
    Ok(tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_two_node_edge_is_valid() {
        let t = Topology::pairwise(2, &[(0, 1)]).unwrap();
        let tau = Pseudomarginals::new(vec![0.5, 0.5, 0.5, 0.5, 0.25, 0.25, 0.25, 0.25]);
        assert!(validate_local_polytope(&tau, &t, POLYTOPE_TOL).unwrap());
        assert_eq!(init_pseudomarginals(&t).unwrap(), tau);
    }

    #[test]
    fn unnormalised_node_is_rejected() {
        let t = Topology::pairwise(1, &[]).unwrap();
        let tau = Pseudomarginals::new(vec![0.7, 0.4]);
        assert!(!validate_local_polytope(&tau, &t, POLYTOPE_TOL).unwrap());
    }

    #[test]
    fn birkhoff_centre_is_valid() {
        let t = Topology::bipartite(3).unwrap();
        let tau = Pseudomarginals::new(vec![1.0 / 3.0; 9]);
        assert!(validate_local_polytope(&tau, &t, POLYTOPE_TOL).unwrap());
    }

    #[test]
    fn inconsistent_edge_is_rejected() {
        let t = Topology::pairwise(2, &[(0, 1)]).unwrap();
        let tau = Pseudomarginals::new(vec![0.5, 0.5, 0.5, 0.5, 0.5, 0.0, 0.25, 0.25]);
        assert!(!validate_local_polytope(&tau, &t, POLYTOPE_TOL).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let t = Topology::bipartite(2).unwrap();
        assert!(matches!(
            validate_local_polytope(&Pseudomarginals::new(vec![0.5; 3]), &t, POLYTOPE_TOL),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn bipartite_init_is_uniform() {
        let t = Topology::bipartite(4).unwrap();
        let tau = init_pseudomarginals(&t).unwrap();
        assert!(tau.values().iter().all(|&x| x == 0.25));
        assert!(validate_local_polytope(&tau, &t, 1e-12).unwrap());
    }

    #[test]
    fn k4_init_is_one_third() {
        let edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let t = Topology::general_matching(4, &edges).unwrap();
        let tau = init_pseudomarginals(&t).unwrap();
        for &x in tau.values() {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!(validate_local_polytope(&tau, &t, 1e-12).unwrap());
    }

    #[test]
    fn clamped_edges_keep_clamp_values_at_init() {
        // square 0-1-2-3-0 with pendant pair 4-5 attached by edge (3,4)
        let edges = [(0, 1), (1, 2), (2, 3), (0, 3), (3, 4), (4, 5)];
        let t = Topology::general_matching(6, &edges).unwrap();
        let tau = init_pseudomarginals(&t).unwrap();
        assert!(validate_local_polytope(&tau, &t, 1e-12).unwrap());
        for (e, s) in t.edge_states().iter().enumerate() {
            match s {
                EdgeState::Free => assert!(tau.values()[e] > 0.0 && tau.values()[e] < 1.0),
                _ => assert_eq!(Some(tau.values()[e]), s.clamped_value()),
            }
        }
    }
}
