//! Exhaustive solvers for small instances, used to check the fast ones.

use crate::error::{Error, Result};
use crate::map::{general, qpbo, VertexSolution};
use crate::model::{ModelKind, StructuredModel, Topology};

/// Largest bipartite side enumerated by brute force.
pub const MAX_BRUTE_SIDE: usize = 8;
/// Largest number of binary nodes enumerated by brute force (2^20 labelings).
pub const MAX_BRUTE_NODES: usize = 20;
/// Largest number of nodes for the half-integral LP enumeration (3^12 points).
pub const MAX_BRUTE_LP_NODES: usize = 12;

fn cap(what: &str, got: usize, max: usize) -> Result<()> {
    if got > max {
        return Err(Error::SizeCap(format!(
            "brute force {what} supports at most {max}, got {got}"
        )));
    }
    Ok(())
}

/// Integral vertex minimising `⟨s, g⟩` by enumeration. Ties keep the first vertex in
/// lexicographic enumeration order.
pub fn brute_force_minimize(topology: &Topology, g: &[f64]) -> Result<VertexSolution> {
    if g.len() != topology.num_coords() {
        return Err(Error::structure("cost vector length mismatch"));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut offer = |coords: Vec<f64>| {
        let v = crate::matrix::dot(&coords, g);
        if best.as_ref().map_or(true, |(b, _)| v < *b) {
            best = Some((v, coords));
        }
    };
    match topology.kind() {
        ModelKind::BipartiteMatching => {
            let n = topology.side();
            cap("matching side", n, MAX_BRUTE_SIDE)?;
            for_each_permutation(n, &mut |perm| {
                let mut y = vec![0.0; n * n];
                for (i, &j) in perm.iter().enumerate() {
                    y[i * n + j] = 1.0;
                }
                offer(y);
            });
        }
        ModelKind::GeneralPerfectMatching => {
            let usable = vec![true; topology.num_edges()];
            for m in general::enumerate_perfect_matchings(
                topology.num_nodes(),
                topology.edges(),
                &usable,
            )? {
                let mut y = vec![0.0; topology.num_edges()];
                for e in m {
                    y[e] = 1.0;
                }
                offer(y);
            }
        }
        ModelKind::PairwiseBinaryGrid => {
            let n = topology.num_nodes();
            cap("labeling nodes", n, MAX_BRUTE_NODES)?;
            let mut labels = vec![0u8; n];
            for code in 0..(1usize << n) {
                // node 0 is the most significant label so enumeration is lexicographic
                for (p, l) in labels.iter_mut().enumerate() {
                    *l = ((code >> (n - 1 - p)) & 1) as u8;
                }
                offer(crate::model::Structure::Labels(labels.clone()).indicator(topology)?);
            }
        }
    }
    let (objective, coords) =
        best.ok_or_else(|| Error::Infeasible("no vertex to enumerate".to_string()))?;
    Ok(VertexSolution {
        coords,
        objective,
        exact: true,
    })
}

/// Highest-scoring structure under `theta`; `objective` is the score.
pub fn brute_force_map(model: &StructuredModel, theta: &[f64]) -> Result<VertexSolution> {
    let neg: Vec<f64> = model.scores(theta)?.iter().map(|s| -s).collect();
    let mut sol = brute_force_minimize(model.topology(), &neg)?;
    sol.objective = -sol.objective;
    Ok(sol)
}

/// Minimum of `⟨τ, g⟩` over the local polytope of a pairwise model by enumerating all
/// half-integral node assignments (the LP always has a half-integral optimum).
pub fn brute_force_local_lp(topology: &Topology, g: &[f64]) -> Result<VertexSolution> {
    if topology.kind() != ModelKind::PairwiseBinaryGrid {
        return Err(Error::structure(
            "local LP enumeration applies to pairwise models",
        ));
    }
    if g.len() != topology.num_coords() {
        return Err(Error::structure("cost vector length mismatch"));
    }
    let n = topology.num_nodes();
    cap("LP nodes", n, MAX_BRUTE_LP_NODES)?;
    let (node_costs, edge_costs) = super::split_pairwise_costs(topology, g);
    let mut node = vec![0.0; n];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        for x in node.iter_mut() {
            *x = (c % 3) as f64 / 2.0;
            c /= 3;
        }
        let (_, value) = qpbo::lp_value(&node_costs, topology.edges(), &edge_costs, &node);
        if best.as_ref().map_or(true, |(b, _)| value < *b) {
            best = Some((value, node.clone()));
        }
    }
    let (_, node) = best.expect("at least one assignment");
    let (edge, objective) = qpbo::lp_value(&node_costs, topology.edges(), &edge_costs, &node);
    Ok(VertexSolution {
        coords: super::pairwise_coords(&node, &edge),
        objective,
        exact: true,
    })
}

/// Calls `visit` on every permutation of `0..n` in lexicographic order.
pub fn for_each_permutation(n: usize, visit: &mut dyn FnMut(&[usize])) {
    fn rec(perm: &mut Vec<usize>, used: &mut [bool], visit: &mut dyn FnMut(&[usize])) {
        if perm.len() == used.len() {
            visit(perm);
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                perm.push(j);
                rec(perm, used, visit);
                perm.pop();
                used[j] = false;
            }
        }
    }
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], visit);
}
