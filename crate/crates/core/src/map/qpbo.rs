//! Roof duality: the local-polytope LP of a binary pairwise energy solved as a min cut
//! of the doubled network (one copy `p` for `x_p`, one copy `p̄` for `1 - x_p`).

use crate::error::{Error, Result};
use crate::map::maxflow::FlowNetwork;

/// Optimal point of the local-polytope LP.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct LpSolution {
    /// Probability of label 1 per node, in `{0, ½, 1}`.
    pub node: Vec<f64>,
    /// Joint `(00, 01, 10, 11)` per edge.
    pub edge: Vec<[f64; 4]>,
    pub objective: f64,
    /// `constant + max-flow`, the roof-dual bound (equal to `objective` up to rounding).
    pub bound: f64,
}

/// Cheapest joint for fixed node marginals: only the `11` mass is free and it enters the
/// cost with coefficient `a + d - b - c`.
pub(crate) fn best_joint(x: f64, y: f64, cost: &[f64; 4]) -> [f64; 4] {
    let w = cost[0] + cost[3] - cost[1] - cost[2];
    let z = if w < 0.0 {
        x.min(y)
    } else {
        (x + y - 1.0).max(0.0)
    };
    [1.0 - x - y + z, y - z, x - z, z]
}

pub(crate) fn lp_value(
    node_costs: &[[f64; 2]],
    edges: &[(usize, usize)],
    edge_costs: &[[f64; 4]],
    node: &[f64],
) -> (Vec<[f64; 4]>, f64) {
    let mut value = 0.0;
    for (c, &x) in node_costs.iter().zip(node) {
        value += c[0] * (1.0 - x) + c[1] * x;
    }
    let joints: Vec<[f64; 4]> = edges
        .iter()
        .zip(edge_costs)
        .map(|(&(i, j), c)| {
            let mu = best_joint(node[i], node[j], c);
            value += (0..4).map(|s| c[s] * mu[s]).sum::<f64>();
            mu
        })
        .collect();
    (joints, value)
}

/// Minimise `Σ_n c_n(x_n) + Σ_e c_e(x_i, x_j)` over the local polytope.
pub(crate) fn solve(
    num_nodes: usize,
    edges: &[(usize, usize)],
    node_costs: &[[f64; 2]],
    edge_costs: &[[f64; 4]],
) -> Result<LpSolution> {
    if node_costs.len() != num_nodes || edge_costs.len() != edges.len() {
        return Err(Error::structure(format!(
            "cost tables ({}, {}) do not match {num_nodes} nodes and {} edges",
            node_costs.len(),
            edge_costs.len(),
            edges.len()
        )));
    }
    let finite = node_costs
        .iter()
        .flatten()
        .chain(edge_costs.iter().flatten())
        .all(|c| c.is_finite());
    if !finite {
        return Err(Error::domain("pairwise LP costs must be finite"));
    }

    // x-coefficient form: constant + Σ u_p x_p + Σ w_e x_i x_j
    let mut constant = 0.0;
    let mut unary: Vec<f64> = node_costs.iter().map(|c| c[1] - c[0]).collect();
    constant += node_costs.iter().map(|c| c[0]).sum::<f64>();
    let mut submodular = Vec::new();
    let mut frustrated = Vec::new();
    for (&(i, j), c) in edges.iter().zip(edge_costs) {
        let [a, b, cc, d] = *c;
        constant += a;
        unary[i] += cc - a;
        unary[j] += b - a;
        let w = a + d - b - cc;
        if w < 0.0 {
            // w x y = w x + |w| x (1 - y)
            unary[i] += w;
            submodular.push((i, j, -w));
        } else if w > 0.0 {
            frustrated.push((i, j, w));
        }
    }

    let (source, sink) = (0, 1);
    let node = |p: usize| 2 + p;
    let bar = |p: usize| 2 + num_nodes + p;
    let mut net = FlowNetwork::new(2 + 2 * num_nodes);
    let mut scale: f64 = 1.0;
    for (p, &u) in unary.iter().enumerate() {
        scale = scale.max(u.abs());
        if u >= 0.0 {
            net.add_arc(source, node(p), u / 2.0);
            net.add_arc(bar(p), sink, u / 2.0);
        } else {
            constant += u;
            net.add_arc(node(p), sink, -u / 2.0);
            net.add_arc(source, bar(p), -u / 2.0);
        }
    }
    for &(i, j, w) in &submodular {
        // cut when x_i = 1, x_j = 0
        scale = scale.max(w);
        net.add_arc(node(j), node(i), w / 2.0);
        net.add_arc(bar(i), bar(j), w / 2.0);
    }
    for &(i, j, w) in &frustrated {
        // cut when x_i = 1, x_j = 1
        scale = scale.max(w);
        net.add_arc(bar(j), node(i), w / 2.0);
        net.add_arc(bar(i), node(j), w / 2.0);
    }
    net.set_eps(1e-13 * scale);
    let flow = net.max_flow(source, sink);
    let in_source = net.source_side(source);

    let labels: Vec<f64> = (0..num_nodes)
        .map(|p| match (in_source[node(p)], in_source[bar(p)]) {
            (true, false) => 0.0,
            (false, true) => 1.0,
            _ => 0.5,
        })
        .collect();
    let (edge, objective) = lp_value(node_costs, edges, edge_costs, &labels);
    Ok(LpSolution {
        node: labels,
        edge,
        objective,
        bound: constant + flow,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_edges_is_independent_argmin() {
        let costs = [[1.0, -2.0], [0.5, 3.0], [-1.0, -1.5]];
        let sol = solve(3, &[], &costs, &[]).unwrap();
        assert_eq!(sol.node, vec![1.0, 0.0, 1.0]);
        assert!((sol.objective - (-2.0 + 0.5 - 1.5)).abs() < 1e-12);
        assert!((sol.bound - sol.objective).abs() < 1e-12);
    }

    #[test]
    fn attractive_edge_follows_stronger_unary() {
        // node 0 prefers 1 strongly, node 1 prefers 0 weakly, disagreement costs 10
        let nodes = [[0.0, -3.0], [0.0, 1.0]];
        let edge = [[0.0, 10.0, 10.0, 0.0]];
        let sol = solve(2, &[(0, 1)], &nodes, &edge).unwrap();
        assert_eq!(sol.node, vec![1.0, 1.0]);
        assert!((sol.objective + 2.0).abs() < 1e-12);
        assert_eq!(sol.edge[0], [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn frustrated_triangle_is_half_integral() {
        let nodes = [[0.0, 0.0]; 3];
        let repulsive = [1.0, 0.0, 0.0, 1.0];
        let edges = [(0, 1), (0, 2), (1, 2)];
        let sol = solve(3, &edges, &nodes, &[repulsive; 3]).unwrap();
        assert_eq!(sol.node, vec![0.5; 3]);
        assert!(sol.objective.abs() < 1e-12);
        assert!(sol.bound.abs() < 1e-12);
        for mu in &sol.edge {
            assert_eq!(*mu, [0.0, 0.5, 0.5, 0.0]);
        }
    }

    #[test]
    fn rejects_mismatched_tables() {
        assert!(solve(2, &[(0, 1)], &[[0.0, 0.0]], &[[0.0; 4]]).is_err());
        assert!(matches!(
            solve(1, &[], &[[f64::NAN, 0.0]], &[]),
            Err(Error::Domain(_))
        ));
    }
}
