//! Perfect matchings of small general graphs by dynamic programming over vertex subsets.
//!
//! Every table is indexed by the set `S` of vertices still to be matched. The lowest
//! vertex of `S` must be matched to one of its neighbours in `S`, so each table entry
//! is a reduction over at most `|V| - 1` smaller entries.

use crate::error::{Error, Result};

/// Largest vertex count accepted by the subset tables.
pub const MAX_GENERAL_NODES: usize = 16;

fn check_size(num_nodes: usize) -> Result<()> {
    if num_nodes > MAX_GENERAL_NODES {
        return Err(Error::SizeCap(format!(
            "general matching supports at most {MAX_GENERAL_NODES} vertices, got {num_nodes}"
        )));
    }
    Ok(())
}

/// `adj[i][j]` = index of edge {i, j} when usable.
fn adjacency(
    num_nodes: usize,
    edges: &[(usize, usize)],
    usable: &[bool],
) -> Vec<Vec<Option<usize>>> {
    let mut adj = vec![vec![None; num_nodes]; num_nodes];
    for (e, &(i, j)) in edges.iter().enumerate() {
        if usable[e] {
            adj[i][j] = Some(e);
            adj[j][i] = Some(e);
        }
    }
    adj
}

/// Number of perfect matchings of every induced subgraph, indexed by vertex bitmask.
pub(crate) fn count_table(
    num_nodes: usize,
    edges: &[(usize, usize)],
    usable: &[bool],
) -> Result<Vec<u64>> {
    check_size(num_nodes)?;
    let adj = adjacency(num_nodes, edges, usable);
    let full = 1usize << num_nodes;
    let mut count = vec![0u64; full];
    count[0] = 1;
    for set in 1..full {
        if set.count_ones() % 2 == 1 {
            continue;
        }
        let i = set.trailing_zeros() as usize;
        let rest = set & !(1 << i);
        let mut total = 0u64;
        let mut bits = rest;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if adj[i][j].is_some() {
                total += count[rest & !(1 << j)];
            }
        }
        count[set] = total;
    }
    Ok(count)
}

/// log of the weighted perfect-matching sum Σ_M exp(Σ_{e∈M} w_e) for every vertex subset.
pub(crate) fn log_partition_table(
    num_nodes: usize,
    edges: &[(usize, usize)],
    usable: &[bool],
    weights: &[f64],
) -> Result<Vec<f64>> {
    check_size(num_nodes)?;
    let adj = adjacency(num_nodes, edges, usable);
    let full = 1usize << num_nodes;
    let mut table = vec![f64::NEG_INFINITY; full];
    table[0] = 0.0;
    let mut terms = Vec::with_capacity(num_nodes);
    for set in 1..full {
        if set.count_ones() % 2 == 1 {
            continue;
        }
        let i = set.trailing_zeros() as usize;
        let rest = set & !(1 << i);
        terms.clear();
        let mut bits = rest;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if let Some(e) = adj[i][j] {
                let sub = table[rest & !(1 << j)];
                if sub > f64::NEG_INFINITY {
                    terms.push(weights[e] + sub);
                }
            }
        }
        table[set] = crate::matrix::log_sum_exp(terms.iter().copied());
    }
    Ok(table)
}

/// Maximum-weight perfect matching restricted to `usable` edges.
///
/// Returns the optimal value and the chosen edge indices in increasing vertex order, or
/// `None` when no perfect matching exists. Among optimal matchings the one whose sorted
/// edge list is lexicographically smallest is returned.
pub fn max_weight_perfect_matching(
    num_nodes: usize,
    edges: &[(usize, usize)],
    usable: &[bool],
    weights: &[f64],
) -> Result<Option<(f64, Vec<usize>)>> {
    check_size(num_nodes)?;
    if num_nodes % 2 == 1 {
        return Ok(None);
    }
    let adj = adjacency(num_nodes, edges, usable);
    let full = 1usize << num_nodes;
    let mut best = vec![f64::NEG_INFINITY; full];
    let mut choice = vec![usize::MAX; full];
    best[0] = 0.0;
    for set in 1..full {
        if set.count_ones() % 2 == 1 {
            continue;
        }
        let i = set.trailing_zeros() as usize;
        let rest = set & !(1 << i);
        let mut bits = rest;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if let Some(e) = adj[i][j] {
                let sub = best[rest & !(1 << j)];
                if sub == f64::NEG_INFINITY {
                    continue;
                }
                let value = weights[e] + sub;
                if value > best[set] {
                    best[set] = value;
                    choice[set] = j;
                }
            }
        }
    }
    let mut set = full - 1;
    if best[set] == f64::NEG_INFINITY {
        return Ok(None);
    }
    let value = best[set];
    let mut chosen = Vec::with_capacity(num_nodes / 2);
    while set != 0 {
        let i = set.trailing_zeros() as usize;
        let j = choice[set];
        chosen.push(adj[i][j].expect("choice refers to an edge"));
        set &= !(1 << i) & !(1 << j);
    }
    Ok(Some((value, chosen)))
}

/// Every perfect matching of the graph as a list of edge indices (enumeration order is
/// lexicographic in the sorted edge lists).
pub fn enumerate_perfect_matchings(
    num_nodes: usize,
    edges: &[(usize, usize)],
    usable: &[bool],
) -> Result<Vec<Vec<usize>>> {
    check_size(num_nodes)?;
    let adj = adjacency(num_nodes, edges, usable);
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn recurse(
        set: usize,
        adj: &[Vec<Option<usize>>],
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if set == 0 {
            out.push(current.clone());
            return;
        }
        let i = set.trailing_zeros() as usize;
        let rest = set & !(1 << i);
        let mut bits = rest;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if let Some(e) = adj[i][j] {
                current.push(e);
                recurse(rest & !(1 << j), adj, current, out);
                current.pop();
            }
        }
    }
    if num_nodes % 2 == 0 {
        recurse((1usize << num_nodes) - 1, &adj, &mut current, &mut out);
    }
    Ok(out)
}
