//! Linear assignment by shortest augmenting paths with dual potentials (O(n³)).

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Minimum-cost assignment: `row_to_col[i]` is the column of row `i`.
///
/// Among optimal assignments the lexicographically smallest `row_to_col` is returned
/// (reduced costs within a relative `1e-12` count as ties).
pub fn min_cost_assignment(cost: &Matrix) -> Result<(Vec<usize>, f64)> {
    if !cost.is_square() {
        return Err(Error::structure(format!(
            "assignment needs a square matrix, got {}x{}",
            cost.rows(),
            cost.cols()
        )));
    }
    if !cost.is_finite() {
        return Err(Error::domain(
            "assignment cost matrix has non-finite entries",
        ));
    }
    let n = cost.rows();
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let (mut row_to_col, u, v) = hungarian(cost);
    let scale = cost.as_slice().iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let tight = |i: usize, j: usize| cost[(i, j)] - u[i] - v[j] <= 1e-12 * scale;
    lexicographic_refine(n, &tight, &mut row_to_col);
    let value = row_to_col
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[(i, j)])
        .sum();
    Ok((row_to_col, value))
}

/// Hungarian method with potentials; returns assignment and the dual vectors.
fn hungarian(cost: &Matrix) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = cost.rows();
    // 1-based internal arrays, index 0 is a virtual column
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[owner[j] - 1] = j - 1;
    }
    (row_to_col, u[1..].to_vec(), v[1..].to_vec())
}

/// Move each row, in order, to the smallest tight column reachable by an alternating
/// cycle through tight edges of later rows. Every optimal assignment uses tight edges
/// only, so the result is the lexicographically smallest optimal assignment.
fn lexicographic_refine(n: usize, tight: &dyn Fn(usize, usize) -> bool, row_to_col: &mut [usize]) {
    let mut col_to_row = vec![0; n];
    for (i, &j) in row_to_col.iter().enumerate() {
        col_to_row[j] = i;
    }
    for i in 0..n {
        let target = row_to_col[i];
        for j in 0..target {
            if !tight(i, j) || col_to_row[j] < i {
                continue;
            }
            // row holding j must move, eventually into `target`
            let mut visited = vec![false; n];
            visited[j] = true;
            let mut path = Vec::new();
            if find_path(
                col_to_row[j],
                target,
                i,
                tight,
                row_to_col,
                &col_to_row,
                &mut visited,
                &mut path,
            ) {
                // path lists (row, new column) moves
                for &(r, c) in &path {
                    row_to_col[r] = c;
                    col_to_row[c] = r;
                }
                row_to_col[i] = j;
                col_to_row[j] = i;
                break;
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn find_path(
    row: usize,
    target: usize,
    pivot: usize,
    tight: &dyn Fn(usize, usize) -> bool,
    row_to_col: &[usize],
    col_to_row: &[usize],
    visited: &mut [bool],
    path: &mut Vec<(usize, usize)>,
) -> bool {
    for c in 0..row_to_col.len() {
        if visited[c] || c == row_to_col[row] || !tight(row, c) {
            continue;
        }
        if c == target {
            path.push((row, c));
            return true;
        }
        let next = col_to_row[c];
        if next <= pivot {
            continue;
        }
        visited[c] = true;
        path.push((row, c));
        if find_path(
            next, target, pivot, tight, row_to_col, col_to_row, visited, path,
        ) {
            return true;
        }
        path.pop();
    }
    false
}
