//! Matrix permanents by Ryser's inclusion-exclusion formula.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Largest order accepted by [`ryser_permanent`].
pub const MAX_PERMANENT_N: usize = 20;

fn check(a: &Matrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::structure(format!(
            "permanent of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    if a.rows() > MAX_PERMANENT_N {
        return Err(Error::SizeCap(format!(
            "permanent supports n <= {MAX_PERMANENT_N}, got {}",
            a.rows()
        )));
    }
    if !a.is_finite() {
        return Err(Error::domain(
            "permanent of a matrix with non-finite entries",
        ));
    }
    Ok(())
}

/// `per(A) = (-1)^n Σ_{S ⊆ cols} (-1)^{|S|} Π_i Σ_{j∈S} a_ij`, visiting subsets in
/// Gray-code order so each step updates the row sums by one column. O(2ⁿ n).
pub fn ryser_permanent(a: &Matrix) -> Result<f64> {
    check(a)?;
    Ok(ryser_unchecked(a))
}

fn ryser_unchecked(a: &Matrix) -> f64 {
    let n = a.rows();
    if n == 0 {
        return 1.0;
    }
    let mut row_sums = vec![0.0; n];
    let mut total = 0.0;
    let mut prev_gray = 0usize;
    for k in 1..(1usize << n) {
        let gray = k ^ (k >> 1);
        let changed = (gray ^ prev_gray).trailing_zeros() as usize;
        let added = gray & (1 << changed) != 0;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if added {
                *s += a[(i, changed)];
            } else {
                *s -= a[(i, changed)];
            }
        }
        prev_gray = gray;
        let prod: f64 = row_sums.iter().product();
        if gray.count_ones() % 2 == 1 {
            total -= prod;
        } else {
            total += prod;
        }
    }
    if n % 2 == 1 {
        -total
    } else {
        total
    }
}

/// Natural log of the permanent of a nonnegative matrix given entrywise in log space.
///
/// Rows and then columns are rescaled by their largest entry before Ryser's formula, so
/// entries of any magnitude are handled without overflow. Returns `-inf` for a zero
/// permanent.
pub fn log_permanent_from_logs(log_a: &Matrix) -> Result<f64> {
    if !log_a.is_square() {
        return Err(Error::structure("log-permanent of a non-square matrix"));
    }
    let n = log_a.rows();
    if n > MAX_PERMANENT_N {
        return Err(Error::SizeCap(format!(
            "permanent supports n <= {MAX_PERMANENT_N}, got {n}"
        )));
    }
    if log_a
        .as_slice()
        .iter()
        .any(|x| x.is_nan() || *x == f64::INFINITY)
    {
        return Err(Error::domain("log-permanent input must be finite or -inf"));
    }
    let (scaled, offset) = rescale(log_a);
    if offset == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let p = ryser_unchecked(&scaled);
    Ok(if p > 0.0 {
        p.ln() + offset
    } else {
        f64::NEG_INFINITY
    })
}

/// `exp(log_a - r_i - c_j)` with every row and column maximum equal to 1, and `Σr + Σc`.
fn rescale(log_a: &Matrix) -> (Matrix, f64) {
    let n = log_a.rows();
    let mut offset = 0.0;
    let mut shifted = log_a.clone();
    for i in 0..n {
        let m = log_a
            .row(i)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return (shifted, f64::NEG_INFINITY);
        }
        offset += m;
        for j in 0..n {
            shifted[(i, j)] -= m;
        }
    }
    for j in 0..n {
        let m = (0..n)
            .map(|i| shifted[(i, j)])
            .fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return (shifted, f64::NEG_INFINITY);
        }
        offset += m;
        for i in 0..n {
            shifted[(i, j)] -= m;
        }
    }
    (shifted.map(f64::exp), offset)
}

/// Log-permanent of `exp(W)` and the matching marginals
/// `P(i→j) = exp(W_ij) per(minor_ij) / per(exp(W))`.
pub fn permanent_marginals(w: &Matrix) -> Result<(f64, Matrix)> {
    let log_z = log_permanent_from_logs(w)?;
    if log_z == f64::NEG_INFINITY {
        return Err(Error::Infeasible(
            "weight matrix admits no permutation".to_string(),
        ));
    }
    let n = w.rows();
    let entries: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            if w[(i, j)] == f64::NEG_INFINITY {
                return Ok(0.0);
            }
            let minor = log_permanent_from_logs(&w.minor(i, j))?;
            Ok((w[(i, j)] + minor - log_z).exp())
        })
        .collect::<Result<_>>()?;
    Ok((log_z, Matrix::from_row_major(n, n, entries)?))
}

/// Permanent by summing over all permutations (reference for small `n`).
pub fn permanent_by_enumeration(a: &Matrix) -> Result<f64> {
    check(a)?;
    if a.rows() > crate::map::brute::MAX_BRUTE_SIDE + 2 {
        return Err(Error::SizeCap(
            "permanent enumeration supports n <= 10".to_string(),
        ));
    }
    let mut total = 0.0;
    crate::map::brute::for_each_permutation(a.rows(), &mut |p| {
        total += p
            .iter()
            .enumerate()
            .map(|(i, &j)| a[(i, j)])
            .product::<f64>();
    });
    Ok(total)
}

/// Permanent by dynamic programming over column subsets; every term is nonnegative for
/// nonnegative input, so there is no cancellation. O(2ⁿ n) time and O(2ⁿ) memory.
pub fn permanent_subset_dp(a: &Matrix) -> Result<f64> {
    check(a)?;
    Ok(subset_dp_unchecked(a))
}

fn subset_dp_unchecked(a: &Matrix) -> f64 {
    let n = a.rows();
    let full = 1usize << n;
    let mut f = vec![0.0; full];
    f[0] = 1.0;
    for mask in 1..full {
        let row = mask.count_ones() as usize - 1;
        let mut bits = mask;
        let mut acc = 0.0;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            acc += f[mask & !(1 << j)] * a[(row, j)];
        }
        f[mask] = acc;
    }
    f[full - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_permanents() {
        assert_eq!(
            ryser_permanent(&Matrix::from_rows(&[vec![1.0]]).unwrap()).unwrap(),
            1.0
        );
        let ones = Matrix::from_fn(3, 3, |_, _| 1.0);
        assert!((ryser_permanent(&ones).unwrap() - 6.0).abs() < 1e-12);
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert!((ryser_permanent(&a).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(ryser_permanent(&Matrix::zeros(0, 0)).unwrap(), 1.0);
    }

    #[test]
    fn log_domain_handles_huge_entries() {
        // exp(800) overflows, but every permutation has log weight 1600
        let w = Matrix::from_fn(2, 2, |_, _| 800.0);
        let lp = log_permanent_from_logs(&w).unwrap();
        assert!((lp - (1600.0 + 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn zero_weights_give_factorial() {
        let w = Matrix::zeros(5, 5);
        let (log_z, marg) = permanent_marginals(&w).unwrap();
        assert!((log_z - 120f64.ln()).abs() < 1e-12);
        for x in marg.as_slice() {
            assert!((x - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            ryser_permanent(&Matrix::zeros(21, 21)),
            Err(Error::SizeCap(_))
        ));
        assert!(ryser_permanent(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn subset_dp_agrees_with_ryser() {
        let a = Matrix::from_fn(6, 6, |i, j| 0.1 + ((i * 7 + j * 3) % 5) as f64 * 0.3);
        let r = ryser_permanent(&a).unwrap();
        let d = permanent_subset_dp(&a).unwrap();
        assert!(((r - d) / d).abs() < 1e-12);
    }
}
