//! Central finite-difference checks of analytic gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdReport {
    /// Largest `|fd - g| / max(1, |g|)` over all points and coordinates.
    pub max_rel_error: f64,
    pub worst_point: usize,
    pub worst_coord: usize,
}

/// Compare `grad(x)` with `(f(x + h e_k) - f(x - h e_k)) / 2h` at every probe point and
/// coordinate. Relative errors are taken against `max(1, |g_k|)` so that near-zero
/// components are judged on an absolute scale.
pub fn finite_difference_check(
    f: &dyn Fn(&[f64]) -> Result<f64>,
    grad: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    points: &[Vec<f64>],
    h: f64,
) -> Result<FdReport> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step h = {h} must be positive"
        )));
    }
    let mut report = FdReport {
        max_rel_error: 0.0,
        worst_point: 0,
        worst_coord: 0,
    };
    for (p, x) in points.iter().enumerate() {
        let g = grad(x)?;
        if g.len() != x.len() {
            return Err(Error::structure(
                "gradient length differs from point dimension",
            ));
        }
        let mut probe = x.clone();
        for k in 0..x.len() {
            probe[k] = x[k] + h;
            let up = f(&probe)?;
            probe[k] = x[k] - h;
            let down = f(&probe)?;
            probe[k] = x[k];
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - g[k]).abs() / g[k].abs().max(1.0);
            if rel > report.max_rel_error || rel.is_nan() {
                report = FdReport {
                    max_rel_error: rel,
                    worst_point: p,
                    worst_coord: k,
                };
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_is_exact() {
        let c = [1.5, -2.0, 0.25];
        let f = |x: &[f64]| Ok(x.iter().zip(&c).map(|(a, b)| a * b).sum());
        let g = |_: &[f64]| Ok(c.to_vec());
        let r = finite_difference_check(&f, &g, &[vec![0.1, 0.2, 0.3], vec![-4.0, 2.0, 9.0]], 1e-6)
            .unwrap();
        assert!(r.max_rel_error < 1e-8);
    }

    #[test]
    fn wrong_gradient_is_located() {
        let f = |x: &[f64]| Ok(x[0] * x[0] + x[1]);
        let g = |x: &[f64]| Ok(vec![2.0 * x[0], 3.0]);
        let r = finite_difference_check(&f, &g, &[vec![1.0, 1.0]], 1e-6).unwrap();
        assert_eq!(r.worst_coord, 1);
        assert!((r.max_rel_error - 2.0 / 3.0).abs() < 1e-6);
    }
}
