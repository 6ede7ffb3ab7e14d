//! Exact regularised maximum likelihood by gradient ascent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::dual::check_lambda;
use crate::error::{Error, Result};
use crate::exact::partition::exact_partition;
use crate::matrix::{dot, norm_sq};
use crate::model::StructuredModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactStepRule {
    /// Armijo backtracking starting from the previous accepted step.
    Backtracking,
    /// Barzilai-Borwein initial step, then Armijo backtracking.
    BarzilaiBorwein,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExactMleConfig {
    pub step_rule: ExactStepRule,
    pub grad_tol: f64,
    pub max_iters: usize,
}

impl Default for ExactMleConfig {
    fn default() -> Self {
        ExactMleConfig {
            step_rule: ExactStepRule::BarzilaiBorwein,
            grad_tol: 1e-8,
            max_iters: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactMleResult {
    pub theta: Vec<f64>,
    /// `Σ_m log p(y_m; θ) - (λ/2)‖θ‖²` at `theta`.
    pub objective: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Total log-likelihood, model feature expectations `Σ_m E_θ[φ_m]` and empirical
/// expectations `Σ_m φ_m(y_m)`. One exact inference per feature group.
pub fn likelihood_terms(data: &Dataset, theta: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if theta.len() != data.num_params() {
        return Err(Error::structure("parameter vector length mismatch"));
    }
    let empirical = data.empirical_stats();
    let per_group: Vec<(f64, Vec<f64>)> = data
        .groups()
        .par_iter()
        .map(|g| {
            let model = StructuredModel::new(data.topology().clone(), g.features.clone())?;
            let r = exact_partition(&model, theta)?;
            let count = g.members.len() as f64;
            let mut stats = vec![0.0; theta.len()];
            g.features.accumulate_stats(&r.marginals, count, &mut stats);
            Ok((count * r.log_z, stats))
        })
        .collect::<Result<_>>()?;
    let mut log_z_total = 0.0;
    let mut expected = vec![0.0; theta.len()];
    for (lz, s) in per_group {
        log_z_total += lz;
        for (e, x) in expected.iter_mut().zip(s) {
            *e += x;
        }
    }
    Ok((dot(theta, &empirical) - log_z_total, expected, empirical))
}

/// Unregularised total log-likelihood `Σ_m log p(y_m; θ)`.
pub fn log_likelihood(data: &Dataset, theta: &[f64]) -> Result<f64> {
    Ok(likelihood_terms(data, theta)?.0)
}

/// Regularised objective and its gradient `Σ_m (φ_m(y_m) - E_θ[φ_m]) - λθ`.
pub fn regularized_objective(
    data: &Dataset,
    theta: &[f64],
    lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    check_lambda(lambda)?;
    let (ll, expected, empirical) = likelihood_terms(data, theta)?;
    let grad = empirical
        .iter()
        .zip(&expected)
        .zip(theta)
        .map(|((e, m), t)| e - m - lambda * t)
        .collect();
    Ok((ll - 0.5 * lambda * norm_sq(theta), grad))
}

const ARMIJO: f64 = 1e-4;

/// Maximise the regularised log-likelihood; stops when `‖∇‖ <= grad_tol`.
pub fn exact_mle(
    data: &Dataset,
    lambda: f64,
    theta0: &[f64],
    config: &ExactMleConfig,
) -> Result<ExactMleResult> {
    check_lambda(lambda)?;
    if data.is_empty() {
        return Err(Error::InvalidParameter(
            "dataset has no samples".to_string(),
        ));
    }
    let mut theta = theta0.to_vec();
    let (mut value, mut grad) = regularized_objective(data, &theta, lambda)?;
    // adapted by backtracking from here on
    let mut step = 1.0 / (data.len() as f64 + lambda);
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    for it in 0..config.max_iters {
        let gnorm = norm_sq(&grad).sqrt();
        if gnorm <= config.grad_tol {
            return Ok(ExactMleResult {
                theta,
                objective: value,
                grad_norm: gnorm,
                iterations: it,
                converged: true,
            });
        }
        if config.step_rule == ExactStepRule::BarzilaiBorwein {
            if let Some((pt, pg)) = &prev {
                let s: Vec<f64> = theta.iter().zip(pt).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = grad.iter().zip(pg).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy < 0.0 {
                    step = -norm_sq(&s) / sy;
                }
            }
        }
        let gsq = gnorm * gnorm;
        let noise = 1e-13 * value.abs().max(1.0);
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t + step * g).collect();
            let (v, g) = regularized_objective(data, &trial, lambda)?;
            let sufficient = v >= value + ARMIJO * step * gsq;
            // below round-off in the objective, accept steps that do not overshoot the
            // maximiser along the ray
            let tiny = ARMIJO * step * gsq < noise && dot(&g, &grad) >= 0.0;
            if sufficient || tiny {
                accepted = Some((trial, v, g));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, v, g)) = accepted else {
            return Ok(ExactMleResult {
                theta,
                objective: value,
                grad_norm: gnorm,
                iterations: it,
                converged: false,
            });
        };
        prev = Some((
            std::mem::replace(&mut theta, trial),
            std::mem::replace(&mut grad, g),
        ));
        value = v;
        if config.step_rule == ExactStepRule::Backtracking {
            step *= 2.0;
        }
    }
    let gnorm = norm_sq(&grad).sqrt();
    Ok(ExactMleResult {
        theta,
        objective: value,
        grad_norm: gnorm,
        iterations: config.max_iters,
        converged: gnorm <= config.grad_tol,
    })
}
