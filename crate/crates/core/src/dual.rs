//! The dual learning objective.
//!
//! With residual `r(τ) = Σ_m G_mᵀ (y_m - τ_m)` the optimal parameters are `θ*(τ) = r / λ`
//! and the objective minimised over the polytopes is
//! `L(τ) = ‖r‖² / (2λ) - Σ_m H_ρ(τ_m)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::entropy;
use crate::error::{Error, Result};
use crate::marginals::Pseudomarginals;
use crate::matrix::{dot, norm_sq};
use crate::model::Reweighting;

/// Default number of incremental residual updates between full recomputations.
pub const DEFAULT_REFRESH_INTERVAL: usize = 1000;

/// Parameters with their regularisation weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub theta: Vec<f64>,
    pub lambda: f64,
}

impl ParameterVector {
    pub fn new(theta: Vec<f64>, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(ParameterVector { theta, lambda })
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.theta)
    }
}

pub fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "regulariser λ = {lambda} must be positive"
        )));
    }
    Ok(())
}

fn check_taus(data: &Dataset, taus: &[Pseudomarginals]) -> Result<()> {
    if taus.len() != data.len() {
        return Err(Error::structure(format!(
            "{} pseudomarginal vectors for {} samples",
            taus.len(),
            data.len()
        )));
    }
    let n = data.topology().num_coords();
    if let Some(m) = taus.iter().position(|t| t.len() != n) {
        return Err(Error::structure(format!(
            "sample {m} pseudomarginals have {} coordinates, model has {n}",
            taus[m].len()
        )));
    }
    Ok(())
}

/// `Σ_m G_mᵀ (y_m - τ_m)`.
pub fn residual(data: &Dataset, taus: &[Pseudomarginals]) -> Result<Vec<f64>> {
    check_taus(data, taus)?;
    let diffs: Vec<Vec<f64>> = data
        .samples()
        .iter()
        .zip(taus)
        .map(|(s, t)| {
            s.observed()
                .iter()
                .zip(t.values())
                .map(|(y, x)| y - x)
                .collect()
        })
        .collect();
    Ok(data.grouped_stats(|m| &diffs[m]))
}

/// Moment-matching parameters `θ*(τ) = λ⁻¹ Σ_m G_mᵀ (y_m - τ_m)`.
pub fn theta_star(
    data: &Dataset,
    taus: &[Pseudomarginals],
    lambda: f64,
) -> Result<ParameterVector> {
    check_lambda(lambda)?;
    let r = residual(data, taus)?;
    Ok(ParameterVector {
        theta: r.iter().map(|x| x / lambda).collect(),
        lambda,
    })
}

/// Reweighted entropies of every sample's pseudomarginals.
pub fn entropies(data: &Dataset, taus: &[Pseudomarginals], rho: &Reweighting) -> Result<Vec<f64>> {
    check_taus(data, taus)?;
    let topology = data.topology();
    taus.par_iter()
        .map(|t| entropy::entropy(topology, t.values(), rho))
        .collect()
}

/// `L(τ)`.
pub fn dual_objective(
    data: &Dataset,
    taus: &[Pseudomarginals],
    lambda: f64,
    rho: &Reweighting,
) -> Result<f64> {
    check_lambda(lambda)?;
    let r = residual(data, taus)?;
    let h: f64 = entropies(data, taus, rho)?.iter().sum();
    Ok(norm_sq(&r) / (2.0 * lambda) - h)
}

/// The saddle-point function `f(τ, θ) = ⟨θ, r(τ)⟩ - (λ/2)‖θ‖² - Σ_m H_ρ(τ_m)`.
///
/// Maximising over `θ` gives [`dual_objective`]; minimising over `τ` gives the
/// regularised approximate log-likelihood at `θ`.
pub fn saddle_value(
    data: &Dataset,
    taus: &[Pseudomarginals],
    theta: &[f64],
    lambda: f64,
    rho: &Reweighting,
) -> Result<f64> {
    check_lambda(lambda)?;
    if theta.len() != data.num_params() {
        return Err(Error::structure("parameter vector length mismatch"));
    }
    let r = residual(data, taus)?;
    let h: f64 = entropies(data, taus, rho)?.iter().sum();
    Ok(dot(theta, &r) - 0.5 * lambda * norm_sq(theta) - h)
}

/// Per-coordinate scores `G_m θ` for every feature group, indexed by group.
pub(crate) fn group_scores(data: &Dataset, theta: &[f64]) -> Vec<Vec<f64>> {
    data.groups()
        .par_iter()
        .map(|g| g.features.coord_scores(theta))
        .collect()
}

/// Group index of every sample.
pub(crate) fn group_of(data: &Dataset) -> Vec<usize> {
    let mut out = vec![0; data.len()];
    for (gi, g) in data.groups().iter().enumerate() {
        for &m in &g.members {
            out[m] = gi;
        }
    }
    out
}

/// Gradient of `L` in one sample's coordinates: `-G_m θ* - ∇H_ρ(τ_m)`.
pub(crate) fn sample_gradient(
    data: &Dataset,
    scores: &[f64],
    tau: &Pseudomarginals,
    rho: &Reweighting,
) -> Result<Vec<f64>> {
    let gh = entropy::entropy_gradient(data.topology(), tau.values(), rho)?;
    Ok(scores.iter().zip(&gh).map(|(s, h)| -s - h).collect())
}

/// Gradient of `L` with respect to every sample's pseudomarginals.
pub fn grad_dual(
    data: &Dataset,
    taus: &[Pseudomarginals],
    lambda: f64,
    rho: &Reweighting,
    cache: &GramCache,
) -> Result<Vec<Vec<f64>>> {
    check_lambda(lambda)?;
    check_taus(data, taus)?;
    let theta = cache.theta(lambda);
    let scores = group_scores(data, &theta);
    let group = group_of(data);
    taus.par_iter()
        .enumerate()
        .map(|(m, t)| sample_gradient(data, &scores[group[m]], t, rho))
        .collect()
}

/// Running residual `r = Σ_m G_mᵀ (y_m - τ_m)`, updated incrementally as single samples
/// move and recomputed from scratch every `refresh_interval` updates.
#[derive(Clone, Debug, PartialEq)]
pub struct GramCache {
    residual: Vec<f64>,
    updates: usize,
    refresh_interval: usize,
    last_drift: f64,
}

impl GramCache {
    pub fn new(data: &Dataset, taus: &[Pseudomarginals]) -> Result<Self> {
        Ok(GramCache {
            residual: residual(data, taus)?,
            updates: 0,
            refresh_interval: DEFAULT_REFRESH_INTERVAL,
            last_drift: 0.0,
        })
    }

    pub fn with_refresh_interval(mut self, interval: usize) -> Self {
        self.refresh_interval = interval.max(1);
        self
    }

    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    pub fn theta(&self, lambda: f64) -> Vec<f64> {
        self.residual.iter().map(|x| x / lambda).collect()
    }

    /// Incremental updates applied since construction.
    pub fn updates(&self) -> usize {
        self.updates
    }

    /// Largest absolute difference found by the most recent refresh.
    pub fn last_drift(&self) -> f64 {
        self.last_drift
    }

    /// Max-norm distance between the cached residual and a full recomputation.
    pub fn drift(&self, data: &Dataset, taus: &[Pseudomarginals]) -> Result<f64> {
        let fresh = residual(data, taus)?;
        Ok(fresh
            .iter()
            .zip(&self.residual)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Replace the cached residual by a full recomputation; returns the drift found.
    pub fn refresh(&mut self, data: &Dataset, taus: &[Pseudomarginals]) -> Result<f64> {
        let fresh = residual(data, taus)?;
        self.last_drift = fresh
            .iter()
            .zip(&self.residual)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        self.residual = fresh;
        Ok(self.last_drift)
    }

    /// Subtract a precomputed `Gᵀ Δτ` (used by batch steps that move all samples).
    pub(crate) fn subtract(&mut self, delta_stats: &[f64], scale: f64) {
        for (r, d) in self.residual.iter_mut().zip(delta_stats) {
            *r -= scale * d;
        }
        self.updates += 1;
    }

    pub(crate) fn due_for_refresh(&self) -> bool {
        self.updates > 0 && self.updates % self.refresh_interval == 0
    }
}

/// Account for sample `m` moving from `old` to its current value in `taus`:
/// `r -= G_mᵀ (τ_m - old)`. Refreshes from scratch every `refresh_interval` calls.
pub fn update_gram_residual(
    cache: &mut GramCache,
    data: &Dataset,
    taus: &[Pseudomarginals],
    m: usize,
    old: &[f64],
) -> Result<()> {
    let sample = data
        .samples()
        .get(m)
        .ok_or_else(|| Error::structure(format!("sample index {m} out of range")))?;
    let new = taus
        .get(m)
        .ok_or_else(|| Error::structure(format!("no pseudomarginals for sample {m}")))?;
    if old.len() != new.len() {
        return Err(Error::structure(
            "old pseudomarginals have the wrong length",
        ));
    }
    let delta: Vec<f64> = new.values().iter().zip(old).map(|(a, b)| a - b).collect();
    sample
        .model()
        .features()
        .accumulate_stats(&delta, -1.0, &mut cache.residual);
    cache.updates += 1;
    if cache.due_for_refresh() {
        cache.refresh(data, taus)?;
    }
    Ok(())
}

/// Quadratic part of the objective along `τ + η d`, from scalars computed once per step:
/// `‖r - η q‖² / (2λ) = (‖r‖² + 2ηb + η²a) / (2λ)` with `q = Σ G_mᵀ d_m`, `a = ‖q‖²`,
/// `b = -rᵀq`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentQuadratic {
    pub r_sq: f64,
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
}

impl SegmentQuadratic {
    pub fn new(residual: &[f64], q: &[f64], lambda: f64) -> Self {
        SegmentQuadratic {
            r_sq: norm_sq(residual),
            a: norm_sq(q),
            b: -dot(residual, q),
            lambda,
        }
    }

    pub fn value(&self, eta: f64) -> f64 {
        (self.r_sq + 2.0 * eta * self.b + eta * eta * self.a) / (2.0 * self.lambda)
    }

    pub fn slope(&self, eta: f64) -> f64 {
        (self.b + eta * self.a) / self.lambda
    }

    pub fn curvature(&self) -> f64 {
        self.a / self.lambda
    }
}

/// `h(η) = L(τ + η d)` evaluated from the precomputed scalars: only the entropies are
/// evaluated at the trial point.
pub fn segment_objective(
    data: &Dataset,
    taus: &[Pseudomarginals],
    dirs: &[Vec<f64>],
    quad: &SegmentQuadratic,
    rho: &Reweighting,
    eta: f64,
) -> Result<f64> {
    let topology = data.topology();
    let h: f64 = taus
        .par_iter()
        .zip(dirs)
        .map(|(t, d)| entropy::entropy_along(topology, t.values(), d, eta, rho).map(|x| x.value))
        .collect::<Result<Vec<_>>>()?
        .iter()
        .sum();
    Ok(quad.value(eta) - h)
}

/// `q = Σ_m G_mᵀ d_m` for per-sample directions.
pub fn direction_stats(data: &Dataset, dirs: &[Vec<f64>]) -> Vec<f64> {
    data.grouped_stats(|m| &dirs[m])
}
