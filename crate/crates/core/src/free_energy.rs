use serde::{Deserialize, Serialize};

use crate::entropy;
use crate::error::{Error, Result};
use crate::marginals::Pseudomarginals;
use crate::matrix::dot;
use crate::model::{Reweighting, StructuredModel};

/// Reweighted free energy split into its energy and entropy parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyValue {
    pub energy: f64,
    pub entropy: f64,
    /// `energy - entropy`.
    pub total: f64,
}

impl FreeEnergyValue {
    pub fn new(energy: f64, entropy: f64) -> Self {
        FreeEnergyValue {
            energy,
            entropy,
            total: energy - entropy,
        }
    }
}

/// Negative expected score `-⟨τ, Gθ⟩`.
pub fn energy(tau: &Pseudomarginals, model: &StructuredModel, theta: &[f64]) -> Result<f64> {
    let scores = model.scores(theta)?;
    if tau.len() != scores.len() {
        return Err(Error::structure(format!(
            "pseudomarginals have {} coordinates, model has {}",
            tau.len(),
            scores.len()
        )));
    }
    Ok(-dot(tau.values(), &scores))
}

pub fn free_energy(
    tau: &Pseudomarginals,
    model: &StructuredModel,
    theta: &[f64],
    rho: &Reweighting,
) -> Result<FreeEnergyValue> {
    let e = energy(tau, model, theta)?;
    let h = entropy::entropy(model.topology(), tau.values(), rho)?;
    Ok(FreeEnergyValue::new(e, h))
}

/// Gradient of the free energy in τ: `-Gθ - ∇H_ρ(τ)`.
pub fn free_energy_gradient(
    tau: &Pseudomarginals,
    model: &StructuredModel,
    theta: &[f64],
    rho: &Reweighting,
) -> Result<Vec<f64>> {
    let scores = model.scores(theta)?;
    let grad_h = entropy::entropy_gradient(model.topology(), tau.values(), rho)?;
    Ok(scores.iter().zip(&grad_h).map(|(s, h)| -s - h).collect())
}
