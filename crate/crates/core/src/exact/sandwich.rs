//! Bracketing the exact regularised likelihood between two approximate ones.
//!
//! On bipartite matchings the Bethe free energy (ρ = 1) gives `log Z_B ≤ log Z` and the
//! reweighted one with ρ = ½ gives `log Z ≤ log Z_RW`, so for every θ
//! `ℓ_RW(θ) ≤ ℓ(θ) ≤ ℓ_B(θ)`, and the same holds for the three maxima. All values here
//! are per sample.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::dual::check_lambda;
use crate::error::{Error, Result};
use crate::exact::mle::{exact_mle, log_likelihood, ExactMleConfig};
use crate::fw::{
    fw_infer, learn, ExactOracle, FWConfig, LearnOptions, LearnResult, Mode, StepRule,
};
use crate::matrix::{dot, norm_sq};
use crate::model::{ModelKind, Reweighting, StructuredModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SandwichConfig {
    /// Frank-Wolfe settings for learning both approximations.
    pub learn: FWConfig,
    /// Frank-Wolfe settings for the approximate partition functions at fixed θ.
    pub infer: FWConfig,
    pub mle: ExactMleConfig,
    /// Added to the certified gaps in every check.
    pub slack: f64,
}

impl Default for SandwichConfig {
    fn default() -> Self {
        let fw = FWConfig {
            step_rule: StepRule::LineSearch,
            gap_tol: 1e-7,
            max_iters: 20_000,
            ..FWConfig::default()
        };
        SandwichConfig {
            // batch steps stall near the boundary at M = 100; block steps do not
            learn: FWConfig {
                mode: Mode::Block,
                max_iters: 300_000,
                ..fw.clone()
            },
            infer: FWConfig {
                gap_tol: 1e-9,
                ..fw
            },
            mle: ExactMleConfig::default(),
            slack: 1e-6,
        }
    }
}

/// A per-sample value whose true counterpart lies in `[value - gap, value]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub gap: f64,
}

impl Estimate {
    fn exact(value: f64) -> Self {
        Estimate { value, gap: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossTerms {
    pub bethe_at_rw: Estimate,
    pub rw_at_bethe: Estimate,
    pub exact_at_bethe: f64,
    pub exact_at_rw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gaps {
    pub bethe_learn: f64,
    pub rw_learn: f64,
    pub bethe_at_rw: f64,
    pub rw_at_bethe: f64,
    pub exact_grad_norm: f64,
}

/// `lhs ≤ rhs + slack`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    /// `max_θ ℓ_RW(θ)`.
    pub lower: Estimate,
    /// `max_θ ℓ(θ)`.
    pub exact: f64,
    /// `max_θ ℓ_B(θ)`.
    pub upper: Estimate,
    pub cross_terms: CrossTerms,
    pub gaps: Gaps,
    /// Exact likelihood lost by using each approximate estimator instead of the exact one.
    pub bethe_loss: f64,
    pub rw_loss: f64,
    pub checks: Vec<Check>,
    pub all_hold: bool,
}

/// Per-sample approximate regularised likelihood at θ, from one inference per group.
fn approximate_likelihood(
    data: &Dataset,
    theta: &[f64],
    lambda: f64,
    rho: &Reweighting,
    config: &FWConfig,
) -> Result<Estimate> {
    let mut log_z = 0.0;
    let mut gap = 0.0;
    for g in data.groups() {
        let model = StructuredModel::new(data.topology().clone(), g.features.clone())?;
        let r = fw_infer(&model, theta, rho, config, &ExactOracle)?;
        let count = g.members.len() as f64;
        log_z += count * r.log_z;
        gap += count * r.gap;
    }
    let m = data.len() as f64;
    let value = dot(theta, &data.empirical_stats()) - log_z - 0.5 * lambda * norm_sq(theta);
    Ok(Estimate {
        value: value / m,
        gap: gap / m,
    })
}

fn learned(result: &LearnResult, m: f64) -> Estimate {
    Estimate {
        value: result.objective / m,
        gap: result.gap / m,
    }
}

/// Learn the Bethe, reweighted and exact estimators on `data` and check every inequality
/// of the sandwich.
pub fn sandwich_bounds(
    data: &Dataset,
    lambda: f64,
    config: &SandwichConfig,
) -> Result<SandwichReport> {
    check_lambda(lambda)?;
    if data.topology().kind() != ModelKind::BipartiteMatching {
        return Err(Error::InvalidParameter(
            "likelihood bounds are only guaranteed for bipartite matchings".to_string(),
        ));
    }
    let topology = data.topology();
    let bethe_rho = Reweighting::uniform(topology, 1.0)?;
    let rw_rho = Reweighting::uniform(topology, 0.5)?;
    let bethe = learn(
        data,
        &bethe_rho,
        lambda,
        &config.learn,
        &ExactOracle,
        LearnOptions::default(),
    )?;
    let rw = learn(
        data,
        &rw_rho,
        lambda,
        &config.learn,
        &ExactOracle,
        LearnOptions::default(),
    )?;
    sandwich_from_estimates(data, lambda, &bethe, &rw, config)
}

/// As [`sandwich_bounds`] with the two approximate estimators already learned.
pub fn sandwich_from_estimates(
    data: &Dataset,
    lambda: f64,
    bethe: &LearnResult,
    rw: &LearnResult,
    config: &SandwichConfig,
) -> Result<SandwichReport> {
    check_lambda(lambda)?;
    let topology = data.topology();
    let m = data.len() as f64;
    let bethe_rho = Reweighting::uniform(topology, 1.0)?;
    let rw_rho = Reweighting::uniform(topology, 0.5)?;

    let upper = learned(bethe, m);
    let lower = learned(rw, m);
    let bethe_at_rw =
        approximate_likelihood(data, &rw.theta.theta, lambda, &bethe_rho, &config.infer)?;
    let rw_at_bethe =
        approximate_likelihood(data, &bethe.theta.theta, lambda, &rw_rho, &config.infer)?;

    let exact = exact_mle(data, lambda, &bethe.theta.theta, &config.mle)?;
    let penalised = |theta: &[f64]| -> Result<f64> {
        Ok((log_likelihood(data, theta)? - 0.5 * lambda * norm_sq(theta)) / m)
    };
    let exact_at_bethe = penalised(&bethe.theta.theta)?;
    let exact_at_rw = penalised(&rw.theta.theta)?;
    let exact_opt = Estimate::exact(exact.objective / m);

    let mut checks = Vec::new();
    let mut check = |name: &str, lhs: Estimate, rhs: Estimate| {
        let slack = lhs.gap + rhs.gap + config.slack;
        checks.push(Check {
            name: name.to_string(),
            lhs: lhs.value,
            rhs: rhs.value,
            slack,
            holds: lhs.value <= rhs.value + slack,
        });
    };
    check("rw_opt <= exact_opt", lower, exact_opt);
    check("exact_opt <= bethe_opt", exact_opt, upper);
    check(
        "rw(theta_bethe) <= exact(theta_bethe)",
        rw_at_bethe,
        Estimate::exact(exact_at_bethe),
    );
    check(
        "exact(theta_bethe) <= bethe(theta_bethe)",
        Estimate::exact(exact_at_bethe),
        upper,
    );
    check(
        "rw(theta_rw) <= exact(theta_rw)",
        lower,
        Estimate::exact(exact_at_rw),
    );
    check(
        "exact(theta_rw) <= bethe(theta_rw)",
        Estimate::exact(exact_at_rw),
        bethe_at_rw,
    );
    check(
        "exact(theta_bethe) <= exact_opt",
        Estimate::exact(exact_at_bethe),
        exact_opt,
    );
    check(
        "exact(theta_rw) <= exact_opt",
        Estimate::exact(exact_at_rw),
        exact_opt,
    );
    let all_hold = checks.iter().all(|c| c.holds);

    Ok(SandwichReport {
        lower,
        exact: exact_opt.value,
        upper,
        cross_terms: CrossTerms {
            bethe_at_rw,
            rw_at_bethe,
            exact_at_bethe,
            exact_at_rw,
        },
        gaps: Gaps {
            bethe_learn: upper.gap,
            rw_learn: lower.gap,
            bethe_at_rw: bethe_at_rw.gap,
            rw_at_bethe: rw_at_bethe.gap,
            exact_grad_norm: exact.grad_norm,
        },
        bethe_loss: exact_opt.value - exact_at_bethe,
        rw_loss: exact_opt.value - exact_at_rw,
        checks,
        all_hold,
    })
}
