//! Frank-Wolfe and block-coordinate Frank-Wolfe on the dual objective, and Frank-Wolfe
//! marginal inference for fixed parameters.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::dual::{self, GramCache, ParameterVector, SegmentQuadratic};
use crate::entropy::{self, Directional};
use crate::error::{Error, Result};
use crate::map::{self, VertexSolution};
use crate::marginals::{
    init_pseudomarginals, validate_local_polytope, Pseudomarginals, POLYTOPE_TOL,
};
use crate::matrix::{dot, norm_sq};
use crate::model::{Reweighting, StructuredModel, Topology};

/// Line search never steps closer than this to the far vertex, keeping iterates interior.
pub const BOUNDARY_EPS: f64 = 1e-12;
/// Polytope membership of the iterates is re-validated this often.
pub const VALIDATE_EVERY: usize = 100;

const SLOPE_TOL: f64 = 1e-10;
const BRACKET_TOL: f64 = 1e-12;
const MAX_SEARCH_STEPS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Batch,
    Block,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `2/(2+t)` in batch mode, `2M/(2M+t)` in block mode.
    Decay,
    LineSearch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FWConfig {
    pub mode: Mode,
    pub step_rule: StepRule,
    /// Maximum number of updates (block updates in block mode).
    pub max_iters: usize,
    pub gap_tol: f64,
    /// Additive suboptimality δ of the linear oracle; 0 for exact solvers.
    pub subproblem_tol: f64,
    /// Maintain the running weighted average of the iterates.
    pub averaging: bool,
    pub rng_seed: u64,
}

impl Default for FWConfig {
    fn default() -> Self {
        FWConfig {
            mode: Mode::Batch,
            step_rule: StepRule::LineSearch,
            max_iters: 10_000,
            gap_tol: 1e-6,
            subproblem_tol: 0.0,
            averaging: false,
            rng_seed: 0,
        }
    }
}

impl FWConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gap_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gap_tol = {} must be positive",
                self.gap_tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter(
                "max_iters must be at least 1".to_string(),
            ));
        }
        if !(self.subproblem_tol >= 0.0) {
            return Err(Error::InvalidParameter(
                "subproblem_tol must be nonnegative".to_string(),
            ));
        }
        Ok(())
    }
}

/// Linear minimisation oracle over a model's structure polytope.
pub trait LinearOracle: Sync {
    fn minimize(&self, topology: &Topology, g: &[f64]) -> Result<VertexSolution>;

    /// Additive suboptimality of returned vertices.
    fn tolerance(&self) -> f64 {
        0.0
    }
}

/// The exact solvers of [`crate::map`].
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactOracle;

impl LinearOracle for ExactOracle {
    fn minimize(&self, topology: &Topology, g: &[f64]) -> Result<VertexSolution> {
        map::linear_minimize(topology, g)
    }
}

pub fn decay_step(t: usize) -> f64 {
    2.0 / (2.0 + t as f64)
}

pub fn block_decay_step(t: usize, num_samples: usize) -> f64 {
    let m2 = 2.0 * num_samples as f64;
    m2 / (m2 + t as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub objective: f64,
    pub gap: f64,
    /// Step taken to reach this iterate (0 at the start).
    pub gamma: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FWTrace {
    pub rows: Vec<TraceRow>,
    /// Oracle suboptimality; gaps may understate the true gap when positive.
    pub subproblem_tol: f64,
}

impl FWTrace {
    pub const CSV_HEADER: &'static str = "t,objective,gap,gamma,seconds";

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn is_inexact(&self) -> bool {
        self.subproblem_tol > 0.0
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.t, r.objective, r.gap, r.gamma, r.seconds
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(Self::CSV_HEADER) {
            return Err(Error::structure("trace CSV header missing"));
        }
        let bad = |l: &str| Error::structure(format!("malformed trace row: {l}"));
        let rows = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                if f.len() != 5 {
                    return Err(bad(l));
                }
                let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(l));
                Ok(TraceRow {
                    t: f[0].trim().parse().map_err(|_| bad(l))?,
                    objective: num(f[1])?,
                    gap: num(f[2])?,
                    gamma: num(f[3])?,
                    seconds: num(f[4])?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(FWTrace {
            rows,
            subproblem_tol: 0.0,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Snapshot handed to observers at every recorded iterate.
pub struct Progress<'a> {
    pub t: usize,
    pub taus: &'a [Pseudomarginals],
    pub averaged: Option<&'a [Pseudomarginals]>,
    pub lambda: f64,
}

#[derive(Clone, Debug)]
pub struct LearnResult {
    /// `θ*(τ)` at the final iterate.
    pub theta: ParameterVector,
    pub taus: Vec<Pseudomarginals>,
    /// Weighted average of the iterates, when enabled.
    pub averaged: Option<Vec<Pseudomarginals>>,
    pub objective: f64,
    /// Total duality gap at the final iterate.
    pub gap: f64,
    pub sample_gaps: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: FWTrace,
}

/// `⟨τ - s, ∇⟩`.
pub fn duality_gap(tau: &[f64], s: &[f64], grad: &[f64]) -> f64 {
    tau.iter()
        .zip(s)
        .zip(grad)
        .map(|((t, s), g)| (t - s) * g)
        .sum()
}

/// Minimise a convex function of `η` on `[0, 1 - BOUNDARY_EPS]` given its value and first
/// two derivatives. Safeguarded Newton on `h'` inside a bisection bracket; stops when
/// `|h'| < 1e-10` or the bracket is shorter than `1e-12`. Evaluation errors are treated as
/// lying beyond the minimiser (the objective blows up towards the boundary).
pub fn minimize_convex_segment(eval: &dyn Fn(f64) -> Result<Directional>) -> Result<f64> {
    let cap = 1.0 - BOUNDARY_EPS;
    let d0 = eval(0.0)?;
    if !d0.slope.is_finite() {
        return Err(Error::domain(
            "line search slope is not finite at the current iterate",
        ));
    }
    if d0.slope >= 0.0 {
        return Ok(0.0);
    }
    if let Ok(d) = eval(cap) {
        if d.slope <= 0.0 {
            return Ok(cap);
        }
    }
    let (mut lo, mut hi) = (0.0, cap);
    let mut eta = if d0.curvature > 0.0 {
        (-d0.slope / d0.curvature).min(0.5 * cap)
    } else {
        0.5 * cap
    };
    for _ in 0..MAX_SEARCH_STEPS {
        let d = match eval(eta) {
            Ok(d) if d.slope.is_finite() => d,
            _ => {
                hi = eta;
                eta = 0.5 * (lo + hi);
                continue;
            }
        };
        if d.slope.abs() < SLOPE_TOL {
            break;
        }
        if d.slope > 0.0 {
            hi = eta;
        } else {
            lo = eta;
        }
        if hi - lo < BRACKET_TOL {
            break;
        }
        let newton = eta - d.slope / d.curvature;
        eta = if d.curvature > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(eta)
}

/// Keep the decay step when it does better (guards against round-off in the search).
fn no_worse_than(eval: &dyn Fn(f64) -> Result<Directional>, eta: f64, fallback: f64) -> f64 {
    match (eval(eta), eval(fallback)) {
        (Ok(a), Ok(b)) if b.value < a.value => fallback,
        _ => eta,
    }
}

/// Optimal step of the batch update `τ_m ← τ_m + η (s_m - τ_m)` for all samples at once.
///
/// The quadratic term is evaluated from `a = ‖q‖²` and `b = -rᵀq` (`q = Σ G_mᵀ d_m`), so
/// each trial step only evaluates entropies. `fallback` is the decay step, used if it
/// turns out better.
pub fn line_search(
    data: &Dataset,
    taus: &[Pseudomarginals],
    dirs: &[Vec<f64>],
    cache: &GramCache,
    rho: &Reweighting,
    lambda: f64,
    fallback: f64,
) -> Result<f64> {
    let q = dual::direction_stats(data, dirs);
    let quad = SegmentQuadratic::new(cache.residual(), &q, lambda);
    let topology = data.topology();
    let eval = |eta: f64| -> Result<Directional> {
        let parts = taus
            .par_iter()
            .zip(dirs)
            .map(|(t, d)| entropy::entropy_along(topology, t.values(), d, eta, rho))
            .collect::<Result<Vec<_>>>()?;
        let mut out = Directional {
            value: quad.value(eta),
            slope: quad.slope(eta),
            curvature: quad.curvature(),
        };
        for p in parts {
            out.value -= p.value;
            out.slope -= p.slope;
            out.curvature -= p.curvature;
        }
        Ok(out)
    };
    let eta = minimize_convex_segment(&eval)?;
    Ok(no_worse_than(&eval, eta, fallback))
}

struct Pass {
    vertices: Vec<Vec<f64>>,
    gaps: Vec<f64>,
    entropies: Vec<f64>,
}

fn full_pass(
    data: &Dataset,
    taus: &[Pseudomarginals],
    theta: &[f64],
    rho: &Reweighting,
    oracle: &dyn LinearOracle,
) -> Result<Pass> {
    let scores = dual::group_scores(data, theta);
    let group = dual::group_of(data);
    let topology = data.topology();
    let per: Vec<(Vec<f64>, f64, f64)> = taus
        .par_iter()
        .enumerate()
        .map(|(m, t)| {
            let run = || -> Result<(Vec<f64>, f64, f64)> {
                let h = entropy::entropy(topology, t.values(), rho)?;
                let g = dual::sample_gradient(data, &scores[group[m]], t, rho)?;
                let s = oracle.minimize(topology, &g)?;
                let gap = duality_gap(t.values(), &s.coords, &g);
                Ok((s.coords, gap, h))
            };
            run().map_err(|e| e.in_sample(m))
        })
        .collect::<Result<_>>()?;
    let mut pass = Pass {
        vertices: Vec::with_capacity(per.len()),
        gaps: Vec::with_capacity(per.len()),
        entropies: Vec::with_capacity(per.len()),
    };
    for (s, g, h) in per {
        pass.vertices.push(s);
        pass.gaps.push(g);
        pass.entropies.push(h);
    }
    Ok(pass)
}

fn check_iterates(taus: &[Pseudomarginals], topology: &Topology, t: usize) -> Result<()> {
    for (m, tau) in taus.iter().enumerate() {
        if !validate_local_polytope(tau, topology, POLYTOPE_TOL)? {
            return Err(Error::InvariantViolation(format!(
                "sample {m} left the polytope at iteration {t}"
            )));
        }
    }
    Ok(())
}

fn average_into(avg: &mut [Pseudomarginals], taus: &[Pseudomarginals], t: usize) {
    let w = 2.0 / (t as f64 + 2.0);
    for (a, x) in avg.iter_mut().zip(taus) {
        a.step_towards(x.values(), w);
    }
}

fn starting_point(
    data: &Dataset,
    init: Option<Vec<Pseudomarginals>>,
) -> Result<Vec<Pseudomarginals>> {
    let topology = data.topology();
    let taus = match init {
        Some(t) => t,
        None => vec![init_pseudomarginals(topology)?; data.len()],
    };
    if taus.len() != data.len() {
        return Err(Error::structure(
            "initial pseudomarginals do not match the sample count",
        ));
    }
    check_iterates(&taus, topology, 0)?;
    Ok(taus)
}

/// Everything [`learn`] needs besides the data.
pub struct LearnOptions<'a> {
    pub init: Option<Vec<Pseudomarginals>>,
    pub observer: Option<&'a mut dyn FnMut(&Progress)>,
}

impl Default for LearnOptions<'_> {
    fn default() -> Self {
        LearnOptions {
            init: None,
            observer: None,
        }
    }
}

/// Batch Frank-Wolfe learning.
pub fn fw_learn(
    data: &Dataset,
    rho: &Reweighting,
    lambda: f64,
    config: &FWConfig,
    oracle: &dyn LinearOracle,
) -> Result<LearnResult> {
    let config = FWConfig {
        mode: Mode::Batch,
        ..config.clone()
    };
    learn(data, rho, lambda, &config, oracle, LearnOptions::default())
}

/// Block-coordinate Frank-Wolfe learning.
pub fn bcfw_learn(
    data: &Dataset,
    rho: &Reweighting,
    lambda: f64,
    config: &FWConfig,
    oracle: &dyn LinearOracle,
) -> Result<LearnResult> {
    let config = FWConfig {
        mode: Mode::Block,
        ..config.clone()
    };
    learn(data, rho, lambda, &config, oracle, LearnOptions::default())
}

/// Learning in the mode selected by `config`.
pub fn learn(
    data: &Dataset,
    rho: &Reweighting,
    lambda: f64,
    config: &FWConfig,
    oracle: &dyn LinearOracle,
    options: LearnOptions,
) -> Result<LearnResult> {
    config.validate()?;
    dual::check_lambda(lambda)?;
    rho.check(data.topology())?;
    if data.is_empty() {
        return Err(Error::InvalidParameter(
            "dataset has no samples".to_string(),
        ));
    }
    let taus = starting_point(data, options.init)?;
    match config.mode {
        Mode::Batch => run_batch(data, rho, lambda, config, oracle, taus, options.observer),
        Mode::Block => run_block(data, rho, lambda, config, oracle, taus, options.observer),
    }
}

struct Finish {
    taus: Vec<Pseudomarginals>,
    averaged: Option<Vec<Pseudomarginals>>,
    objective: f64,
    sample_gaps: Vec<f64>,
    iterations: usize,
    converged: bool,
    trace: FWTrace,
}

fn finish(data: &Dataset, lambda: f64, f: Finish) -> Result<LearnResult> {
    let theta = dual::theta_star(data, &f.taus, lambda)?;
    Ok(LearnResult {
        theta,
        gap: f.sample_gaps.iter().sum(),
        taus: f.taus,
        averaged: f.averaged,
        objective: f.objective,
        sample_gaps: f.sample_gaps,
        iterations: f.iterations,
        converged: f.converged,
        trace: f.trace,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_batch(
    data: &Dataset,
    rho: &Reweighting,
    lambda: f64,
    config: &FWConfig,
    oracle: &dyn LinearOracle,
    mut taus: Vec<Pseudomarginals>,
    mut observer: Option<&mut dyn FnMut(&Progress)>,
) -> Result<LearnResult> {
    let start = Instant::now();
    let topology = data.topology();
    let mut cache = GramCache::new(data, &taus)?;
    let mut averaged = config.averaging.then(|| taus.clone());
    let mut trace = FWTrace {
        rows: Vec::new(),
        subproblem_tol: config.subproblem_tol.max(oracle.tolerance()),
    };
    let mut t = 0;
    let mut gamma = 0.0;
    loop {
        let theta = cache.theta(lambda);
        let pass = full_pass(data, &taus, &theta, rho, oracle)?;
        let gap: f64 = pass.gaps.iter().sum();
        let objective =
            norm_sq(cache.residual()) / (2.0 * lambda) - pass.entropies.iter().sum::<f64>();
        trace.rows.push(TraceRow {
            t,
            objective,
            gap,
            gamma,
            seconds: start.elapsed().as_secs_f64(),
        });
        if let Some(obs) = observer.as_mut() {
            obs(&Progress {
                t,
                taus: &taus,
                averaged: averaged.as_deref(),
                lambda,
            });
        }
        let converged = gap <= config.gap_tol;
        if converged || t >= config.max_iters {
            return finish(
                data,
                lambda,
                Finish {
                    taus,
                    averaged,
                    objective,
                    sample_gaps: pass.gaps,
                    iterations: t,
                    converged,
                    trace,
                },
            );
        }
        t += 1;
        let dirs: Vec<Vec<f64>> = pass
            .vertices
            .iter()
            .zip(&taus)
            .map(|(s, x)| s.iter().zip(x.values()).map(|(a, b)| a - b).collect())
            .collect();
        gamma = match config.step_rule {
            StepRule::Decay => decay_step(t),
            StepRule::LineSearch => {
                line_search(data, &taus, &dirs, &cache, rho, lambda, decay_step(t))?
            }
        };
        let q = dual::direction_stats(data, &dirs);
        for (x, s) in taus.iter_mut().zip(&pass.vertices) {
            x.step_towards(s, gamma);
        }
        cache.subtract(&q, gamma);
        if cache.due_for_refresh() {
            cache.refresh(data, &taus)?;
        }
        if let Some(avg) = averaged.as_mut() {
            average_into(avg, &taus, t);
        }
        if t % VALIDATE_EVERY == 0 {
            check_iterates(&taus, topology, t)?;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_block(
    data: &Dataset,
    rho: &Reweighting,
    lambda: f64,
    config: &FWConfig,
    oracle: &dyn LinearOracle,
    mut taus: Vec<Pseudomarginals>,
    mut observer: Option<&mut dyn FnMut(&Progress)>,
) -> Result<LearnResult> {
    let start = Instant::now();
    let topology = data.topology();
    let num = data.len();
    let group = dual::group_of(data);
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut cache = GramCache::new(data, &taus)?;
    let mut averaged = config.averaging.then(|| taus.clone());
    let mut trace = FWTrace {
        rows: Vec::new(),
        subproblem_tol: config.subproblem_tol.max(oracle.tolerance()),
    };
    let mut t = 0;
    let mut gamma = 0.0;
    loop {
        // epoch boundary: certify with the full gap
        let theta = cache.theta(lambda);
        let pass = full_pass(data, &taus, &theta, rho, oracle)?;
        let gap: f64 = pass.gaps.iter().sum();
        let objective =
            norm_sq(cache.residual()) / (2.0 * lambda) - pass.entropies.iter().sum::<f64>();
        trace.rows.push(TraceRow {
            t,
            objective,
            gap,
            gamma,
            seconds: start.elapsed().as_secs_f64(),
        });
        if let Some(obs) = observer.as_mut() {
            obs(&Progress {
                t,
                taus: &taus,
                averaged: averaged.as_deref(),
                lambda,
            });
        }
        let converged = gap <= config.gap_tol;
        if converged || t >= config.max_iters {
            return finish(
                data,
                lambda,
                Finish {
                    taus,
                    averaged,
                    objective,
                    sample_gaps: pass.gaps,
                    iterations: t,
                    converged,
                    trace,
                },
            );
        }
        for _ in 0..num {
            if t >= config.max_iters {
                break;
            }
            t += 1;
            let m = rng.gen_range(0..num);
            let theta = cache.theta(lambda);
            let scores = data.groups()[group[m]].features.coord_scores(&theta);
            let g =
                dual::sample_gradient(data, &scores, &taus[m], rho).map_err(|e| e.in_sample(m))?;
            let s = oracle.minimize(topology, &g).map_err(|e| e.in_sample(m))?;
            let d: Vec<f64> = s
                .coords
                .iter()
                .zip(taus[m].values())
                .map(|(a, b)| a - b)
                .collect();
            let fallback = block_decay_step(t, num);
            gamma = match config.step_rule {
                StepRule::Decay => fallback,
                StepRule::LineSearch => {
                    let q = data.samples()[m].model().features().stats(&d);
                    let quad = SegmentQuadratic::new(cache.residual(), &q, lambda);
                    let tau_m = &taus[m];
                    let eval = |eta: f64| -> Result<Directional> {
                        let h = entropy::entropy_along(topology, tau_m.values(), &d, eta, rho)?;
                        Ok(Directional {
                            value: quad.value(eta) - h.value,
                            slope: quad.slope(eta) - h.slope,
                            curvature: quad.curvature() - h.curvature,
                        })
                    };
                    let eta = minimize_convex_segment(&eval).map_err(|e| e.in_sample(m))?;
                    no_worse_than(&eval, eta, fallback)
                }
            };
            let old = taus[m].values().to_vec();
            taus[m].step_towards(&s.coords, gamma);
            dual::update_gram_residual(&mut cache, data, &taus, m, &old)?;
            if let Some(avg) = averaged.as_mut() {
                average_into(avg, &taus, t);
            }
            if t % VALIDATE_EVERY == 0 {
                check_iterates(&taus, topology, t)?;
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct InferenceResult {
    pub tau: Pseudomarginals,
    /// `-F_ρ(τ)`; the true `log Z_ρ` lies in `[log_z, log_z + gap]`.
    pub log_z: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: FWTrace,
}

/// Minimise the free energy `F_ρ(τ; θ) = -⟨τ, Gθ⟩ - H_ρ(τ)` over the polytope.
pub fn fw_infer(
    model: &StructuredModel,
    theta: &[f64],
    rho: &Reweighting,
    config: &FWConfig,
    oracle: &dyn LinearOracle,
) -> Result<InferenceResult> {
    config.validate()?;
    let topology = model.topology();
    rho.check(topology)?;
    let scores = model.scores(theta)?;
    let start = Instant::now();
    let mut tau = init_pseudomarginals(topology)?;
    let mut trace = FWTrace {
        rows: Vec::new(),
        subproblem_tol: config.subproblem_tol.max(oracle.tolerance()),
    };
    let mut t = 0;
    let mut gamma = 0.0;
    loop {
        let h = entropy::entropy(topology, tau.values(), rho)?;
        let free = -dot(tau.values(), &scores) - h;
        let gh = entropy::entropy_gradient(topology, tau.values(), rho)?;
        let g: Vec<f64> = scores.iter().zip(&gh).map(|(s, h)| -s - h).collect();
        let s = oracle.minimize(topology, &g)?;
        let gap = duality_gap(tau.values(), &s.coords, &g);
        trace.rows.push(TraceRow {
            t,
            objective: free,
            gap,
            gamma,
            seconds: start.elapsed().as_secs_f64(),
        });
        let converged = gap <= config.gap_tol;
        if converged || t >= config.max_iters {
            return Ok(InferenceResult {
                tau,
                log_z: -free,
                gap,
                iterations: t,
                converged,
                trace,
            });
        }
        t += 1;
        let d: Vec<f64> = s
            .coords
            .iter()
            .zip(tau.values())
            .map(|(a, b)| a - b)
            .collect();
        gamma = match config.step_rule {
            StepRule::Decay => decay_step(t),
            StepRule::LineSearch => {
                let lin = -dot(&d, &scores);
                let base = -dot(tau.values(), &scores);
                let eval = |eta: f64| -> Result<Directional> {
                    let h = entropy::entropy_along(topology, tau.values(), &d, eta, rho)?;
                    Ok(Directional {
                        value: base + eta * lin - h.value,
                        slope: lin - h.slope,
                        curvature: -h.curvature,
                    })
                };
                let eta = minimize_convex_segment(&eval)?;
                no_worse_than(&eval, eta, decay_step(t))
            }
        };
        tau.step_towards(&s.coords, gamma);
        if t % VALIDATE_EVERY == 0 {
            check_iterates(std::slice::from_ref(&tau), topology, t)?;
        }
    }
}

/// Settings for [`curvature_bound_estimate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureProbe {
    pub probes: usize,
    pub seed: u64,
    /// Probe points keep at least this much weight on the interior starting point.
    pub margin: f64,
}

impl Default for CurvatureProbe {
    fn default() -> Self {
        CurvatureProbe {
            probes: 200,
            seed: 0,
            margin: 0.05,
        }
    }
}

/// Empirical lower bound on the curvature constant of `L`:
/// the largest `(2/γ²)(L(x + γ(s - x)) - L(x) - γ⟨s - x, ∇L(x)⟩)` over random probes, with
/// `x` a random point between the interior start and a random vertex and `s` a random
/// vertex.
pub fn curvature_bound_estimate(
    data: &Dataset,
    rho: &Reweighting,
    lambda: f64,
    probe: &CurvatureProbe,
) -> Result<f64> {
    dual::check_lambda(lambda)?;
    rho.check(data.topology())?;
    if !(probe.margin > 0.0 && probe.margin <= 1.0) {
        return Err(Error::InvalidParameter(
            "probe margin must lie in (0, 1]".to_string(),
        ));
    }
    let topology = data.topology();
    let n = topology.num_coords();
    let start = init_pseudomarginals(topology)?;
    let mut rng = ChaCha8Rng::seed_from_u64(probe.seed);
    let random_vertex = |rng: &mut ChaCha8Rng| -> Result<Vec<f64>> {
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Ok(map::linear_minimize(topology, &g)?.coords)
    };
    let mut best = 0.0f64;
    for _ in 0..probe.probes {
        let mut x = Vec::with_capacity(data.len());
        let mut dirs = Vec::with_capacity(data.len());
        for _ in 0..data.len() {
            let v = random_vertex(&mut rng)?;
            let mut p = start.clone();
            p.step_towards(&v, rng.gen_range(0.0..1.0 - probe.margin));
            let s = random_vertex(&mut rng)?;
            dirs.push(
                s.iter()
                    .zip(p.values())
                    .map(|(a, b)| a - b)
                    .collect::<Vec<f64>>(),
            );
            x.push(p);
        }
        let gamma = rng.gen_range(0.01..1.0 - probe.margin);
        let cache = GramCache::new(data, &x)?;
        let base = dual::dual_objective(data, &x, lambda, rho)?;
        let grads = dual::grad_dual(data, &x, lambda, rho, &cache)?;
        let slope: f64 = grads.iter().zip(&dirs).map(|(g, d)| dot(g, d)).sum();
        let mut y = x.clone();
        for (p, d) in y.iter_mut().zip(&dirs) {
            for (a, b) in p.values_mut().iter_mut().zip(d) {
                *a += gamma * b;
            }
        }
        let moved = dual::dual_objective(data, &y, lambda, rho)?;
        best = best.max(2.0 / (gamma * gamma) * (moved - base - gamma * slope));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_schedule_values() {
        assert_eq!(decay_step(0), 1.0);
        assert_eq!(decay_step(2), 0.5);
        assert_eq!(block_decay_step(0, 5), 1.0);
        assert_eq!(block_decay_step(10, 5), 0.5);
    }

    #[test]
    fn pure_quadratic_segment_has_closed_form() {
        let (a, b) = (3.0, -1.2);
        let eval = |eta: f64| {
            Ok(Directional {
                value: 0.5 * a * eta * eta + b * eta,
                slope: a * eta + b,
                curvature: a,
            })
        };
        let eta = minimize_convex_segment(&eval).unwrap();
        assert!((eta - 0.4).abs() < 1e-12);
        let steep = |eta: f64| {
            Ok(Directional {
                value: -eta,
                slope: -1.0 + 0.1 * eta,
                curvature: 0.1,
            })
        };
        assert_eq!(minimize_convex_segment(&steep).unwrap(), 1.0 - BOUNDARY_EPS);
        let uphill = |eta: f64| {
            Ok(Directional {
                value: eta,
                slope: 1.0,
                curvature: 0.0,
            })
        };
        assert_eq!(minimize_convex_segment(&uphill).unwrap(), 0.0);
    }

    #[test]
    fn gap_of_identical_points_is_zero() {
        assert_eq!(duality_gap(&[0.2, 0.8], &[0.2, 0.8], &[3.0, -1.0]), 0.0);
    }

    #[test]
    fn trace_csv_round_trip() {
        let trace = FWTrace {
            rows: vec![
                TraceRow {
                    t: 0,
                    objective: -1.25,
                    gap: 0.5,
                    gamma: 0.0,
                    seconds: 0.001,
                },
                TraceRow {
                    t: 1,
                    objective: -1.0 / 3.0,
                    gap: 1e-9,
                    gamma: 2.0 / 3.0,
                    seconds: 0.25,
                },
            ],
            subproblem_tol: 0.0,
        };
        assert_eq!(FWTrace::from_csv(&trace.to_csv()).unwrap(), trace);
        assert!(FWTrace::from_csv("bad\n").is_err());
    }

    #[test]
    fn config_validation() {
        assert!(FWConfig::default().validate().is_ok());
        assert!(FWConfig {
            gap_tol: 0.0,
            ..FWConfig::default()
        }
        .validate()
        .is_err());
        assert!(FWConfig {
            max_iters: 0,
            ..FWConfig::default()
        }
        .validate()
        .is_err());
    }
}
