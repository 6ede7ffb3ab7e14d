//! The five subcommands. Each writes its files under the output directory and prints a
//! one-object JSON summary on stdout.

use std::fs;
use std::path::PathBuf;

use mle_struct::dual::theta_star;
use mle_struct::exact::sandwich_bounds;
use mle_struct::fw::{fw_infer, learn as fw_learn_any, ExactOracle, LearnOptions};
use mle_struct::io::{
    read_dataset, read_json, write_dataset, write_json, MarginalsFile, ThetaFile,
};
use mle_struct::map::map_decode;
use mle_struct::model::{edge_vector_to_matrix, Structure};
use mle_struct::synth::{synthesize, MAX_SAMPLE_SIDE};
use mle_struct::{Dataset, Error};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::{CliError, Common};

pub struct Context {
    pub cfg: ExperimentConfig,
    pub seed: u64,
    pub out: PathBuf,
}

impl Context {
    pub fn new(common: &Common) -> Result<Self, CliError> {
        let mut cfg = ExperimentConfig::load(&common.config)?;
        if let Some(seed) = common.seed {
            cfg.seed = seed;
            cfg.fw.rng_seed = seed;
            cfg.sandwich.learn.rng_seed = seed;
            cfg.sandwich.infer.rng_seed = seed;
        }
        let out = common
            .out
            .clone()
            .or_else(|| cfg.out.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&out).map_err(|e| {
            CliError::Usage(format!(
                "cannot create output directory {}: {e}",
                out.display()
            ))
        })?;
        Ok(Context {
            seed: cfg.seed,
            cfg,
            out,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn dataset(&self) -> Result<Dataset, CliError> {
        let path = ExperimentConfig::require(&self.cfg.dataset, "dataset")?;
        Ok(read_dataset(path)?)
    }

    fn theta(&self, data: &Dataset) -> Result<ThetaFile, CliError> {
        let path = ExperimentConfig::require(&self.cfg.theta, "theta")?;
        let theta: ThetaFile = read_json(path)?;
        if theta.theta.len() != data.num_params() {
            return Err(CliError::Usage(format!(
                "parameter file has {} entries, model has {}",
                theta.theta.len(),
                data.num_params()
            )));
        }
        Ok(theta)
    }
}

fn print(value: serde_json::Value) {
    println!("{value}");
}

pub fn synth(ctx: &Context) -> Result<(), CliError> {
    let spec = ctx
        .cfg
        .synth
        .as_ref()
        .ok_or_else(|| CliError::Usage("config needs `synth`".to_string()))?;
    if spec.n > MAX_SAMPLE_SIDE {
        return Err(Error::SizeCap(format!(
            "exact sampling supports n <= {MAX_SAMPLE_SIDE}, got {}",
            spec.n
        ))
        .into());
    }
    let s = synthesize(spec, ctx.seed)?;
    write_dataset(&ctx.path("dataset.json"), &s.dataset)?;
    let truth = ThetaFile {
        theta: s.theta,
        lambda: 0.0,
        rho: None,
        objective: None,
        gap: None,
        iterations: None,
        converged: None,
    };
    write_json(&ctx.path("truth.json"), &truth)?;
    print(json!({
        "command": "synth",
        "samples": s.dataset.len(),
        "n": spec.n,
        "dataset": ctx.path("dataset.json"),
    }));
    Ok(())
}

pub fn learn(ctx: &Context) -> Result<(), CliError> {
    let data = ctx.dataset()?;
    let rho = ctx.cfg.reweighting(data.topology())?;
    let lambda = ctx.cfg.lambda;
    let r = fw_learn_any(
        &data,
        &rho,
        lambda,
        &ctx.cfg.fw,
        &ExactOracle,
        LearnOptions::default(),
    )?;
    let file = ThetaFile {
        theta: r.theta.theta.clone(),
        lambda,
        rho: Some(rho.values().to_vec()),
        objective: Some(r.objective),
        gap: Some(r.gap),
        iterations: Some(r.iterations),
        converged: Some(r.converged),
    };
    write_json(&ctx.path("theta.json"), &file)?;
    r.trace.write_csv(&ctx.path("trace.csv"))?;
    if let Some(avg) = &r.averaged {
        let theta = theta_star(&data, avg, lambda)?;
        write_json(
            &ctx.path("theta_averaged.json"),
            &ThetaFile {
                theta: theta.theta,
                objective: None,
                gap: None,
                iterations: Some(r.iterations),
                converged: None,
                ..file
            },
        )?;
    }
    print(json!({
        "command": "learn",
        "objective": r.objective,
        "gap": r.gap,
        "iterations": r.iterations,
        "converged": r.converged,
        "inexact_oracle": r.trace.is_inexact(),
    }));
    Ok(())
}

pub fn infer(ctx: &Context) -> Result<(), CliError> {
    let data = ctx.dataset()?;
    let theta = ctx.theta(&data)?;
    let sample = data.samples().get(ctx.cfg.sample).ok_or_else(|| {
        CliError::Usage(format!(
            "sample {} out of range for {} samples",
            ctx.cfg.sample,
            data.len()
        ))
    })?;
    let model = sample.model();
    let rho = ctx.cfg.reweighting(data.topology())?;
    let r = fw_infer(model, &theta.theta, &rho, &ctx.cfg.fw, &ExactOracle)?;
    let topology = data.topology();
    let matrix = if topology.kind().is_matching() {
        Some(edge_vector_to_matrix(topology, r.tau.values())?.to_rows())
    } else {
        None
    };
    let file = MarginalsFile {
        kind: topology.kind(),
        marginals: r.tau.values().to_vec(),
        matrix,
        log_z: r.log_z,
        gap: r.gap,
        iterations: r.iterations,
        converged: r.converged,
    };
    write_json(&ctx.path("marginals.json"), &file)?;
    r.trace.write_csv(&ctx.path("infer_trace.csv"))?;
    print(json!({
        "command": "infer",
        "log_z": r.log_z,
        "gap": r.gap,
        "iterations": r.iterations,
        "converged": r.converged,
    }));
    Ok(())
}

pub fn sandwich(ctx: &Context) -> Result<(), CliError> {
    let data = match (&ctx.cfg.dataset, &ctx.cfg.synth) {
        (Some(path), _) => read_dataset(path)?,
        (None, Some(spec)) => synthesize(spec, ctx.seed)?.dataset,
        (None, None) => {
            return Err(CliError::Usage(
                "config needs `dataset` or `synth`".to_string(),
            ))
        }
    };
    if data.is_empty() {
        return Err(CliError::Usage(
            "the likelihood bounds need at least one sample".to_string(),
        ));
    }
    let report = sandwich_bounds(&data, ctx.cfg.lambda, &ctx.cfg.sandwich)?;
    write_json(&ctx.path("sandwich.json"), &report)?;
    print(json!({
        "command": "sandwich",
        "lower": report.lower.value,
        "exact": report.exact,
        "upper": report.upper.value,
        "all_hold": report.all_hold,
    }));
    if !report.all_hold {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.holds)
            .map(|c| c.name.as_str())
            .collect();
        return Err(CliError::ChecksFailed(failed.join(", ")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapFile {
    pub structures: Vec<Structure>,
    /// Score of each decoded structure.
    pub scores: Vec<f64>,
    pub hamming: Vec<f64>,
    pub mean_hamming: f64,
    /// False where the relaxation was fractional and labels were rounded.
    pub integral: Vec<bool>,
}

pub fn map(ctx: &Context) -> Result<(), CliError> {
    let data = ctx.dataset()?;
    let theta = ctx.theta(&data)?;
    let reference = match &ctx.cfg.reference {
        Some(p) => read_dataset(p)?,
        None => data.clone(),
    };
    if reference.len() != data.len() {
        return Err(CliError::Usage(format!(
            "reference has {} samples, dataset has {}",
            reference.len(),
            data.len()
        )));
    }
    let mut file = MapFile {
        structures: Vec::with_capacity(data.len()),
        scores: Vec::with_capacity(data.len()),
        hamming: Vec::with_capacity(data.len()),
        mean_hamming: 0.0,
        integral: Vec::with_capacity(data.len()),
    };
    for (m, (s, r)) in data.samples().iter().zip(reference.samples()).enumerate() {
        let v = map_decode(s.model(), &theta.theta).map_err(|e| Error::Solver {
            sample: m,
            source: Box::new(e),
        })?;
        let y = if v.is_integral() {
            Structure::from_vertex(data.topology(), &v.coords)?
        } else {
            // fractional LP optimum of a pairwise model: undecided nodes get label 0
            let labels = (0..data.topology().num_nodes())
                .map(|n| u8::from(v.coords[2 * n + 1] > 0.5))
                .collect();
            Structure::Labels(labels)
        };
        file.integral.push(v.is_integral());
        file.hamming.push(y.hamming_loss(r.structure())?);
        file.scores.push(v.objective);
        file.structures.push(y);
    }
    file.mean_hamming = if file.hamming.is_empty() {
        0.0
    } else {
        file.hamming.iter().sum::<f64>() / file.hamming.len() as f64
    };
    write_json(&ctx.path("map.json"), &file)?;
    print(json!({
        "command": "map",
        "samples": data.len(),
        "mean_hamming": file.mean_hamming,
    }));
    Ok(())
}
