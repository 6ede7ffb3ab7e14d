//! Experiment configuration files.

use std::path::{Path, PathBuf};

use mle_struct::exact::SandwichConfig;
use mle_struct::fw::FWConfig;
use mle_struct::io::read_json;
use mle_struct::model::{Reweighting, Topology};
use mle_struct::synth::SynthSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// ρ as a single value for every factor, an explicit list, or a JSON file holding a list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoSpec {
    Uniform(f64),
    Values(Vec<f64>),
    File { file: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Synthetic data to generate (`synth`, and `sandwich` without a dataset).
    pub synth: Option<SynthSpec>,
    pub dataset: Option<PathBuf>,
    /// Parameter file for `infer` and `map`.
    pub theta: Option<PathBuf>,
    /// Sample whose features define the model for `infer`.
    pub sample: usize,
    /// Dataset whose structures `map` compares against; defaults to `dataset`.
    pub reference: Option<PathBuf>,
    /// Defaults to ρ = 1 for matchings and ½ for pairwise models.
    pub rho: Option<RhoSpec>,
    pub lambda: f64,
    pub fw: FWConfig,
    pub sandwich: SandwichConfig,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            synth: None,
            dataset: None,
            theta: None,
            sample: 0,
            reference: None,
            rho: None,
            lambda: 1.0,
            fw: FWConfig::default(),
            sandwich: SandwichConfig::default(),
            seed: 0,
            out: None,
        }
    }
}

impl ExperimentConfig {
    /// Parse `path`; relative paths inside are taken relative to its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut cfg: ExperimentConfig = read_json(path)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(p) = p.as_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        fix(&mut cfg.dataset);
        fix(&mut cfg.theta);
        fix(&mut cfg.reference);
        fix(&mut cfg.out);
        if let Some(RhoSpec::File { file }) = cfg.rho.as_mut() {
            if file.is_relative() {
                *file = base.join(&*file);
            }
        }
        for p in [&cfg.dataset, &cfg.theta, &cfg.reference]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                return Err(CliError::Usage(format!(
                    "referenced file {} does not exist",
                    p.display()
                )));
            }
        }
        if !(cfg.lambda > 0.0 && cfg.lambda.is_finite()) {
            return Err(CliError::Usage(format!(
                "lambda must be positive, got {}",
                cfg.lambda
            )));
        }
        Ok(cfg)
    }

    pub fn require<'a>(value: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, CliError> {
        value
            .as_deref()
            .ok_or_else(|| CliError::Usage(format!("config needs `{what}`")))
    }

    pub fn reweighting(&self, topology: &Topology) -> Result<Reweighting, CliError> {
        let rho = match &self.rho {
            None => return Ok(Reweighting::default_for(topology)),
            Some(RhoSpec::Uniform(v)) => Reweighting::uniform(topology, *v)?,
            Some(RhoSpec::Values(v)) => Reweighting::new(v.clone())?,
            Some(RhoSpec::File { file }) => Reweighting::new(read_json::<Vec<f64>>(file)?)?,
        };
        rho.check(topology)?;
        Ok(rho)
    }
}
