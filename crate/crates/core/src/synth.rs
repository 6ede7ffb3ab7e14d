//! Synthetic bipartite matching data drawn exactly from `p(π) ∝ exp(Σ_i W_{i,π(i)})`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exact::permanent::log_permanent_from_logs;
use crate::matrix::{log_sum_exp, Matrix};
use crate::model::{FeatureMap, Structure, Topology};

/// Largest side for which exact sampling is offered.
pub const MAX_SAMPLE_SIDE: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Off-diagonal weights -2, diagonal 0.
    HighSnr,
    /// Off-diagonal weights -0.5, diagonal 0.
    LowSnr,
    Custom {
        w: Vec<Vec<f64>>,
    },
}

impl Regime {
    pub fn weights(&self, n: usize) -> Result<Matrix> {
        let off = match self {
            Regime::HighSnr => -2.0,
            Regime::LowSnr => -0.5,
            Regime::Custom { w } => {
                let m = Matrix::from_rows(w)?;
                if m.rows() != n || m.cols() != n {
                    return Err(Error::structure(format!(
                        "custom weights are {}x{}, expected {n}x{n}",
                        m.rows(),
                        m.cols()
                    )));
                }
                if !m.is_finite() {
                    return Err(Error::domain("custom weights must be finite"));
                }
                return Ok(m);
            }
        };
        Ok(Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { off }))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub regime: Regime,
    pub n: usize,
    pub m: usize,
}

#[derive(Clone, Debug)]
pub struct Synthetic {
    pub dataset: Dataset,
    /// Generating weights `W`.
    pub weights: Matrix,
    /// Parameters reproducing `W` under [`indicator_features`].
    pub theta: Vec<f64>,
}

/// The `n²` entrywise indicator matrices `E_ij`, in row-major order of `(i, j)`, so that
/// `θ = vec(W)` gives edge weights `W`.
pub fn indicator_features(topology: &Topology) -> Result<FeatureMap> {
    let n = topology.side();
    let mats: Vec<Matrix> = (0..n * n)
        .map(|k| Matrix::from_fn(n, n, |i, j| if i * n + j == k { 1.0 } else { 0.0 }))
        .collect();
    FeatureMap::bipartite(topology, &mats)
}

/// One exact draw: row `i` picks column `j` with probability
/// `exp(W_ij) per(rest without j) / per(rest)`.
pub fn sample_permutation<R: Rng + ?Sized>(w: &Matrix, rng: &mut R) -> Result<Vec<usize>> {
    let n = w.rows();
    if !w.is_square() {
        return Err(Error::structure("weight matrix must be square"));
    }
    if n > MAX_SAMPLE_SIDE {
        return Err(Error::SizeCap(format!(
            "exact sampling supports n <= {MAX_SAMPLE_SIDE}, got {n}"
        )));
    }
    let mut free: Vec<usize> = (0..n).collect();
    let mut perm = Vec::with_capacity(n);
    for i in 0..n {
        let k = n - i - 1;
        let logs = free
            .iter()
            .enumerate()
            .map(|(idx, &j)| {
                let cols: Vec<usize> = free
                    .iter()
                    .enumerate()
                    .filter(|&(c, _)| c != idx)
                    .map(|(_, &c)| c)
                    .collect();
                let sub = Matrix::from_fn(k, k, |a, b| w[(i + 1 + a, cols[b])]);
                Ok(w[(i, j)] + log_permanent_from_logs(&sub)?)
            })
            .collect::<Result<Vec<f64>>>()?;
        let total = log_sum_exp(logs.iter().copied());
        if total == f64::NEG_INFINITY {
            return Err(Error::Infeasible(
                "weight matrix admits no permutation".to_string(),
            ));
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut pick = logs
            .iter()
            .rposition(|l| *l > f64::NEG_INFINITY)
            .unwrap_or(0);
        for (idx, l) in logs.iter().enumerate() {
            acc += (l - total).exp();
            if u < acc {
                pick = idx;
                break;
            }
        }
        perm.push(free.remove(pick));
    }
    Ok(perm)
}

/// `m` exact samples with indicator features shared by every sample.
pub fn synthesize(spec: &SynthSpec, seed: u64) -> Result<Synthetic> {
    if spec.n == 0 {
        return Err(Error::InvalidParameter("n must be positive".to_string()));
    }
    let weights = spec.regime.weights(spec.n)?;
    let topology = Arc::new(Topology::bipartite(spec.n)?);
    let features = Arc::new(indicator_features(&topology)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..spec.m)
        .map(|_| {
            Ok((
                features.clone(),
                Structure::Permutation(sample_permutation(&weights, &mut rng)?),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let dataset = Dataset::new(topology, samples)?;
    Ok(Synthetic {
        dataset,
        theta: weights.as_slice().to_vec(),
        weights,
    })
}
