//! JSON file formats for datasets, parameters and marginals.
//!
//! A dataset file looks like
//!
//! ```json
//! {
//!   "kind": "bipartite_matching",
//!   "n": 3,
//!   "features": { "matrices": [[[1, 0, 0], [0, 1, 0], [0, 0, 1]]] },
//!   "samples": [ { "structure": { "permutation": [0, 2, 1] } } ]
//! }
//! ```
//!
//! * `kind` is `bipartite_matching`, `general_perfect_matching` or `pairwise_binary_grid`.
//! * Bipartite models give `n`. General matchings give `num_nodes` and `edges`
//!   (vertex pairs). Pairwise models give either `grid: [rows, cols]` or `num_nodes` and
//!   `edges`.
//! * Features are `{"matrices": [...]}` for matchings (K matrices, `n x n` or
//!   `|V| x |V|` symmetric) and `{"node_dim": C, "edge_dim": D, "node": [...],
//!   "edge": [...]}` for pairwise models (one row per node or edge).
//! * Top-level `features` are shared by every sample that has no `features` of its own.
//! * A sample's `structure` is `{"permutation": [...]}`, `{"matching": [[i, j], ...]}` or
//!   `{"labels": [...]}`.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{FeatureMap, ModelKind, Structure, Topology};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureBlock {
    Matching {
        matrices: Vec<Vec<Vec<f64>>>,
    },
    Grid {
        node_dim: usize,
        edge_dim: usize,
        node: Vec<Vec<f64>>,
        edge: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureBlock>,
    pub structure: Structure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureBlock>,
    pub samples: Vec<SampleRecord>,
}

fn matrix(rows: &[Vec<f64>], cols: usize) -> Result<Matrix> {
    if rows.is_empty() || cols == 0 {
        if rows.iter().any(|r| !r.is_empty()) {
            return Err(Error::Structure(
                "feature rows longer than the declared width".to_string(),
            ));
        }
        return Ok(Matrix::zeros(rows.len(), cols));
    }
    let m = Matrix::from_rows(rows)?;
    if m.cols() != cols {
        return Err(Error::structure(format!(
            "feature rows have {} entries, expected {cols}",
            m.cols()
        )));
    }
    Ok(m)
}

impl FeatureBlock {
    pub fn to_feature_map(&self, topology: &Topology) -> Result<FeatureMap> {
        match (self, topology.kind()) {
            (FeatureBlock::Matching { matrices }, ModelKind::BipartiteMatching) => {
                let ms = matrices
                    .iter()
                    .map(|m| Matrix::from_rows(m))
                    .collect::<Result<Vec<_>>>()?;
                FeatureMap::bipartite(topology, &ms)
            }
            (FeatureBlock::Matching { matrices }, ModelKind::GeneralPerfectMatching) => {
                let ms = matrices
                    .iter()
                    .map(|m| Matrix::from_rows(m))
                    .collect::<Result<Vec<_>>>()?;
                FeatureMap::general(topology, &ms)
            }
            (
                FeatureBlock::Grid {
                    node_dim,
                    edge_dim,
                    node,
                    edge,
                },
                ModelKind::PairwiseBinaryGrid,
            ) => FeatureMap::grid(topology, matrix(node, *node_dim)?, matrix(edge, *edge_dim)?),
            _ => Err(Error::structure(
                "feature block does not fit the model kind",
            )),
        }
    }

    pub fn from_feature_map(features: &FeatureMap, topology: &Topology) -> Result<Self> {
        Ok(match features {
            FeatureMap::Matching { .. } => FeatureBlock::Matching {
                matrices: features
                    .matching_matrices(topology)?
                    .iter()
                    .map(Matrix::to_rows)
                    .collect(),
            },
            FeatureMap::Grid { node, edge } => FeatureBlock::Grid {
                node_dim: node.cols(),
                edge_dim: edge.cols(),
                node: node.to_rows(),
                edge: edge.to_rows(),
            },
        })
    }
}

impl DatasetFile {
    pub fn topology(&self) -> Result<Topology> {
        let need = |what: &str| Error::structure(format!("{:?} dataset needs `{what}`", self.kind));
        match self.kind {
            ModelKind::BipartiteMatching => Topology::bipartite(self.n.ok_or_else(|| need("n"))?),
            ModelKind::GeneralPerfectMatching => Topology::general_matching(
                self.num_nodes.ok_or_else(|| need("num_nodes"))?,
                self.edges.as_deref().ok_or_else(|| need("edges"))?,
            ),
            ModelKind::PairwiseBinaryGrid => match self.grid {
                Some([r, c]) => Topology::grid(r, c),
                None => Topology::pairwise(
                    self.num_nodes.ok_or_else(|| need("grid or num_nodes"))?,
                    self.edges.as_deref().ok_or_else(|| need("edges"))?,
                ),
            },
        }
    }

    pub fn to_dataset(&self) -> Result<Dataset> {
        let topology = Arc::new(self.topology()?);
        let shared = self
            .features
            .as_ref()
            .map(|f| f.to_feature_map(&topology).map(Arc::new))
            .transpose()?;
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(m, s)| {
                let features = match (&s.features, &shared) {
                    (Some(f), _) => {
                        Arc::new(f.to_feature_map(&topology).map_err(|e| e.in_sample(m))?)
                    }
                    (None, Some(f)) => f.clone(),
                    (None, None) => {
                        return Err(Error::structure(format!("sample {m} has no features")));
                    }
                };
                Ok((features, s.structure.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(topology, samples)
    }

    /// Features shared by a single group are written once at the top level.
    pub fn from_dataset(data: &Dataset) -> Result<Self> {
        let topology = data.topology();
        let mut file = DatasetFile {
            kind: topology.kind(),
            n: None,
            grid: None,
            num_nodes: None,
            edges: None,
            features: None,
            samples: Vec::with_capacity(data.len()),
        };
        match (topology.kind(), topology.grid_shape()) {
            (ModelKind::BipartiteMatching, _) => file.n = Some(topology.side()),
            (ModelKind::PairwiseBinaryGrid, Some((r, c))) => file.grid = Some([r, c]),
            _ => {
                file.num_nodes = Some(topology.num_nodes());
                file.edges = Some(topology.edges().to_vec());
            }
        }
        let shared = data.groups().len() == 1;
        if shared {
            let f = &data.groups()[0].features;
            file.features = Some(FeatureBlock::from_feature_map(f, topology)?);
        }
        for s in data.samples() {
            file.samples.push(SampleRecord {
                features: if shared {
                    None
                } else {
                    Some(FeatureBlock::from_feature_map(
                        s.model().features(),
                        topology,
                    )?)
                },
                structure: s.structure().clone(),
            });
        }
        Ok(file)
    }
}

/// Learned parameters with the settings and certificate they were obtained under.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaFile {
    pub theta: Vec<f64>,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
}

/// Approximate marginals and the bracket `log Z_ρ ∈ [log_z, log_z + gap]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalsFile {
    pub kind: ModelKind,
    pub marginals: Vec<f64>,
    /// Edge marginals laid out as a matrix (matchings only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    pub log_z: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_json(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| with_path(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| with_path(path, e))?;
    from_json(&text)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    read_json::<DatasetFile>(path)?.to_dataset()
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    write_json(path, &DatasetFile::from_dataset(data)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_example_parses() {
        let text = r#"{
            "kind": "bipartite_matching",
            "n": 3,
            "features": { "matrices": [[[1, 0, 0], [0, 1, 0], [0, 0, 1]]] },
            "samples": [ { "structure": { "permutation": [0, 2, 1] } } ]
        }"#;
        let data = from_json::<DatasetFile>(text)
            .unwrap()
            .to_dataset()
            .unwrap();
        assert_eq!(data.len(), 1);
        assert_eq!(data.empirical_stats(), vec![1.0]);
    }

    #[test]
    fn missing_fields_are_reported() {
        let text = r#"{"kind": "general_perfect_matching", "num_nodes": 4, "samples": []}"#;
        assert!(from_json::<DatasetFile>(text)
            .unwrap()
            .to_dataset()
            .is_err());
        let text = r#"{"kind": "bipartite_matching", "n": 2, "samples": [{"structure": {"permutation": [1, 0]}}]}"#;
        assert!(from_json::<DatasetFile>(text)
            .unwrap()
            .to_dataset()
            .is_err());
    }

    #[test]
    fn wrong_feature_shape_is_rejected() {
        let text = r#"{"kind": "pairwise_binary_grid", "grid": [1, 2],
            "features": {"node_dim": 1, "edge_dim": 1, "node": [[1.0], [2.0]], "edge": [[1.0, 2.0]]},
            "samples": [{"structure": {"labels": [0, 1]}}]}"#;
        assert!(from_json::<DatasetFile>(text)
            .unwrap()
            .to_dataset()
            .is_err());
    }
}
