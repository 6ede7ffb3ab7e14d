use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{FeatureMap, Structure, StructuredModel, Topology};

/// One observation: its feature map and the observed structure.
#[derive(Clone, Debug)]
pub struct Sample {
    model: StructuredModel,
    structure: Structure,
    observed: Vec<f64>,
}

impl Sample {
    pub fn new(model: StructuredModel, structure: Structure) -> Result<Self> {
        let observed = structure.indicator(model.topology())?;
        Ok(Sample {
            model,
            structure,
            observed,
        })
    }

    pub fn model(&self) -> &StructuredModel {
        &self.model
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// 0/1 indicator vector of the observed structure.
    pub fn observed(&self) -> &[f64] {
        &self.observed
    }
}

/// Samples that share one feature map (pointer identity).
#[derive(Clone, Debug)]
pub struct FeatureGroup {
    pub features: Arc<FeatureMap>,
    pub members: Vec<usize>,
}

/// M observations over a common topology and parameter space.
///
/// Samples whose feature maps are the same `Arc` are grouped so that feature products
/// can be applied once per group instead of once per sample.
#[derive(Clone, Debug)]
pub struct Dataset {
    topology: Arc<Topology>,
    samples: Vec<Sample>,
    groups: Vec<FeatureGroup>,
    num_params: usize,
}

impl Dataset {
    pub fn new(
        topology: Arc<Topology>,
        samples: Vec<(Arc<FeatureMap>, Structure)>,
    ) -> Result<Self> {
        let mut built = Vec::with_capacity(samples.len());
        let mut groups: Vec<FeatureGroup> = Vec::new();
        let mut num_params = None;
        for (m, (features, structure)) in samples.into_iter().enumerate() {
            let p = features.num_params();
            if *num_params.get_or_insert(p) != p {
                return Err(Error::structure(format!(
                    "sample {m} has {p} parameters, earlier samples have {}",
                    num_params.unwrap_or(0)
                )));
            }
            match groups
                .iter_mut()
                .find(|g| Arc::ptr_eq(&g.features, &features))
            {
                Some(g) => g.members.push(m),
                None => groups.push(FeatureGroup {
                    features: features.clone(),
                    members: vec![m],
                }),
            }
            let model = StructuredModel::new(topology.clone(), features)?;
            built.push(Sample::new(model, structure).map_err(|e| match e {
                Error::Structure(msg) => Error::structure(format!("sample {m}: {msg}")),
                other => other,
            })?);
        }
        Ok(Dataset {
            topology,
            samples: built,
            groups,
            num_params: num_params.unwrap_or(0),
        })
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topology
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn groups(&self) -> &[FeatureGroup] {
        &self.groups
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    /// Σ_m Gᵀ_m y_m.
    pub fn empirical_stats(&self) -> Vec<f64> {
        self.grouped_stats(|m| self.samples[m].observed())
    }

    /// Σ_m Gᵀ_m v_m for per-sample coordinate vectors given by `vector_of`.
    pub fn grouped_stats<'a>(&'a self, vector_of: impl Fn(usize) -> &'a [f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_params];
        let mut sum = vec![0.0; self.topology.num_coords()];
        for g in &self.groups {
            sum.iter_mut().for_each(|x| *x = 0.0);
            for &m in &g.members {
                for (s, &x) in sum.iter_mut().zip(vector_of(m)) {
                    *s += x;
                }
            }
            g.features.accumulate_stats(&sum, 1.0, &mut out);
        }
        out
    }

    /// Dataset with the samples listed in `order` (used to check order invariance).
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        let samples = order
            .iter()
            .map(|&m| {
                self.samples
                    .get(m)
                    .map(|s| (s.model.features().clone(), s.structure.clone()))
                    .ok_or_else(|| Error::structure(format!("sample index {m} out of range")))
            })
            .collect::<Result<_>>()?;
        Dataset::new(self.topology.clone(), samples)
    }
}
