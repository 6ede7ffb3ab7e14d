//! Approximate maximum-likelihood learning of matching and binary pairwise models by
//! Frank-Wolfe on the dual of the reweighted Bethe likelihood.

pub mod dataset;
pub mod dual;
pub mod entropy;
pub mod error;
pub mod exact;
pub mod free_energy;
pub mod fw;
pub mod io;
pub mod map;
pub mod marginals;
pub mod matrix;
pub mod model;
pub mod synth;

pub use dataset::{Dataset, Sample};
pub use error::{Error, Result};
pub use free_energy::{free_energy, FreeEnergyValue};
pub use map::VertexSolution;
pub use marginals::{init_pseudomarginals, validate_local_polytope, Pseudomarginals};
pub use matrix::Matrix;
pub use model::{FeatureMap, ModelKind, Reweighting, Structure, StructuredModel, Topology};
