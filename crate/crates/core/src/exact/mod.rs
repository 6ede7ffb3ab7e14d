//! Exact desk-scale oracles: permanents, partition functions, exact maximum likelihood,
//! likelihood sandwich bounds and finite-difference gradient checks.

pub mod fd;
pub mod mle;
pub mod partition;
pub mod permanent;
pub mod sandwich;

pub use fd::{finite_difference_check, FdReport};
pub use mle::{
    exact_mle, log_likelihood, regularized_objective, ExactMleConfig, ExactMleResult, ExactStepRule,
};
pub use partition::{exact_partition, partition_by_enumeration, ExactInferenceResult, ExactMethod};
pub use permanent::{log_permanent_from_logs, permanent_marginals, ryser_permanent};
pub use sandwich::{sandwich_bounds, SandwichConfig, SandwichReport};
