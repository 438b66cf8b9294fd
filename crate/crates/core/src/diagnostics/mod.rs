//! Effective sample sizes, replicated sampling runs and bias tables.

mod ess;
mod sampler;

pub use ess::{batch_means_variance, ess, multivariate_ess};
pub use sampler::{
    bias_table, run_sampler, BiasCell, BiasTable, CellStatus, Reference, RunSummary, SamplerSettings, TestFn,
};
