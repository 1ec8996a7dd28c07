//! Operating scenarios, ground-truth samples and datasets.

mod config;
mod dataset;
mod generate;
mod sample;

pub use config::{EvSpec, PvSpec, ScenarioConfig, SolverChoice};
pub use dataset::{
    generate_dataset, mix_topology_datasets, report_csv, split_dataset, Dataset, GenerationReport, Normalizer,
};
pub use generate::{apply_topology, generate_scenarios, synthetic_loadshape, ScenarioSet};
pub use sample::{build_sample, Sample, SlotLayout};

use crate::io::IoError;
use crate::pf::PfError;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
    #[error("topology: {0}")]
    Topology(String),
    #[error("solution not converged after {iterations} iterations")]
    Unconverged { iterations: usize },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("every scenario failed to solve")]
    NoSamples,
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Pf(#[from] PfError),
}
