//! File formats: circuits, loadshapes, datasets and trained models.

mod circuit;
mod dataset;
mod loadshape;
mod model;

pub use circuit::{parse_circuit, serialize_circuit};
pub use dataset::{decode_dataset, encode_dataset, read_dataset, read_dataset_expecting, write_dataset};
pub use loadshape::{parse_loadshape, write_loadshape, LoadShape};
pub use model::{model_from_json, model_to_json, read_model, write_model};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("{component}: {reason}")]
    Semantic { component: String, reason: String },
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
