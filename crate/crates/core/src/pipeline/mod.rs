//! Configuration, synthetic fixtures, evaluation, stage caching and
//! diagnostic rendering for the command-line pipeline.

mod cache;
mod config;
mod eval;
pub mod render;
mod stages;
mod synthetic;

use thiserror::Error;

use crate::mesh::MeshError;
use crate::patch::PatchError;
use crate::spheremap::SpheremapError;
use crate::transfer::TransferError;

pub use cache::{hash_bytes, hash_file, StageCache, StageRecord};
pub use config::{PipelineConfig, Provenance};
pub use eval::{evaluate, EvalReport, PatchEval};
pub use stages::{
    output_hashes, run_all, Artifact, GenPaths, PdfSet, Reconstructions, RelationSet, Role, RunPaths, RunSummary, Side,
    SidePaths, StageOutcome, Stages,
};
pub use synthetic::{gen_synthetic, BaseShape, Relation, Rotation, Synthetic, SyntheticSpec, REGION};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("placed {placed} of {wanted} spots after {tries} attempts")]
    SpotPlacement { placed: usize, wanted: usize, tries: usize },
    #[error("vertex counts differ: reconstructed mesh has {reconstructed}, ground truth has {ground_truth}")]
    VertexCount { reconstructed: usize, ground_truth: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error("plot: {0}")]
    Plot(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<PipelineError>,
    },
}

impl From<PatchError> for PipelineError {
    fn from(e: PatchError) -> Self {
        PipelineError::Transfer(e.into())
    }
}

impl From<SpheremapError> for PipelineError {
    fn from(e: SpheremapError) -> Self {
        PipelineError::Transfer(e.into())
    }
}

impl PipelineError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn json(path: impl AsRef<std::path::Path>, source: serde_json::Error) -> Self {
        PipelineError::Json {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn at(self, stage: &'static str) -> Self {
        match self {
            e @ PipelineError::Stage { .. } => e,
            e => PipelineError::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// Process exit status: 2 for configuration problems, 3 for unreadable
    /// or unwritable files, 4 for anything that failed inside a stage.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Stage { source, .. } => source.exit_code(),
            PipelineError::Config(_) => 2,
            PipelineError::Io { .. } | PipelineError::Json { .. } => 3,
            PipelineError::Mesh(MeshError::Io(_) | MeshError::Parse(_)) => 3,
            PipelineError::Transfer(e) => transfer_code(e),
            _ => 4,
        }
    }
}

fn transfer_code(e: &TransferError) -> i32 {
    match e {
        TransferError::Params(_) => 2,
        TransferError::Io(_) | TransferError::Malformed(_) => 3,
        TransferError::Mesh(MeshError::Io(_) | MeshError::Parse(_)) => 3,
        TransferError::Stage { source, .. } => transfer_code(source),
        _ => 4,
    }
}

pub fn read_json<D: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<D, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::json(path, e))
}

pub(crate) fn write_file(path: &std::path::Path, bytes: &[u8]) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| PipelineError::io(path, e))
}
