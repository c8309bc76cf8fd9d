//! Knowledge-graph construction from resolved text.

pub mod extract;
pub mod graph;

pub use extract::{extract_chunk, filter_records, parse_records, ChunkRecords, ExtractionRecord};
pub use graph::{assemble, node_key, Edge, ExportFormat, KnowledgeGraph, Node};

use std::path::{Path, PathBuf};

use crate::llm::LlmError;
use crate::prompts::PromptError;

#[derive(Debug, thiserror::Error)]
pub enum KgError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("chunk {chunk_index}: could not parse extraction output: {message}")]
    ParseFailure { chunk_index: usize, message: String },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("I/O on `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl KgError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        KgError::Io { path: path.to_path_buf(), source }
    }
}
