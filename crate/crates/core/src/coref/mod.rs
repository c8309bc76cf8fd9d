//! Three-stage, type-specific coreference resolution.
//!
//! 1. [`ner`]: per-chunk proper nouns, noun phrases and descriptions.
//! 2. [`cache`]: the alias → canonical prompt cache, built chunk by chunk and
//!    refined by an optional gleaning pass.
//! 3. [`resolve`]: chunk rewriting against the final cache, then merging.

pub mod cache;
pub mod ner;
pub mod resolve;

pub use cache::{glean, update_cache, CanonicalTarget, PromptCache};
pub use ner::{extract_entities, ChunkEntities};
pub use resolve::{
    merge, resolve_chunk, resolve_chunk_deterministic, validate_resolution, MergeError, ResidualAlias, ResolvedChunk,
};

use crate::entity_type::EntityType;
use crate::llm::LlmError;
use crate::prompts::PromptError;

#[derive(Debug, thiserror::Error)]
pub enum CorefError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("entity type mismatch: cache holds {expected}, entities are {found}")]
    TypeMismatch { expected: EntityType, found: EntityType },
    #[error("{count} residual occurrence(s) of alias `{alias}` after resolution")]
    ResidualAlias { alias: String, count: usize },
}
