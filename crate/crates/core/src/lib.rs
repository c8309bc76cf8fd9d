//! Type-specific coreference resolution and knowledge-graph extraction for
//! long legal documents.

pub mod config;
pub mod coref;
pub mod corpus;
pub mod entity_type;
pub mod eval;
pub mod kg;
pub mod lexicon;
pub mod llm;
pub mod pipeline;
pub mod prompts;
pub mod text;

pub use entity_type::EntityType;
