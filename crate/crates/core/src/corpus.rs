//! Document ingestion and overlapping token-window chunking.
//!
//! A token is a whitespace-delimited word with punctuation left attached.
//! Chunk text is the chunk's tokens joined by single spaces, so prompts are
//! stable regardless of the source document's original spacing.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Documents above this many words are classified as long.
pub const LONG_DOCUMENT_WORDS: usize = 2_500;

pub const DEFAULT_CHUNK_SIZE: usize = 300;
pub const DEFAULT_OVERLAP: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("input `{0}` is empty after trimming whitespace")]
    EmptyInput(String),
    #[error("input `{0}` is not valid UTF-8")]
    Decode(String),
    #[error("failed to read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid chunk parameters: chunk_size ({chunk_size}) must exceed overlap ({overlap})")]
    InvalidParameters { chunk_size: usize, overlap: usize },
}

/// Where a document comes from.
#[derive(Debug, Clone)]
pub enum Source<'a> {
    Path(&'a Path),
    Text { id: &'a str, text: &'a str },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub word_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthClass {
    Short,
    Long,
}

impl Document {
    pub fn new(id: impl Into<String>, text: &str) -> Result<Self, CorpusError> {
        let id = id.into();
        let text = normalize_line_endings(text);
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyInput(id));
        }
        let word_count = text.split_whitespace().count();
        Ok(Document { id, text, word_count })
    }

    pub fn tokens(&self) -> Vec<&str> {
        self.text.split_whitespace().collect()
    }

    /// Reported metadata only; processing does not depend on it.
    pub fn length_class(&self) -> LengthClass {
        if self.word_count <= LONG_DOCUMENT_WORDS {
            LengthClass::Short
        } else {
            LengthClass::Long
        }
    }
}

fn normalize_line_endings(text: &str) -> String {
    text.replace("\r\n", "\n").replace('\r', "\n")
}

/// Load a document from a file (id = file stem) or from an in-memory string.
pub fn ingest(source: Source<'_>) -> Result<Document, CorpusError> {
    match source {
        Source::Text { id, text } => Document::new(id, text),
        Source::Path(path) => {
            let bytes = fs::read(path).map_err(|source| CorpusError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let display = path.display().to_string();
            let text = String::from_utf8(bytes).map_err(|_| CorpusError::Decode(display))?;
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "document".to_string());
            Document::new(id, &text)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_id: String,
    pub index: usize,
    /// Offset of the first token within the document's token stream.
    pub start: usize,
    pub tokens: Vec<String>,
    pub text: String,
    pub chunk_size: usize,
    pub overlap: usize,
}

impl Chunk {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Split a document into windows of `chunk_size` tokens advancing by
/// `chunk_size - overlap`. The last window ends exactly at the final token.
pub fn chunk(doc: &Document, chunk_size: usize, overlap: usize) -> Result<Vec<Chunk>, CorpusError> {
    let tokens = doc.tokens();
    chunk_tokens(&doc.id, &tokens, chunk_size, overlap)
}

pub fn chunk_tokens(
    doc_id: &str,
    tokens: &[&str],
    chunk_size: usize,
    overlap: usize,
) -> Result<Vec<Chunk>, CorpusError> {
    if chunk_size == 0 || chunk_size <= overlap {
        return Err(CorpusError::InvalidParameters { chunk_size, overlap });
    }
    let stride = chunk_size - overlap;
    let mut chunks = Vec::new();
    let mut start = 0;
    loop {
        let end = (start + chunk_size).min(tokens.len());
        let window: Vec<String> = tokens[start..end].iter().map(|t| t.to_string()).collect();
        chunks.push(Chunk {
            doc_id: doc_id.to_string(),
            index: chunks.len(),
            start,
            text: window.join(" "),
            tokens: window,
            chunk_size,
            overlap,
        });
        if end >= tokens.len() {
            break;
        }
        start += stride;
    }
    Ok(chunks)
}

/// Closed-form chunk count for `total` tokens.
pub fn expected_chunk_count(total: usize, chunk_size: usize, overlap: usize) -> usize {
    let stride = chunk_size - overlap;
    let span = total.saturating_sub(overlap).max(1);
    span.div_ceil(stride)
}

/// Inverse of [`chunk`]: drop each later chunk's leading overlap and concatenate.
pub fn reassemble(chunks: &[Chunk]) -> Vec<String> {
    let mut out = Vec::new();
    for (i, c) in chunks.iter().enumerate() {
        let skip = if i == 0 { 0 } else { c.overlap.min(c.tokens.len()) };
        out.extend(c.tokens[skip..].iter().cloned());
    }
    out
}
