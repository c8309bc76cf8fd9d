//! Entity and relationship extraction from resolved text.

use serde::{Deserialize, Serialize};

use super::KgError;
use crate::corpus::Chunk;
use crate::entity_type::EntityType;
use crate::lexicon::FilterLexicon;
use crate::llm::Gateway;
use crate::prompts::PromptLibrary;
use crate::text::fold;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExtractionRecord {
    Entity {
        name: String,
        entity_type: EntityType,
        description: String,
    },
    Relationship {
        source: String,
        target: String,
        description: String,
        strength: u8,
    },
}

impl ExtractionRecord {
    pub fn is_entity(&self) -> bool {
        matches!(self, ExtractionRecord::Entity { .. })
    }
}

/// Records extracted from one chunk, in output order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkRecords {
    pub chunk_index: usize,
    pub records: Vec<ExtractionRecord>,
}

/// Result of parsing raw model output.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedRecords {
    pub records: Vec<ExtractionRecord>,
    /// Tuple-like lines that were rejected, with the reason.
    pub rejected: Vec<(String, String)>,
}

const ENTITY_TAG: &str = "\"entity\"";
const RELATIONSHIP_TAG: &str = "\"relationship\"";

fn strip_field(s: &str) -> String {
    s.trim().trim_matches('"').trim().to_string()
}

fn parse_strength(s: &str) -> Option<u8> {
    let s = s.trim().trim_matches('"').trim();
    let v: f64 = s.parse().ok()?;
    (v.fract() == 0.0 && (1.0..=10.0).contains(&v)).then_some(v as u8)
}

fn parse_tuple(body: &str) -> Result<ExtractionRecord, String> {
    let fields: Vec<&str> = if body.contains("<|>") {
        body.split("<|>").collect()
    } else {
        body.split('|').collect()
    };
    let kind = fields[0].trim().to_ascii_lowercase();
    if kind == ENTITY_TAG {
        if fields.len() < 4 {
            return Err("entity tuple needs name, type and description".into());
        }
        let name = strip_field(fields[1]);
        if name.is_empty() {
            return Err("empty entity name".into());
        }
        let entity_type: EntityType = strip_field(fields[2]).parse().map_err(|e| format!("{e}"))?;
        let description = strip_field(&fields[3..].join("|"));
        Ok(ExtractionRecord::Entity { name, entity_type, description })
    } else if kind == RELATIONSHIP_TAG {
        if fields.len() < 5 {
            return Err("relationship tuple needs source, target, description and strength".into());
        }
        let last = fields.len() - 1;
        let strength = parse_strength(fields[last])
            .ok_or_else(|| format!("strength `{}` is not an integer in 1..=10", fields[last].trim()))?;
        let source = strip_field(fields[1]);
        let target = strip_field(fields[2]);
        if source.is_empty() || target.is_empty() {
            return Err("empty relationship endpoint".into());
        }
        let description = strip_field(&fields[3..last].join("|"));
        Ok(ExtractionRecord::Relationship { source, target, description, strength })
    } else {
        Err(format!("unknown record kind {kind}"))
    }
}

/// Parse delimited tuples out of model output, ignoring surrounding prose.
///
/// Records may be separated by newlines or `##`. Entities are returned
/// first in `type_order` (stable within a type), then relationships whose
/// endpoints name an entity from the same output; endpoint spellings are
/// normalized to that entity's name.
pub fn parse_records(raw: &str, type_order: &[EntityType]) -> ParsedRecords {
    let mut entities = Vec::new();
    let mut relationships = Vec::new();
    let mut rejected = Vec::new();
    for piece in raw.lines().flat_map(|l| l.split("##")) {
        let lower = piece.to_ascii_lowercase();
        let Some(open) = lower.find("(\"entity\"").or_else(|| lower.find("(\"relationship\"")) else {
            continue;
        };
        let rest = &piece[open + 1..];
        let body = match rest.rfind(')') {
            Some(close) => &rest[..close],
            None => rest,
        };
        match parse_tuple(body) {
            Ok(r @ ExtractionRecord::Entity { .. }) => entities.push(r),
            Ok(r) => relationships.push(r),
            Err(why) => rejected.push((piece.trim().to_string(), why)),
        }
    }

    let rank = |t: &EntityType| type_order.iter().position(|o| o == t).unwrap_or(type_order.len());
    entities.sort_by_key(|r| match r {
        ExtractionRecord::Entity { entity_type, .. } => rank(entity_type),
        _ => unreachable!(),
    });

    let mut records = entities;
    let lookup = |name: &str, records: &[ExtractionRecord]| -> Option<String> {
        let f = fold(name);
        records.iter().find_map(|r| match r {
            ExtractionRecord::Entity { name, .. } if fold(name) == f => Some(name.clone()),
            _ => None,
        })
    };
    let mut kept = Vec::new();
    for r in relationships {
        let ExtractionRecord::Relationship { source, target, description, strength } = r else {
            unreachable!()
        };
        match (lookup(&source, &records), lookup(&target, &records)) {
            (Some(source), Some(target)) => {
                kept.push(ExtractionRecord::Relationship { source, target, description, strength })
            }
            _ => rejected.push((
                format!("{source} -> {target}"),
                "relationship endpoint is not an extracted entity".into(),
            )),
        }
    }
    records.extend(kept);
    ParsedRecords { records, rejected }
}

/// Run the unified extraction prompt over one resolved chunk.
pub fn extract_chunk(
    gateway: &Gateway,
    prompts: &PromptLibrary,
    chunk: &Chunk,
    types: &[EntityType],
) -> Result<ChunkRecords, KgError> {
    if chunk.is_empty() {
        return Ok(ChunkRecords { chunk_index: chunk.index, records: Vec::new() });
    }
    let prompt = prompts.render_kgc(&chunk.text, types)?;
    let raw = gateway.complete(&prompt)?;
    let parsed = parse_records(&raw, types);
    for (line, why) in &parsed.rejected {
        log::warn!("chunk {}: dropped record `{line}`: {why}", chunk.index);
    }
    if parsed.records.is_empty() && !parsed.rejected.is_empty() {
        return Err(KgError::ParseFailure {
            chunk_index: chunk.index,
            message: format!("none of {} record(s) could be parsed", parsed.rejected.len()),
        });
    }
    Ok(ChunkRecords { chunk_index: chunk.index, records: parsed.records })
}

/// Remove entities whose names contain a lexicon term, and every
/// relationship that touches a removed name.
pub fn filter_records(records: &[ExtractionRecord], lexicon: &FilterLexicon) -> Vec<ExtractionRecord> {
    let removed: Vec<String> = records
        .iter()
        .filter_map(|r| match r {
            ExtractionRecord::Entity { name, .. } if lexicon.matches(name) => Some(fold(name)),
            _ => None,
        })
        .collect();
    let gone = |n: &str| lexicon.matches(n) || removed.contains(&fold(n));
    records
        .iter()
        .filter(|r| match r {
            ExtractionRecord::Entity { name, .. } => !gone(name),
            ExtractionRecord::Relationship { source, target, .. } => !gone(source) && !gone(target),
        })
        .cloned()
        .collect()
}
