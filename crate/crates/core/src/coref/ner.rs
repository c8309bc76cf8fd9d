//! Stage 1: type-specific mention extraction for one chunk.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::CorefError;
use crate::corpus::Chunk;
use crate::entity_type::EntityType;
use crate::llm::Gateway;
use crate::prompts::{vars, PromptLibrary, TemplateId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkEntities {
    pub chunk_index: usize,
    pub entity_type: EntityType,
    pub proper_nouns: Vec<String>,
    pub noun_phrases: Vec<String>,
    pub descriptions: IndexMap<String, String>,
}

impl ChunkEntities {
    pub fn empty(chunk_index: usize, entity_type: EntityType) -> Self {
        ChunkEntities {
            chunk_index,
            entity_type,
            proper_nouns: Vec::new(),
            noun_phrases: Vec::new(),
            descriptions: IndexMap::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.proper_nouns.is_empty() && self.noun_phrases.is_empty()
    }

    /// All mentions, proper nouns first.
    pub fn mentions(&self) -> impl Iterator<Item = &String> {
        self.proper_nouns.iter().chain(&self.noun_phrases)
    }

    /// The `ENTITIES` object as shown to the mapping prompt.
    pub fn entities_json(&self) -> Value {
        json!({ "PROPER_NOUN": self.proper_nouns, "NOUN_PHRASE": self.noun_phrases })
    }

    pub fn descriptions_json(&self) -> Value {
        serde_json::to_value(&self.descriptions).expect("string map")
    }

    /// Validate and normalize a parsed NER response.
    ///
    /// `ENTITIES` may be an object with `PROPER_NOUN` / `NOUN_PHRASE` lists, or
    /// a list of single mentions such as `{"PROPER_NOUN": "L.R.C."}` or
    /// `{"text": "the driver", "kind": "NOUN_PHRASE", "entity_type": "Person"}`.
    /// Mentions tagged with a different entity type are dropped.
    pub fn from_response(chunk_index: usize, entity_type: EntityType, value: &Value) -> Result<Self, CorefError> {
        let obj = value
            .as_object()
            .ok_or_else(|| violation("response is not a JSON object"))?;
        let entities = obj.get("ENTITIES").ok_or_else(|| violation("missing ENTITIES"))?;
        let descriptions = obj
            .get("PROPER_NOUN_DESCRIPTION")
            .ok_or_else(|| violation("missing PROPER_NOUN_DESCRIPTION"))?;

        let mut proper = Vec::new();
        let mut phrases = Vec::new();
        match entities {
            Value::Object(map) => {
                for (key, target) in [("PROPER_NOUN", &mut proper), ("NOUN_PHRASE", &mut phrases)] {
                    match map.get(key) {
                        None | Some(Value::Null) => {}
                        Some(Value::Array(items)) => {
                            for item in items {
                                target.push(string_item(item, key)?);
                            }
                        }
                        Some(Value::String(s)) => target.push(s.clone()),
                        Some(_) => return Err(violation(&format!("ENTITIES.{key} must be a list of strings"))),
                    }
                }
            }
            Value::Array(items) => {
                for item in items {
                    let Some((kind, text, tagged)) = list_mention(item)? else { continue };
                    if let Some(tag) = tagged {
                        if tag != entity_type {
                            log::warn!(
                                "chunk {chunk_index}: dropping {tag} mention `{text}` from {entity_type} extraction"
                            );
                            continue;
                        }
                    }
                    if kind == "PROPER_NOUN" {
                        proper.push(text);
                    } else {
                        phrases.push(text);
                    }
                }
            }
            _ => return Err(violation("ENTITIES must be an object or a list")),
        }

        let desc_map = match descriptions {
            Value::Object(m) => m,
            Value::Null => &serde_json::Map::new(),
            _ => return Err(violation("PROPER_NOUN_DESCRIPTION must be an object")),
        };

        let proper_nouns = dedup_trimmed(proper);
        let noun_phrases: Vec<String> = dedup_trimmed(phrases)
            .into_iter()
            .filter(|p| {
                let conflict = proper_nouns.contains(p);
                if conflict {
                    log::warn!("chunk {chunk_index}: `{p}` listed as both proper noun and noun phrase; keeping proper noun");
                }
                !conflict
            })
            .collect();

        let mut descriptions = IndexMap::new();
        for (key, desc) in desc_map {
            let desc = match desc {
                Value::String(s) => s.trim().to_string(),
                Value::Null => continue,
                _ => return Err(violation("descriptions must be strings")),
            };
            let key = key.trim();
            if desc.is_empty() || key.is_empty() {
                continue;
            }
            match proper_nouns.iter().find(|p| p.as_str() == key) {
                Some(p) => {
                    descriptions.insert(p.clone(), desc);
                }
                None => log::warn!("chunk {chunk_index}: dropping description for unlisted proper noun `{key}`"),
            }
        }

        Ok(ChunkEntities { chunk_index, entity_type, proper_nouns, noun_phrases, descriptions })
    }
}

fn violation(msg: &str) -> CorefError {
    CorefError::SchemaViolation(msg.to_string())
}

fn string_item(item: &Value, key: &str) -> Result<String, CorefError> {
    item.as_str()
        .map(str::to_string)
        .ok_or_else(|| violation(&format!("ENTITIES.{key} must contain only strings")))
}

type ListMention = (&'static str, String, Option<EntityType>);

fn list_mention(item: &Value) -> Result<Option<ListMention>, CorefError> {
    let obj = item
        .as_object()
        .ok_or_else(|| violation("ENTITIES list items must be objects"))?;
    for kind in ["PROPER_NOUN", "NOUN_PHRASE"] {
        if let Some(v) = obj.get(kind) {
            return Ok(Some((kind, string_item(v, kind)?, None)));
        }
    }
    let kind = match obj.get("kind").or_else(|| obj.get("type")).and_then(Value::as_str) {
        Some(k) if k.eq_ignore_ascii_case("PROPER_NOUN") => "PROPER_NOUN",
        Some(k) if k.eq_ignore_ascii_case("NOUN_PHRASE") => "NOUN_PHRASE",
        _ => return Err(violation("ENTITIES list item lacks PROPER_NOUN / NOUN_PHRASE kind")),
    };
    let text = obj
        .get("text")
        .or_else(|| obj.get("mention"))
        .and_then(Value::as_str)
        .ok_or_else(|| violation("ENTITIES list item lacks text"))?;
    let tagged = match obj.get("entity_type").and_then(Value::as_str) {
        Some(t) => Some(t.parse::<EntityType>().map_err(|e| violation(&e.to_string()))?),
        None => None,
    };
    Ok(Some((kind, text.to_string(), tagged)))
}

fn dedup_trimmed(items: Vec<String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(items.len());
    for item in items {
        let t = item.trim();
        if !t.is_empty() && !out.iter().any(|o| o == t) {
            out.push(t.to_string());
        }
    }
    out
}

/// Run the NER prompt for one chunk and entity type.
pub fn extract_entities(
    gateway: &Gateway,
    prompts: &PromptLibrary,
    chunk: &Chunk,
    entity_type: EntityType,
) -> Result<ChunkEntities, CorefError> {
    if chunk.is_empty() {
        return Ok(ChunkEntities::empty(chunk.index, entity_type));
    }
    let prompt = prompts.render(TemplateId::Ner, Some(entity_type), &vars([("chunk_text", chunk.text.clone())]))?;
    let value = gateway.complete_json(&prompt)?;
    ChunkEntities::from_response(chunk.index, entity_type, &value)
}
