//! Stage 2: the type-specific prompt cache.
//!
//! The cache maps aliases to canonical names and keeps a short description
//! for every canonical name. Its JSON form, an object with
//! `RESOLVED_ENTITIES` and `AUXILIARY_DESCRIPTIONS`, is both the on-disk
//! artifact and what the mapping and resolve prompts see.
//!
//! Model output is merged into the prior cache rather than replacing it:
//! aliases are never deleted, a remapped alias takes the newest target, and
//! any canonical name the model references without describing gets an
//! `(unknown)` placeholder that the gleaning pass is asked to complete.

use indexmap::IndexMap;
use serde_json::{Map, Value};

use super::ner::ChunkEntities;
use super::CorefError;
use crate::entity_type::EntityType;
use crate::llm::Gateway;
use crate::prompts::{vars, PromptLibrary, TemplateId};
use crate::text::fold;

pub const UNKNOWN_DESCRIPTION: &str = "(unknown)";
pub const RESOLVED_KEY: &str = "RESOLVED_ENTITIES";
pub const AUXILIARY_KEY: &str = "AUXILIARY_DESCRIPTIONS";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CanonicalTarget {
    Single(String),
    /// Two or more distinct canonical names, in order.
    Multiple(Vec<String>),
    Unresolved,
}

impl CanonicalTarget {
    pub fn names(&self) -> &[String] {
        match self {
            CanonicalTarget::Single(n) => std::slice::from_ref(n),
            CanonicalTarget::Multiple(ns) => ns,
            CanonicalTarget::Unresolved => &[],
        }
    }

    pub fn is_resolved(&self) -> bool {
        !matches!(self, CanonicalTarget::Unresolved)
    }

    /// Text inserted in place of an alias: `A`, `A and B`, or `A, B, and C`.
    pub fn rendered(&self) -> Option<String> {
        match self {
            CanonicalTarget::Unresolved => None,
            CanonicalTarget::Single(n) => Some(n.clone()),
            CanonicalTarget::Multiple(ns) if ns.len() == 2 => Some(format!("{} and {}", ns[0], ns[1])),
            CanonicalTarget::Multiple(ns) => {
                let (last, head) = ns.split_last().expect("non-empty");
                Some(format!("{}, and {}", head.join(", "), last))
            }
        }
    }

    fn to_json(&self) -> Value {
        match self {
            CanonicalTarget::Single(n) => Value::String(n.clone()),
            CanonicalTarget::Multiple(ns) => Value::Array(ns.iter().cloned().map(Value::String).collect()),
            CanonicalTarget::Unresolved => Value::Null,
        }
    }

    /// Lenient conversion used for model output: duplicates and blanks are
    /// dropped, one remaining name becomes `Single`, none becomes `Unresolved`.
    fn from_model(v: &Value) -> Result<Self, CorefError> {
        let names: Vec<&str> = match v {
            Value::Null => vec![],
            Value::String(s) => vec![s.as_str()],
            Value::Array(items) => items
                .iter()
                .map(|i| {
                    i.as_str()
                        .ok_or_else(|| CorefError::SchemaViolation("target lists must contain strings".into()))
                })
                .collect::<Result<_, _>>()?,
            _ => return Err(CorefError::SchemaViolation(format!("invalid alias target {v}"))),
        };
        let mut out: Vec<String> = Vec::new();
        for n in names {
            let n = n.trim();
            if !n.is_empty() && !out.iter().any(|o| fold(o) == fold(n)) {
                out.push(n.to_string());
            }
        }
        Ok(match out.len() {
            0 => CanonicalTarget::Unresolved,
            1 => CanonicalTarget::Single(out.pop().expect("one")),
            _ => CanonicalTarget::Multiple(out),
        })
    }

    /// Strict conversion used when loading a stored cache.
    fn from_stored(alias: &str, v: &Value) -> Result<Self, CorefError> {
        let bad = |why: &str| CorefError::SchemaViolation(format!("alias `{alias}`: {why}"));
        match v {
            Value::Null => Ok(CanonicalTarget::Unresolved),
            Value::String(s) if s.trim().is_empty() => Err(bad("empty canonical name")),
            Value::String(s) => Ok(CanonicalTarget::Single(s.clone())),
            Value::Array(items) => {
                let names: Vec<String> = items
                    .iter()
                    .map(|i| i.as_str().map(str::to_string).ok_or_else(|| bad("non-string in target list")))
                    .collect::<Result<_, _>>()?;
                if names.len() < 2 {
                    return Err(bad("target lists need at least two names"));
                }
                for (i, n) in names.iter().enumerate() {
                    if n.trim().is_empty() || names[..i].iter().any(|m| fold(m) == fold(n)) {
                        return Err(bad("target list has blank or duplicate names"));
                    }
                }
                Ok(CanonicalTarget::Multiple(names))
            }
            _ => Err(bad("target must be a string, a list of strings, or null")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptCache {
    pub entity_type: EntityType,
    pub resolved_entities: IndexMap<String, CanonicalTarget>,
    pub auxiliary_descriptions: IndexMap<String, String>,
    /// Incremented on every update; not persisted.
    pub revision: u64,
}

impl PromptCache {
    pub fn new(entity_type: EntityType) -> Self {
        PromptCache {
            entity_type,
            resolved_entities: IndexMap::new(),
            auxiliary_descriptions: IndexMap::new(),
            revision: 0,
        }
    }

    /// Same mappings and descriptions, ignoring revision.
    pub fn same_content(&self, other: &PromptCache) -> bool {
        self.entity_type == other.entity_type
            && self.resolved_entities == other.resolved_entities
            && self.auxiliary_descriptions == other.auxiliary_descriptions
    }

    pub fn alias_key(&self, alias: &str) -> Option<&String> {
        let f = fold(alias);
        self.resolved_entities.keys().find(|k| fold(k) == f)
    }

    pub fn target(&self, alias: &str) -> Option<&CanonicalTarget> {
        self.alias_key(alias).and_then(|k| self.resolved_entities.get(k))
    }

    pub fn canonical_key(&self, name: &str) -> Option<&String> {
        let f = fold(name);
        self.auxiliary_descriptions.keys().find(|k| fold(k) == f)
    }

    /// Canonical names whose description is still the placeholder.
    pub fn flagged(&self) -> Vec<&str> {
        self.auxiliary_descriptions
            .iter()
            .filter(|(_, d)| d.as_str() == UNKNOWN_DESCRIPTION)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    /// Aliases with a resolved target, longest first.
    pub fn resolvable_aliases(&self) -> Vec<(&str, &CanonicalTarget)> {
        let mut v: Vec<_> = self
            .resolved_entities
            .iter()
            .filter(|(_, t)| t.is_resolved())
            .map(|(a, t)| (a.as_str(), t))
            .collect();
        v.sort_by(|a, b| b.0.chars().count().cmp(&a.0.chars().count()).then(a.0.cmp(b.0)));
        v
    }

    pub fn to_json_value(&self) -> Value {
        let resolved: Map<String, Value> = self
            .resolved_entities
            .iter()
            .map(|(k, v)| (k.clone(), v.to_json()))
            .collect();
        let aux: Map<String, Value> = self
            .auxiliary_descriptions
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        let mut root = Map::new();
        root.insert(RESOLVED_KEY.into(), Value::Object(resolved));
        root.insert(AUXILIARY_KEY.into(), Value::Object(aux));
        Value::Object(root)
    }

    /// Canonical serialization: pretty-printed, insertion order, trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value()).expect("cache serializes");
        s.push('\n');
        s
    }

    pub fn from_json(entity_type: EntityType, json: &str) -> Result<Self, CorefError> {
        let value: Value =
            serde_json::from_str(json).map_err(|e| CorefError::SchemaViolation(format!("invalid cache JSON: {e}")))?;
        Self::from_json_value(entity_type, &value)
    }

    pub fn from_json_value(entity_type: EntityType, value: &Value) -> Result<Self, CorefError> {
        let bad = |m: String| CorefError::SchemaViolation(m);
        let obj = value.as_object().ok_or_else(|| bad("cache must be a JSON object".into()))?;
        let resolved = obj
            .get(RESOLVED_KEY)
            .and_then(Value::as_object)
            .ok_or_else(|| bad(format!("missing object {RESOLVED_KEY}")))?;
        let aux = obj
            .get(AUXILIARY_KEY)
            .and_then(Value::as_object)
            .ok_or_else(|| bad(format!("missing object {AUXILIARY_KEY}")))?;
        if let Some(extra) = obj.keys().find(|k| *k != RESOLVED_KEY && *k != AUXILIARY_KEY) {
            return Err(bad(format!("unexpected key `{extra}`")));
        }

        let mut cache = PromptCache::new(entity_type);
        for (canon, desc) in aux {
            let desc = desc
                .as_str()
                .ok_or_else(|| bad(format!("description of `{canon}` is not a string")))?;
            if cache.canonical_key(canon).is_some() {
                return Err(bad(format!("duplicate canonical name `{canon}`")));
            }
            cache.auxiliary_descriptions.insert(canon.clone(), desc.to_string());
        }
        for (alias, target) in resolved {
            if cache.alias_key(alias).is_some() {
                return Err(bad(format!("alias `{alias}` collides with an existing alias (case-insensitive)")));
            }
            let target = CanonicalTarget::from_stored(alias, target)?;
            cache.resolved_entities.insert(alias.clone(), target);
        }
        cache.check_invariants()?;
        Ok(cache)
    }

    pub fn check_invariants(&self) -> Result<(), CorefError> {
        let bad = |m: String| Err(CorefError::SchemaViolation(m));
        let mut seen = std::collections::HashSet::new();
        for (alias, target) in &self.resolved_entities {
            if !seen.insert(fold(alias)) {
                return bad(format!("duplicate alias `{alias}`"));
            }
            if let CanonicalTarget::Multiple(ns) = target {
                let distinct: std::collections::HashSet<_> = ns.iter().map(|n| fold(n)).collect();
                if ns.len() < 2 || distinct.len() != ns.len() {
                    return bad(format!("alias `{alias}` has a malformed target list"));
                }
            }
            for name in target.names() {
                if self.canonical_key(name).is_none() {
                    return bad(format!("alias `{alias}` references `{name}`, absent from {AUXILIARY_KEY}"));
                }
            }
        }
        for (canon, desc) in &self.auxiliary_descriptions {
            if desc.trim().is_empty() {
                return bad(format!("empty description for `{canon}`"));
            }
        }
        Ok(())
    }
}

/// Merge one mapping-model response into `prior`, enforcing the cache invariants.
pub fn apply_mapping_response(
    entities: &ChunkEntities,
    prior: &PromptCache,
    response: &Value,
) -> Result<PromptCache, CorefError> {
    let obj = response
        .as_object()
        .ok_or_else(|| CorefError::SchemaViolation("mapping response is not an object".into()))?;
    let resolved = match obj.get(RESOLVED_KEY) {
        Some(Value::Object(m)) => m,
        _ => return Err(CorefError::SchemaViolation(format!("missing object {RESOLVED_KEY}"))),
    };
    let aux = match obj.get(AUXILIARY_KEY) {
        Some(Value::Object(m)) => m.clone(),
        Some(Value::Null) | None => Map::new(),
        _ => return Err(CorefError::SchemaViolation(format!("{AUXILIARY_KEY} must be an object"))),
    };

    let mut cache = prior.clone();
    cache.revision += 1;
    let chunk = entities.chunk_index;

    for (canon, desc) in &aux {
        let canon = canon.trim();
        if canon.is_empty() {
            continue;
        }
        let desc = match desc {
            Value::String(s) => s.trim().to_string(),
            Value::Null => String::new(),
            _ => return Err(CorefError::SchemaViolation(format!("description of `{canon}` is not a string"))),
        };
        match cache.canonical_key(canon).cloned() {
            Some(key) if desc.is_empty() => {
                log::debug!("chunk {chunk}: keeping description of `{key}` over empty update");
            }
            Some(key) => {
                cache.auxiliary_descriptions.insert(key, desc);
            }
            None => {
                let desc = if desc.is_empty() { UNKNOWN_DESCRIPTION.to_string() } else { desc };
                cache.auxiliary_descriptions.insert(canon.to_string(), desc);
            }
        }
    }

    let chunk_mentions: Vec<String> = entities.mentions().map(|m| fold(m)).collect();
    let chunk_proper: Vec<String> = entities.proper_nouns.iter().map(|m| fold(m)).collect();

    for (alias, target) in resolved {
        let alias = alias.trim();
        if alias.is_empty() {
            continue;
        }
        let folded = fold(alias);
        // Context-qualified keys ("the driver in the patrol car") extend a mention.
        let admissible = prior.alias_key(alias).is_some()
            || chunk_mentions.iter().any(|m| *m == folded || folded.contains(m.as_str()));
        if !admissible {
            log::warn!("chunk {chunk}: dropping alias `{alias}` absent from this chunk's mentions and the cache");
            continue;
        }
        let mut target = CanonicalTarget::from_model(target)?;
        if let CanonicalTarget::Single(name) = &target {
            let is_proper = chunk_proper.contains(&folded) || cache.canonical_key(alias).is_some();
            if fold(name) == folded && !is_proper {
                log::warn!("chunk {chunk}: alias `{alias}` maps to itself; treating as unresolved");
                target = CanonicalTarget::Unresolved;
            }
        }
        // Reuse the stored spelling of known canonical names.
        target = match target {
            CanonicalTarget::Single(n) => CanonicalTarget::Single(cache.canonical_key(&n).cloned().unwrap_or(n)),
            CanonicalTarget::Multiple(ns) => CanonicalTarget::Multiple(
                ns.into_iter()
                    .map(|n| cache.canonical_key(&n).cloned().unwrap_or(n))
                    .collect(),
            ),
            t => t,
        };
        match cache.alias_key(alias).cloned() {
            Some(key) => {
                let previous = cache.resolved_entities.insert(key.clone(), target.clone());
                if previous.as_ref() != Some(&target) {
                    log::info!("chunk {chunk}: alias `{key}` remapped from {previous:?} to {target:?}");
                }
            }
            None => {
                cache.resolved_entities.insert(alias.to_string(), target);
            }
        }
    }

    // Referential closure: every referenced canonical name gets a description.
    let referenced: Vec<String> = cache
        .resolved_entities
        .values()
        .flat_map(|t| t.names().iter().cloned())
        .collect();
    for name in referenced {
        if cache.canonical_key(&name).is_none() {
            let desc = stage1_description(entities, &name).unwrap_or_else(|| {
                log::warn!("chunk {chunk}: canonical `{name}` has no description; flagged for gleaning");
                UNKNOWN_DESCRIPTION.to_string()
            });
            cache.auxiliary_descriptions.insert(name, desc);
        }
    }
    // Fill placeholders whenever this chunk describes the entity.
    let flagged: Vec<String> = cache.flagged().into_iter().map(str::to_string).collect();
    for name in flagged {
        if let Some(desc) = stage1_description(entities, &name) {
            cache.auxiliary_descriptions.insert(name, desc);
        }
    }

    cache.check_invariants()?;
    Ok(cache)
}

fn stage1_description(entities: &ChunkEntities, name: &str) -> Option<String> {
    let f = fold(name);
    entities
        .descriptions
        .iter()
        .find(|(k, _)| fold(k) == f)
        .map(|(_, d)| d.clone())
}

pub fn mapping_prompt(prompts: &PromptLibrary, entities: &ChunkEntities, cache: &PromptCache) -> Result<String, CorefError> {
    let pretty = |v: &Value| serde_json::to_string_pretty(v).expect("json");
    Ok(prompts.render(
        TemplateId::Map,
        Some(cache.entity_type),
        &vars([
            ("entities", pretty(&entities.entities_json())),
            ("descriptions", pretty(&entities.descriptions_json())),
            ("cache_json", cache.to_json().trim_end().to_string()),
        ]),
    )?)
}

/// Fold one chunk's mentions into the cache via the mapping model.
pub fn update_cache(
    gateway: &Gateway,
    prompts: &PromptLibrary,
    entities: &ChunkEntities,
    cache: &PromptCache,
) -> Result<PromptCache, CorefError> {
    if entities.entity_type != cache.entity_type {
        return Err(CorefError::TypeMismatch {
            expected: cache.entity_type,
            found: entities.entity_type,
        });
    }
    if entities.is_empty() {
        let mut next = cache.clone();
        next.revision += 1;
        return Ok(next);
    }
    let prompt = mapping_prompt(prompts, entities, cache)?;
    let response = gateway.complete_json(&prompt)?;
    apply_mapping_response(entities, cache, &response)
}

/// Second pass over every chunk, seeded with the first-pass cache.
pub fn glean(
    gateway: &Gateway,
    prompts: &PromptLibrary,
    all_chunk_entities: &[ChunkEntities],
    cache: &PromptCache,
) -> Result<PromptCache, CorefError> {
    let mut current = cache.clone();
    for entities in all_chunk_entities {
        current = update_cache(gateway, prompts, entities, &current)?;
    }
    Ok(current)
}
