//! A deterministic stand-in for the language model, answering each prompt
//! from the scenario's ground truth.

use std::sync::{Arc, Mutex};

use linkkg::llm::{CompletionRequest, FixtureEntry, LlmBackend, LlmError, ReplayFixture};
use linkkg::prompts::{PromptLibrary, TemplateId, Vars};
use linkkg::text::{contains_phrase, fold, Haystack};
use linkkg::EntityType;
use serde_json::{json, Map, Value};

use crate::scenario::Scenario;
use crate::substitute::substitute;

fn between<'a>(text: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = text.find(open)? + open.len();
    let end = text.rfind(close)?;
    (end >= start).then(|| &text[start..end])
}

fn last_between<'a>(text: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = text.rfind(open)? + open.len();
    let end = text.rfind(close)?;
    (end >= start).then(|| &text[start..end])
}

fn first_position(text: &str, phrase: &str) -> Option<usize> {
    Haystack::new(text).find_all(phrase).first().map(|(s, _)| *s)
}

pub struct ScriptedModel {
    scenario: &'static Scenario,
    prompts: PromptLibrary,
}

impl ScriptedModel {
    pub fn new(scenario: &'static Scenario) -> Self {
        ScriptedModel { scenario, prompts: PromptLibrary::builtin() }
    }

    fn unrecognized(prompt: &str) -> LlmError {
        let head: String = prompt.chars().take(80).collect();
        LlmError::Transport(format!("scripted model does not recognize prompt starting `{head}`"))
    }

    /// The entity type whose rendering of `id` with `bound` reproduces `prompt`.
    fn identify(&self, id: TemplateId, prompt: &str, bound: &[(&str, &str)]) -> Option<EntityType> {
        let mut v = Vars::new();
        for (k, val) in bound {
            v.insert(k.to_string(), val.to_string());
        }
        EntityType::ALL
            .into_iter()
            .find(|&t| self.prompts.render(id, Some(t), &v).ok().as_deref() == Some(prompt))
    }

    fn answer(&self, prompt: &str) -> Result<String, LlmError> {
        if prompt.contains("-Real Data-") {
            let text = last_between(prompt, "<text>\n", "\n</text>").ok_or_else(|| Self::unrecognized(prompt))?;
            let expected = self
                .prompts
                .render_kgc(text, &EntityType::ALL)
                .map_err(|e| LlmError::Transport(e.to_string()))?;
            if expected != prompt {
                return Err(Self::unrecognized(prompt));
            }
            return Ok(self.extract(text));
        }
        if prompt.contains("<entities>") {
            let entities = between(prompt, "<entities>\n", "\n</entities>").ok_or_else(|| Self::unrecognized(prompt))?;
            let descriptions =
                between(prompt, "<descriptions>\n", "\n</descriptions>").ok_or_else(|| Self::unrecognized(prompt))?;
            let cache = between(prompt, "<prompt_cache>\n", "\n</prompt_cache>").ok_or_else(|| Self::unrecognized(prompt))?;
            let t = self
                .identify(
                    TemplateId::Map,
                    prompt,
                    &[("entities", entities), ("descriptions", descriptions), ("cache_json", cache)],
                )
                .ok_or_else(|| Self::unrecognized(prompt))?;
            return Ok(self.map(t, entities, cache));
        }
        if prompt.contains("<prompt_cache>") {
            let cache = between(prompt, "<prompt_cache>\n", "\n</prompt_cache>").ok_or_else(|| Self::unrecognized(prompt))?;
            let chunk = last_between(prompt, "<chunk>\n", "\n</chunk>").ok_or_else(|| Self::unrecognized(prompt))?;
            self.identify(TemplateId::Resolve, prompt, &[("cache_json", cache), ("chunk_text", chunk)])
                .ok_or_else(|| Self::unrecognized(prompt))?;
            let cache: Value = serde_json::from_str(cache).map_err(|e| LlmError::Transport(e.to_string()))?;
            let resolved = cache["RESOLVED_ENTITIES"].as_object().cloned().unwrap_or_default();
            return Ok(substitute(chunk, &resolved));
        }
        if prompt.contains("<chunk>") {
            let chunk = last_between(prompt, "<chunk>\n", "\n</chunk>").ok_or_else(|| Self::unrecognized(prompt))?;
            let t = self
                .identify(TemplateId::Ner, prompt, &[("chunk_text", chunk)])
                .ok_or_else(|| Self::unrecognized(prompt))?;
            return Ok(self.mentions(t, chunk));
        }
        Err(Self::unrecognized(prompt))
    }

    fn mentions(&self, t: EntityType, chunk: &str) -> String {
        let mut proper: Vec<(usize, &str)> = self
            .scenario
            .canonicals
            .iter()
            .filter(|c| c.entity_type == t)
            .filter_map(|c| first_position(chunk, c.name).map(|p| (p, c.name)))
            .collect();
        let mut phrases: Vec<(usize, &str)> = self
            .scenario
            .aliases
            .iter()
            .filter(|a| a.entity_type == t)
            .filter_map(|a| first_position(chunk, a.phrase).map(|p| (p, a.phrase)))
            .collect();
        proper.sort();
        phrases.sort();
        let descriptions: Map<String, Value> = proper
            .iter()
            .map(|(_, n)| {
                let d = self.scenario.canonical(t, n).expect("listed").description;
                (n.to_string(), Value::String(d.to_string()))
            })
            .collect();
        let v = json!({
            "ENTITIES": {
                "PROPER_NOUN": proper.iter().map(|(_, n)| *n).collect::<Vec<_>>(),
                "NOUN_PHRASE": phrases.iter().map(|(_, n)| *n).collect::<Vec<_>>(),
            },
            "PROPER_NOUN_DESCRIPTION": descriptions,
        });
        serde_json::to_string_pretty(&v).expect("json")
    }

    fn map(&self, t: EntityType, entities: &str, cache: &str) -> String {
        let entities: Value = serde_json::from_str(entities).unwrap_or(Value::Null);
        let cache: Value = serde_json::from_str(cache).unwrap_or(Value::Null);
        let list = |v: &Value| -> Vec<String> {
            v.as_array()
                .map(|a| a.iter().filter_map(|s| s.as_str().map(str::to_string)).collect())
                .unwrap_or_default()
        };
        let proper = list(&entities["PROPER_NOUN"]);
        let phrases = list(&entities["NOUN_PHRASE"]);
        let known_in_cache: Vec<String> = cache["AUXILIARY_DESCRIPTIONS"]
            .as_object()
            .map(|m| m.keys().map(|k| fold(k)).collect())
            .unwrap_or_default();
        let known = |name: &str| {
            let f = fold(name);
            known_in_cache.contains(&f) || proper.iter().any(|p| fold(p) == f)
        };

        let mut resolved = Map::new();
        for phrase in &phrases {
            let target = match self.scenario.alias(t, phrase) {
                Some(a) if !a.targets.is_empty() && a.targets.iter().all(|n| known(n)) => match a.targets {
                    [one] => json!(one),
                    many => json!(many),
                },
                _ => Value::Null,
            };
            resolved.insert(phrase.clone(), target);
        }
        let descriptions: Map<String, Value> = proper
            .iter()
            .filter_map(|p| {
                self.scenario
                    .canonical(t, p)
                    .map(|c| (c.name.to_string(), Value::String(c.description.to_string())))
            })
            .collect();
        let body = serde_json::to_string_pretty(&json!({
            "RESOLVED_ENTITIES": resolved,
            "AUXILIARY_DESCRIPTIONS": descriptions,
        }))
        .expect("json");
        format!("Here is the updated prompt cache.\n```json\n{body}\n```\n")
    }

    fn extract(&self, text: &str) -> String {
        let mut emitted: Vec<(&str, &str)> = Vec::new();
        let mut out = String::new();
        for e in self.scenario.entities {
            if let Some((_, name)) = e.surfaces.iter().find(|(trigger, _)| contains_phrase(text, trigger)) {
                out.push_str(&format!("(\"entity\"|{}|{}|{})\n", name, e.entity_type.name(), e.description));
                emitted.push((e.id, name));
            }
        }
        let name_of = |id: &str| emitted.iter().find(|(i, _)| *i == id).map(|(_, n)| *n);
        for r in self.scenario.relations {
            if let (Some(s), Some(t)) = (name_of(r.source), name_of(r.target)) {
                out.push_str(&format!("(\"relationship\"|{}|{}|{}|{})\n", s, t, r.description, r.strength));
            }
        }
        out
    }
}

impl LlmBackend for ScriptedModel {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        self.answer(&req.prompt)
    }
}

/// Answers with the scripted model and keeps every exchange.
#[derive(Clone)]
pub struct Collector {
    inner: Arc<ScriptedModel>,
    fixture: Arc<Mutex<ReplayFixture>>,
}

impl Collector {
    pub fn new(model: ScriptedModel) -> Self {
        Collector { inner: Arc::new(model), fixture: Arc::new(Mutex::new(ReplayFixture::default())) }
    }

    pub fn fixture(&self) -> ReplayFixture {
        self.fixture.lock().expect("collector lock").clone()
    }
}

impl LlmBackend for Collector {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let response = self.inner.complete(req)?;
        self.fixture.lock().expect("collector lock").insert(FixtureEntry::new(req, &response));
        Ok(response)
    }
}
