//! Prompt templates for the three coreference stages and graph extraction.
//!
//! Templates are plain text files with `{{name}}` placeholders, laid out as
//! `{ner,map,resolve,kgc}/<type slug>.txt` plus `kgc/main.txt`. The copies in
//! this crate's `prompts/` directory are compiled in as defaults; a directory
//! with the same layout can be loaded at runtime instead.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::entity_type::EntityType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateId {
    Ner,
    Map,
    Resolve,
    Kgc,
}

impl TemplateId {
    pub const ALL: [TemplateId; 4] = [TemplateId::Ner, TemplateId::Map, TemplateId::Resolve, TemplateId::Kgc];

    pub fn dir(self) -> &'static str {
        match self {
            TemplateId::Ner => "ner",
            TemplateId::Map => "map",
            TemplateId::Resolve => "resolve",
            TemplateId::Kgc => "kgc",
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("template {id}/{} is missing variable `{name}`", slug(*.entity_type))]
    MissingVariable {
        id: TemplateId,
        entity_type: Option<EntityType>,
        name: String,
    },
    #[error("no template {id}/{}", slug(*.entity_type))]
    UnknownTemplate {
        id: TemplateId,
        entity_type: Option<EntityType>,
    },
    #[error("failed to read template `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn slug(t: Option<EntityType>) -> &'static str {
    t.map(EntityType::slug).unwrap_or("main")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub entity_type: Option<EntityType>,
    pub body: String,
}

/// Variables bound at render time.
pub type Vars = BTreeMap<String, String>;

pub fn vars<const N: usize>(pairs: [(&str, String); N]) -> Vars {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

macro_rules! builtin {
    ($($dir:literal / $file:literal),* $(,)?) => {
        &[$(($dir, $file, include_str!(concat!("../prompts/", $dir, "/", $file, ".txt")))),*]
    };
}

const BUILTIN: &[(&str, &str, &str)] = builtin![
    "ner" / "person", "ner" / "location", "ner" / "organization", "ner" / "route",
    "ner" / "means_of_transportation", "ner" / "means_of_communication", "ner" / "smuggled_items",
    "map" / "person", "map" / "location", "map" / "organization", "map" / "route",
    "map" / "means_of_transportation", "map" / "means_of_communication", "map" / "smuggled_items",
    "resolve" / "person", "resolve" / "location", "resolve" / "organization", "resolve" / "route",
    "resolve" / "means_of_transportation", "resolve" / "means_of_communication", "resolve" / "smuggled_items",
    "kgc" / "person", "kgc" / "location", "kgc" / "organization", "kgc" / "route",
    "kgc" / "means_of_transportation", "kgc" / "means_of_communication", "kgc" / "smuggled_items",
    "kgc" / "main",
];

#[derive(Debug, Clone)]
pub struct PromptLibrary {
    templates: HashMap<(TemplateId, Option<EntityType>), PromptTemplate>,
}

impl Default for PromptLibrary {
    fn default() -> Self {
        Self::builtin()
    }
}

impl PromptLibrary {
    pub fn builtin() -> Self {
        let mut templates = HashMap::new();
        for (dir, file, body) in BUILTIN {
            let id = TemplateId::ALL.into_iter().find(|t| t.dir() == *dir).expect("known dir");
            let entity_type = if *file == "main" {
                None
            } else {
                Some(file.parse::<EntityType>().expect("builtin slug"))
            };
            templates.insert(
                (id, entity_type),
                PromptTemplate { id, entity_type, body: body.to_string() },
            );
        }
        PromptLibrary { templates }
    }

    /// Load every template from `dir`; all 29 files must be present.
    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        let mut templates = HashMap::new();
        for id in TemplateId::ALL {
            let mut keys: Vec<Option<EntityType>> = EntityType::ALL.into_iter().map(Some).collect();
            if id == TemplateId::Kgc {
                keys.push(None);
            }
            for entity_type in keys {
                let path = dir.join(id.dir()).join(format!("{}.txt", slug(entity_type)));
                let body = fs::read_to_string(&path).map_err(|source| PromptError::Io { path, source })?;
                templates.insert((id, entity_type), PromptTemplate { id, entity_type, body });
            }
        }
        Ok(PromptLibrary { templates })
    }

    pub fn template(&self, id: TemplateId, entity_type: Option<EntityType>) -> Result<&PromptTemplate, PromptError> {
        self.templates
            .get(&(id, entity_type))
            .ok_or(PromptError::UnknownTemplate { id, entity_type })
    }

    /// Render a template. For typed templates `entity_type`,
    /// `type_definition` and `type_examples` are bound automatically unless
    /// the caller supplies them.
    pub fn render(&self, id: TemplateId, entity_type: Option<EntityType>, vars: &Vars) -> Result<String, PromptError> {
        let template = self.template(id, entity_type)?;
        let mut bound = vars.clone();
        if let Some(t) = entity_type {
            bound.entry("entity_type".into()).or_insert_with(|| t.name().to_string());
            bound.entry("type_definition".into()).or_insert_with(|| t.definition().to_string());
            bound.entry("type_examples".into()).or_insert_with(|| t.examples().join("; "));
        }
        substitute(&template.body, &bound).map_err(|name| PromptError::MissingVariable { id, entity_type, name })
    }

    /// Render the unified extraction prompt for `types`, in the given order.
    pub fn render_kgc(&self, input_text: &str, types: &[EntityType]) -> Result<String, PromptError> {
        let mut definitions = String::new();
        for &t in types {
            definitions.push_str(&self.render(TemplateId::Kgc, Some(t), &Vars::new())?);
            if !definitions.ends_with('\n') {
                definitions.push('\n');
            }
        }
        let order = types.iter().map(|t| t.name()).collect::<Vec<_>>().join(", ");
        self.render(
            TemplateId::Kgc,
            None,
            &vars([
                ("type_definitions", definitions),
                ("entity_types", order),
                ("input_text", input_text.to_string()),
            ]),
        )
    }
}

fn is_placeholder_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Single pass: substituted values are never rescanned.
fn substitute(body: &str, vars: &Vars) -> Result<String, String> {
    let mut out = String::with_capacity(body.len());
    let mut rest = body;
    while let Some(open) = rest.find("{{") {
        let after = &rest[open + 2..];
        match after.find("}}") {
            Some(close) if is_placeholder_name(after[..close].trim()) => {
                let name = after[..close].trim();
                let value = vars.get(name).ok_or_else(|| name.to_string())?;
                out.push_str(&rest[..open]);
                out.push_str(value);
                rest = &after[close + 2..];
            }
            _ => {
                out.push_str(&rest[..open + 2]);
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// Names of all `{{placeholder}}`s in a body, in order of appearance.
pub fn placeholders(body: &str) -> Vec<String> {
    let mut names = Vec::new();
    let mut rest = body;
    while let Some(open) = rest.find("{{") {
        let after = &rest[open + 2..];
        match after.find("}}") {
            Some(close) if is_placeholder_name(after[..close].trim()) => {
                names.push(after[..close].trim().to_string());
                rest = &after[close + 2..];
            }
            _ => rest = after,
        }
    }
    names
}
