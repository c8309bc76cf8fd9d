//! Scripted language model used to produce the replay fixtures bundled with
//! `linkkg-core`. Nothing here is needed at run time.

pub mod model;
pub mod scenario;
pub mod substitute;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use linkkg::config::RunConfig;
use linkkg::coref::PromptCache;
use linkkg::corpus::{chunk_tokens, ingest, Source};
use linkkg::llm::{CompletionRequest, FixtureEntry, Gateway, ReplayFixture, DEFAULT_MAX_OUTPUT, DEFAULT_MODEL};
use linkkg::pipeline::Pipeline;
use linkkg::prompts::PromptLibrary;
use linkkg::EntityType;
use serde::Deserialize;

use model::{Collector, ScriptedModel};

/// `crates/core/fixtures` in this workspace.
pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

/// Run the whole pipeline on the synthetic document against the scripted
/// model and return every exchange.
pub fn synthetic_fixture() -> Result<ReplayFixture> {
    let dir = fixtures_dir().join("synthetic");
    let doc = ingest(Source::Path(&dir.join("document.txt")))?;
    let work = tempfile::tempdir()?;
    let config = RunConfig { workdir: work.path().to_path_buf(), workers: 1, ..RunConfig::default() };
    let collector = Collector::new(ScriptedModel::new(&scenario::SYNTHETIC));
    let gateway = Gateway::new(Box::new(collector.clone()), DEFAULT_MODEL).with_max_output(DEFAULT_MAX_OUTPUT);
    Pipeline::with_gateway(config, gateway)?
        .run(&[doc], false)
        .context("pipeline run against the scripted model")?;
    Ok(collector.fixture())
}

#[derive(Debug, Clone, Deserialize)]
pub struct ResolverCase {
    pub name: String,
    pub kind: String,
    pub entity_type: EntityType,
    pub cache: serde_json::Value,
    pub text: String,
}

pub fn load_resolver_cases(path: &Path) -> Result<Vec<ResolverCase>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

/// Resolve-stage responses for the crafted resolver cases, produced by
/// independent substitution of each case's cache.
pub fn resolver_fixture(cases: &[ResolverCase]) -> Result<ReplayFixture> {
    let prompts = PromptLibrary::builtin();
    let mut fixture = ReplayFixture::default();
    for case in cases {
        let cache = PromptCache::from_json_value(case.entity_type, &case.cache)
            .with_context(|| format!("case {}", case.name))?;
        let tokens: Vec<&str> = case.text.split_whitespace().collect();
        let Some(chunk) = chunk_tokens(&case.name, &tokens, tokens.len() + 1, 0)?.into_iter().next() else {
            bail!("case {} has no text", case.name);
        };
        let prompt = linkkg::coref::resolve::resolve_prompt(&prompts, &chunk.text, &cache)?;
        let resolved = case.cache["RESOLVED_ENTITIES"].as_object().cloned().unwrap_or_default();
        let response = substitute::substitute(&chunk.text, &resolved);
        let req = CompletionRequest::new(DEFAULT_MODEL, prompt, DEFAULT_MAX_OUTPUT);
        fixture.insert(FixtureEntry::new(&req, &response));
    }
    Ok(fixture)
}

pub fn resolver_cases() -> Result<Vec<ResolverCase>> {
    load_resolver_cases(&fixtures_dir().join("resolver/cases.json"))
}

/// Regenerate both bundled fixture files.
pub fn write_all() -> Result<()> {
    let dir = fixtures_dir();
    synthetic_fixture()?.save(&dir.join("synthetic/llm.jsonl"))?;
    resolver_fixture(&resolver_cases()?)?.save(&dir.join("resolver/llm.jsonl"))?;
    Ok(())
}
