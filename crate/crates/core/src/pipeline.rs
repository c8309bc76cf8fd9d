//! End-to-end orchestration over a run directory.
//!
//! Per document directory:
//!
//! ```text
//! meta.json
//! stage1/<type>/<chunk>.json        mentions per chunk
//! stage2/<type>/cache.json          first-pass prompt cache
//! stage2/<type>/cache.gleaned.json  cache after the gleaning pass
//! stage3/<type>/<chunk>.txt         resolved chunk text
//! stage3/<type>/merged.txt          document after resolving this type
//! resolved.txt                      document after all types
//! provenance.jsonl                  which cache entries rewrote which chunks
//! extract/<chunk>.json              raw extraction records
//! graph.json                        assembled knowledge graph
//! report.json, report.txt           duplication and noise metrics
//! ```
//!
//! With a single input document the run directory is the document
//! directory; otherwise each document gets `<workdir>/<doc_id>/`.

use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, RunConfig};
use crate::coref::{self, ChunkEntities, CorefError, MergeError, PromptCache, ResolvedChunk};
use crate::corpus::{chunk_tokens, Chunk, CorpusError, Document, LengthClass};
use crate::entity_type::EntityType;
use crate::eval::{self, EvalError, EvaluationReport, NoiseRules, Overrides};
use crate::kg::{self, ChunkRecords, KgError, KnowledgeGraph};
use crate::lexicon::{FilterLexicon, LexiconError};
use crate::llm::{Gateway, HttpBackend, HttpConfig, LlmBackend, LlmError, Mode, RecordingBackend, ReplayBackend};
use crate::prompts::{PromptError, PromptLibrary};
use crate::text::{fold, Haystack};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Mentions,
    Cache,
    Gleaning,
    Resolve,
    Merge,
    Extract,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stage::Mentions => "stage 1 (mentions)",
            Stage::Cache => "stage 2 (cache)",
            Stage::Gleaning => "stage 2 (gleaning)",
            Stage::Resolve => "stage 3 (resolve)",
            Stage::Merge => "stage 3 (merge)",
            Stage::Extract => "extraction",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StageFailure {
    #[error(transparent)]
    Coref(#[from] CorefError),
    #[error(transparent)]
    Kg(#[from] KgError),
    #[error(transparent)]
    Merge(#[from] MergeError),
}

fn location(doc: &str, t: &Option<EntityType>, chunk: &Option<usize>) -> String {
    let mut s = format!("document `{doc}`");
    if let Some(t) = t {
        s.push_str(&format!(", {t}"));
    }
    if let Some(c) = chunk {
        s.push_str(&format!(", chunk {c}"));
    }
    s
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{stage} failed for {}: {source}", location(doc_id, entity_type, chunk))]
    Stage {
        stage: Stage,
        doc_id: String,
        entity_type: Option<EntityType>,
        chunk: Option<usize>,
        #[source]
        source: StageFailure,
    },
    #[error("artifact `{path}`: {message}")]
    Artifact { path: PathBuf, message: String },
    #[error("I/O on `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn llm_exit(e: &LlmError) -> i32 {
    match e {
        LlmError::ParseFailure(_) | LlmError::EmptyResponse => 4,
        _ => 3,
    }
}

impl PipelineError {
    /// Process exit status: 2 configuration, 3 model/transport, 4 validation, 1 other.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Lexicon(_) | PipelineError::Prompt(_) => 2,
            PipelineError::Corpus(CorpusError::InvalidParameters { .. }) => 2,
            PipelineError::Corpus(CorpusError::Io { .. }) => 2,
            PipelineError::Corpus(_) => 4,
            PipelineError::Llm(e) => llm_exit(e),
            PipelineError::Eval(EvalError::Io { .. }) => 2,
            PipelineError::Eval(_) => 4,
            PipelineError::Stage { source, .. } => match source {
                StageFailure::Coref(CorefError::Llm(e)) | StageFailure::Kg(KgError::Llm(e)) => llm_exit(e),
                StageFailure::Coref(CorefError::Prompt(_)) | StageFailure::Kg(KgError::Prompt(_)) => 2,
                StageFailure::Kg(KgError::Io { .. }) => 1,
                _ => 4,
            },
            PipelineError::Artifact { .. } => 4,
            PipelineError::Io { .. } => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

/// Write via a temporary sibling so an interrupted run never leaves a
/// truncated artifact behind for `--resume` to pick up.
pub fn write_artifact(path: &Path, content: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, content).map_err(io_err(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

fn read_artifact(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    serde_json::from_str(&read_artifact(path)?).map_err(|e| PipelineError::Artifact {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn to_json_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("artifact serializes");
    s.push('\n');
    s
}

/// Build the model gateway described by the config.
pub fn open_gateway(config: &RunConfig) -> Result<Gateway, PipelineError> {
    config.validate_llm()?;
    let http = || {
        let api_key = config.api_key_env.as_ref().and_then(|v| std::env::var(v).ok());
        HttpBackend::new(HttpConfig {
            endpoint: config.endpoint.clone().unwrap_or_default(),
            api: config.api,
            api_key,
            timeout: Duration::from_secs(config.timeout_secs),
            retries: config.retries,
            ..HttpConfig::default()
        })
    };
    let backend: Box<dyn LlmBackend> = match config.mode {
        Mode::Replay => Box::new(ReplayBackend::from_path(config.fixture.as_deref().expect("validated"))?),
        Mode::Live => Box::new(http()),
        Mode::Record => Box::new(RecordingBackend::new(http(), config.fixture.as_deref().expect("validated"))?),
    };
    Ok(Gateway::new(backend, config.model.clone()).with_max_output(config.max_output_tokens))
}

/// Clustering and metrics; needs no model.
pub struct Evaluator {
    pub threshold: f64,
    pub noise: NoiseRules,
    pub overrides: Option<Overrides>,
}

impl Evaluator {
    pub fn from_config(config: &RunConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        Ok(Evaluator {
            threshold: config.dedup_threshold,
            noise: NoiseRules::load(config.noise_lexicon.as_deref(), config.noise_org_lexicon.as_deref())?,
            overrides: config.overrides.as_deref().map(Overrides::load).transpose()?,
        })
    }

    pub fn evaluate(&self, graph: &KnowledgeGraph) -> Result<EvaluationReport, PipelineError> {
        let mut clusters = eval::cluster_graph(graph, self.threshold);
        if let Some(o) = &self.overrides {
            clusters = eval::apply_overrides(&clusters, o)?;
        }
        Ok(eval::report(graph, &clusters, &self.noise, self.overrides.as_ref())?)
    }

    /// Evaluate and write `report.json` / `report.txt` into `dir`.
    pub fn evaluate_into(&self, doc_id: &str, graph: &KnowledgeGraph, dir: &Path) -> Result<EvaluationReport, PipelineError> {
        let report = self.evaluate(graph)?;
        write_artifact(&dir.join("report.json"), &report.to_json())?;
        write_artifact(
            &dir.join("report.txt"),
            &eval::render_table(&[(doc_id.to_string(), (&report).into())]),
        )?;
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentMeta {
    pub id: String,
    pub word_count: usize,
    pub length_class: String,
}

impl From<&Document> for DocumentMeta {
    fn from(d: &Document) -> Self {
        let class = match d.length_class() {
            LengthClass::Short => "short",
            LengthClass::Long => "long",
        };
        DocumentMeta { id: d.id.clone(), word_count: d.word_count, length_class: class.into() }
    }
}

/// One line of `provenance.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub entity_type: EntityType,
    pub chunk: usize,
    pub alias: String,
    pub occurrences: usize,
    pub resolved_to: String,
    /// Cache file, relative to the document directory.
    pub cache: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocumentOutcome {
    pub meta: DocumentMeta,
    pub dir: PathBuf,
    pub report: EvaluationReport,
}

pub struct Pipeline {
    pub config: RunConfig,
    gateway: Gateway,
    prompts: PromptLibrary,
    government: FilterLexicon,
    evaluator: Evaluator,
    pool: rayon::ThreadPool,
}

impl Pipeline {
    pub fn new(config: RunConfig) -> Result<Self, PipelineError> {
        let gateway = open_gateway(&config)?;
        Self::with_gateway(config, gateway)
    }

    /// Use a caller-supplied gateway (tests, fixture generation).
    pub fn with_gateway(config: RunConfig, gateway: Gateway) -> Result<Self, PipelineError> {
        config.validate()?;
        let prompts = match &config.prompts_dir {
            Some(dir) => PromptLibrary::load_dir(dir)?,
            None => PromptLibrary::builtin(),
        };
        let government = match &config.government_lexicon {
            Some(p) => FilterLexicon::load(p)?,
            None => FilterLexicon::default_government(),
        };
        let evaluator = Evaluator::from_config(&config)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| ConfigError::Invalid(format!("cannot start worker pool: {e}")))?;
        Ok(Pipeline { config, gateway, prompts, government, evaluator, pool })
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }

    /// Directory for each document: the workdir itself for a single document.
    pub fn document_dirs(&self, ids: &[&str]) -> Result<Vec<PathBuf>, PipelineError> {
        let root = &self.config.workdir;
        if ids.len() == 1 {
            return Ok(vec![root.clone()]);
        }
        for (i, id) in ids.iter().enumerate() {
            if ids[..i].contains(id) {
                return Err(ConfigError::Invalid(format!("two inputs share the document id `{id}`")).into());
            }
        }
        Ok(ids.iter().map(|id| root.join(id)).collect())
    }

    fn chunks_of(&self, doc_id: &str, text: &str, overlap: usize) -> Result<Vec<Chunk>, PipelineError> {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        Ok(chunk_tokens(doc_id, &tokens, self.config.chunk_size, overlap)?)
    }

    fn stage_err(
        stage: Stage,
        doc_id: &str,
        t: Option<EntityType>,
        chunk: Option<usize>,
    ) -> impl FnOnce(StageFailure) -> PipelineError + '_ {
        move |source| PipelineError::Stage { stage, doc_id: doc_id.to_string(), entity_type: t, chunk, source }
    }

    /// Stages 1 → 2 (→ gleaning) → 3 for every configured type, in order.
    /// Returns the fully resolved text and writes `resolved.txt`.
    pub fn resolve_document(&self, doc: &Document, dir: &Path, resume: bool) -> Result<String, PipelineError> {
        write_artifact(&dir.join("meta.json"), &to_json_pretty(&DocumentMeta::from(doc)))?;
        let mut text = doc.tokens().join(" ");
        let mut provenance = Vec::new();
        for &t in &self.config.entity_types {
            text = self.resolve_type(&doc.id, &text, t, dir, resume, &mut provenance)?;
        }
        let lines: String = provenance.iter().map(|p| serde_json::to_string(p).expect("json") + "\n").collect();
        write_artifact(&dir.join("provenance.jsonl"), &lines)?;
        let mut out = text.clone();
        out.push('\n');
        write_artifact(&dir.join("resolved.txt"), &out)?;
        Ok(text)
    }

    fn resolve_type(
        &self,
        doc_id: &str,
        input: &str,
        t: EntityType,
        dir: &Path,
        resume: bool,
        provenance: &mut Vec<ProvenanceEntry>,
    ) -> Result<String, PipelineError> {
        let slug = t.slug();
        let chunks = self.chunks_of(doc_id, input, self.config.overlap)?;

        // Stage 1
        let s1 = dir.join("stage1").join(slug);
        let entities: Vec<ChunkEntities> = self.pool.install(|| {
            chunks
                .par_iter()
                .map(|c| {
                    let path = s1.join(format!("{}.json", c.index));
                    if resume && path.exists() {
                        return load_json(&path);
                    }
                    let e = coref::extract_entities(&self.gateway, &self.prompts, c, t)
                        .map_err(|e| Self::stage_err(Stage::Mentions, doc_id, Some(t), Some(c.index))(e.into()))?;
                    write_artifact(&path, &to_json_pretty(&e))?;
                    Ok(e)
                })
                .collect::<Result<_, PipelineError>>()
        })?;

        // Stage 2
        let s2 = dir.join("stage2").join(slug);
        let first = s2.join("cache.json");
        let mut cache = if resume && first.exists() {
            self.load_cache(t, &first)?
        } else {
            let mut cache = PromptCache::new(t);
            for e in &entities {
                cache = coref::update_cache(&self.gateway, &self.prompts, e, &cache)
                    .map_err(|err| Self::stage_err(Stage::Cache, doc_id, Some(t), Some(e.chunk_index))(err.into()))?;
            }
            write_artifact(&first, &cache.to_json())?;
            cache
        };
        let mut cache_name = format!("stage2/{slug}/cache.json");
        if self.config.gleaning {
            let gleaned = s2.join("cache.gleaned.json");
            cache = if resume && gleaned.exists() {
                self.load_cache(t, &gleaned)?
            } else {
                let mut current = cache;
                for e in &entities {
                    current = coref::update_cache(&self.gateway, &self.prompts, e, &current).map_err(|err| {
                        Self::stage_err(Stage::Gleaning, doc_id, Some(t), Some(e.chunk_index))(err.into())
                    })?;
                }
                write_artifact(&gleaned, &current.to_json())?;
                current
            };
            cache_name = format!("stage2/{slug}/cache.gleaned.json");
        }

        for c in &chunks {
            provenance.extend(chunk_provenance(c, &cache, &cache_name));
        }

        // Stage 3
        let s3 = dir.join("stage3").join(slug);
        let merged_path = s3.join("merged.txt");
        if resume && merged_path.exists() {
            return Ok(read_artifact(&merged_path)?.trim_end().to_string());
        }
        let resolved = self.resolve_chunks(doc_id, t, &chunks, &cache, &s3, resume)?;
        let merged = match coref::merge(&resolved, &chunks) {
            Ok(m) => m,
            Err(MergeError::AnchorNotFound(j)) => {
                log::warn!(
                    "document `{doc_id}`, {t}: overlap after chunk {j} could not be aligned; \
                     re-resolving without overlap"
                );
                let plain = self.chunks_of(doc_id, input, 0)?;
                let fallback_dir = s3.join("no_overlap");
                let resolved = self.resolve_chunks(doc_id, t, &plain, &cache, &fallback_dir, resume)?;
                coref::merge(&resolved, &plain).map_err(|e| Self::stage_err(Stage::Merge, doc_id, Some(t), None)(e.into()))?
            }
            Err(e) => return Err(Self::stage_err(Stage::Merge, doc_id, Some(t), None)(e.into())),
        };
        write_artifact(&merged_path, &format!("{merged}\n"))?;
        Ok(merged)
    }

    fn resolve_chunks(
        &self,
        doc_id: &str,
        t: EntityType,
        chunks: &[Chunk],
        cache: &PromptCache,
        dir: &Path,
        resume: bool,
    ) -> Result<Vec<ResolvedChunk>, PipelineError> {
        self.pool.install(|| {
            chunks
                .par_iter()
                .map(|c| {
                    let path = dir.join(format!("{}.txt", c.index));
                    if resume && path.exists() {
                        return Ok(ResolvedChunk {
                            chunk_index: c.index,
                            text: read_artifact(&path)?.trim_end().to_string(),
                            rewritten_by_model: true,
                            residuals: Vec::new(),
                        });
                    }
                    let r = coref::resolve_chunk(&self.gateway, &self.prompts, c, cache, self.config.strict_resolution)
                        .map_err(|e| Self::stage_err(Stage::Resolve, doc_id, Some(t), Some(c.index))(e.into()))?;
                    write_artifact(&path, &format!("{}\n", r.text))?;
                    Ok(r)
                })
                .collect()
        })
    }

    fn load_cache(&self, t: EntityType, path: &Path) -> Result<PromptCache, PipelineError> {
        PromptCache::from_json(t, &read_artifact(path)?).map_err(|e| PipelineError::Artifact {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Re-chunk resolved text, extract records, filter, assemble; writes `graph.json`.
    pub fn extract_document(
        &self,
        doc_id: &str,
        resolved: &str,
        dir: &Path,
        resume: bool,
    ) -> Result<KnowledgeGraph, PipelineError> {
        let graph_path = dir.join("graph.json");
        if resume && graph_path.exists() {
            return KnowledgeGraph::load(&graph_path)
                .map_err(|e| PipelineError::Artifact { path: graph_path.clone(), message: e.to_string() });
        }
        let chunks = self.chunks_of(doc_id, resolved, self.config.overlap)?;
        let types = &self.config.entity_types;
        let out = dir.join("extract");
        let records: Vec<ChunkRecords> = self.pool.install(|| {
            chunks
                .par_iter()
                .map(|c| {
                    let path = out.join(format!("{}.json", c.index));
                    if resume && path.exists() {
                        return load_json(&path);
                    }
                    let r = kg::extract_chunk(&self.gateway, &self.prompts, c, types)
                        .map_err(|e| Self::stage_err(Stage::Extract, doc_id, None, Some(c.index))(e.into()))?;
                    write_artifact(&path, &to_json_pretty(&r))?;
                    Ok(r)
                })
                .collect::<Result<_, PipelineError>>()
        })?;
        let filtered: Vec<ChunkRecords> = records
            .iter()
            .map(|c| ChunkRecords {
                chunk_index: c.chunk_index,
                records: kg::filter_records(&c.records, &self.government),
            })
            .collect();
        let graph = kg::assemble(&filtered, self.config.merge_case_sensitive);
        write_artifact(&graph_path, &graph.to_json())?;
        Ok(graph)
    }

    /// Resolve, extract and evaluate one document.
    pub fn run_document(&self, doc: &Document, dir: &Path, resume: bool) -> Result<DocumentOutcome, PipelineError> {
        let resolved_path = dir.join("resolved.txt");
        let resolved = if resume && resolved_path.exists() {
            read_artifact(&resolved_path)?.trim_end().to_string()
        } else {
            self.resolve_document(doc, dir, resume)?
        };
        let graph = self.extract_document(&doc.id, &resolved, dir, resume)?;
        let report = self.evaluator.evaluate_into(&doc.id, &graph, dir)?;
        Ok(DocumentOutcome { meta: DocumentMeta::from(doc), dir: dir.to_path_buf(), report })
    }

    /// The full pipeline over several documents, in parallel up to the
    /// worker limit. With more than one document a combined table is
    /// written to `<workdir>/summary.txt`.
    pub fn run(&self, docs: &[Document], resume: bool) -> Result<Vec<DocumentOutcome>, PipelineError> {
        let ids: Vec<&str> = docs.iter().map(|d| d.id.as_str()).collect();
        let dirs = self.document_dirs(&ids)?;
        let outcomes: Vec<DocumentOutcome> = self.pool.install(|| {
            docs.par_iter()
                .zip(dirs.par_iter())
                .map(|(d, dir)| self.run_document(d, dir, resume))
                .collect::<Result<_, _>>()
        })?;
        if outcomes.len() > 1 {
            let rows: Vec<(String, eval::CaseCounts)> =
                outcomes.iter().map(|o| (o.meta.id.clone(), (&o.report).into())).collect();
            write_artifact(&self.config.workdir.join("summary.txt"), &eval::render_table(&rows))?;
        }
        Ok(outcomes)
    }
}

fn chunk_provenance(chunk: &Chunk, cache: &PromptCache, cache_name: &str) -> Vec<ProvenanceEntry> {
    let hay = Haystack::new(&chunk.text);
    cache
        .resolvable_aliases()
        .into_iter()
        .filter_map(|(alias, target)| {
            let n = hay.find_all(alias).len();
            (n > 0).then(|| ProvenanceEntry {
                entity_type: cache.entity_type,
                chunk: chunk.index,
                alias: alias.to_string(),
                occurrences: n,
                resolved_to: target.rendered().expect("resolvable"),
                cache: cache_name.to_string(),
            })
        })
        .collect()
}

/// A provenance record together with the cache entry behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub provenance: ProvenanceEntry,
    /// `{alias: target}` exactly as stored in the cache.
    pub cache_entry: serde_json::Value,
    /// Descriptions of the canonical names the alias resolved to.
    pub descriptions: serde_json::Map<String, serde_json::Value>,
}

/// Look up every resolution of `alias` (case-insensitive) recorded in a
/// document directory.
pub fn trace(dir: &Path, alias: &str) -> Result<Vec<TraceEntry>, PipelineError> {
    let path = dir.join("provenance.jsonl");
    let text = read_artifact(&path)?;
    let wanted = fold(alias);
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let p: ProvenanceEntry = serde_json::from_str(line).map_err(|e| PipelineError::Artifact {
            path: path.clone(),
            message: format!("line {}: {e}", i + 1),
        })?;
        if fold(&p.alias) != wanted {
            continue;
        }
        let cache_path = dir.join(&p.cache);
        let cache = PromptCache::from_json(p.entity_type, &read_artifact(&cache_path)?).map_err(|e| {
            PipelineError::Artifact { path: cache_path.clone(), message: e.to_string() }
        })?;
        let value = cache.to_json_value();
        let key = cache.alias_key(&p.alias).cloned().unwrap_or_else(|| p.alias.clone());
        let mut entry = serde_json::Map::new();
        entry.insert(key.clone(), value[coref::cache::RESOLVED_KEY][&key].clone());
        let descriptions = cache
            .target(&key)
            .map(|t| t.names().to_vec())
            .unwrap_or_default()
            .into_iter()
            .filter_map(|n| {
                let k = cache.canonical_key(&n)?.clone();
                let d = cache.auxiliary_descriptions[&k].clone();
                Some((k, serde_json::Value::String(d)))
            })
            .collect();
        out.push(TraceEntry { provenance: p, cache_entry: serde_json::Value::Object(entry), descriptions });
    }
    Ok(out)
}

/// Document directories under `workdir` that contain `file`: the workdir
/// itself, or its immediate subdirectories in name order.
pub fn discover(workdir: &Path, file: &str) -> Result<Vec<(String, PathBuf)>, PipelineError> {
    if workdir.join(file).exists() {
        let id = load_json::<DocumentMeta>(&workdir.join("meta.json"))
            .map(|m| m.id)
            .unwrap_or_else(|_| dir_name(workdir));
        return Ok(vec![(id, workdir.to_path_buf())]);
    }
    let mut found = Vec::new();
    let entries = std::fs::read_dir(workdir).map_err(io_err(workdir))?;
    for entry in entries {
        let path = entry.map_err(io_err(workdir))?.path();
        if path.is_dir() && path.join(file).exists() {
            found.push((dir_name(&path), path));
        }
    }
    found.sort();
    Ok(found)
}

fn dir_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "document".into())
}
