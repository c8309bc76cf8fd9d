use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand};
use linkkg::config::RunConfig;
use linkkg::corpus::{ingest, Document, Source};
use linkkg::eval::{self, CaseCounts};
use linkkg::kg::{ExportFormat, KnowledgeGraph};
use linkkg::llm::Mode;
use linkkg::pipeline::{self, discover, Evaluator, Pipeline, PipelineError};

#[derive(Parser)]
#[command(name = "linkkg", version, about = "Coreference-resolved knowledge graphs from legal case documents")]
struct Cli {
    #[command(flatten)]
    opts: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// TOML or JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    /// live, record or replay
    #[arg(long, global = true)]
    mode: Option<Mode>,
    #[arg(long, global = true)]
    endpoint: Option<String>,
    #[arg(long, global = true)]
    model: Option<String>,
    /// Replay source or record target
    #[arg(long, global = true)]
    fixture: Option<PathBuf>,
    #[arg(long, global = true)]
    chunk_size: Option<usize>,
    #[arg(long, global = true)]
    overlap: Option<usize>,
    /// Skip the gleaning pass over the cache
    #[arg(long, global = true)]
    no_glean: bool,
    /// Fail when an alias survives resolution
    #[arg(long, global = true)]
    strict: bool,
    /// Duplicate-cluster similarity threshold, in percent
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Reuse artifacts already in the work directory
    #[arg(long, global = true)]
    resume: bool,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Manual cluster and noise corrections
    #[arg(long, global = true)]
    overrides: Option<PathBuf>,
    /// Directory replacing the bundled prompt templates
    #[arg(long, global = true)]
    prompts: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve aliases type by type and write resolved.txt
    Resolve { inputs: Vec<PathBuf> },
    /// Build graph.json from resolved.txt in the work directory
    Extract,
    /// Compute duplication and noise for graphs
    Eval {
        /// graph.json files; defaults to every graph in the work directory
        graphs: Vec<PathBuf>,
    },
    /// resolve, extract and eval in one go
    Pipeline { inputs: Vec<PathBuf> },
    /// Show the cache entries behind every rewrite of an alias
    Trace {
        alias: String,
        /// Limit to one document id
        #[arg(long)]
        doc: Option<String>,
    },
    /// Convert graph.json to another format
    Export {
        graph: PathBuf,
        /// json, graphml or dot
        #[arg(long, default_value = "graphml")]
        format: ExportFormat,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn load_config(o: &Overrides) -> Result<RunConfig, PipelineError> {
    let mut c = match &o.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &o.workdir {
        c.workdir = v.clone();
    }
    if let Some(v) = o.mode {
        c.mode = v;
    }
    if let Some(v) = &o.endpoint {
        c.endpoint = Some(v.clone());
    }
    if let Some(v) = &o.model {
        c.model = v.clone();
    }
    if let Some(v) = &o.fixture {
        c.fixture = Some(v.clone());
    }
    if let Some(v) = o.chunk_size {
        c.chunk_size = v;
    }
    if let Some(v) = o.overlap {
        c.overlap = v;
    }
    if o.no_glean {
        c.gleaning = false;
    }
    if o.strict {
        c.strict_resolution = true;
    }
    if let Some(v) = o.threshold {
        c.dedup_threshold = v;
    }
    if let Some(v) = o.workers {
        c.workers = v;
    }
    if let Some(v) = &o.overrides {
        c.overrides = Some(v.clone());
    }
    if let Some(v) = &o.prompts {
        c.prompts_dir = Some(v.clone());
    }
    c.validate()?;
    Ok(c)
}

fn read_inputs(inputs: &[PathBuf]) -> Result<Vec<Document>> {
    if inputs.is_empty() {
        bail!("no input documents given");
    }
    let docs: Result<Vec<_>, PipelineError> = inputs.iter().map(|p| Ok(ingest(Source::Path(p))?)).collect();
    Ok(docs?)
}

fn print_table(rows: &[(String, CaseCounts)]) {
    print!("{}", eval::render_table(rows));
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli.opts)?;
    let resume = cli.opts.resume;
    match cli.command {
        Command::Resolve { inputs } => {
            let docs = read_inputs(&inputs)?;
            let p = Pipeline::new(config)?;
            let ids: Vec<&str> = docs.iter().map(|d| d.id.as_str()).collect();
            for (doc, dir) in docs.iter().zip(p.document_dirs(&ids)?) {
                p.resolve_document(doc, &dir, resume)?;
                println!("{}", dir.join("resolved.txt").display());
            }
        }
        Command::Extract => {
            let found = discover(&config.workdir, "resolved.txt")?;
            if found.is_empty() {
                bail!("no resolved.txt under {}", config.workdir.display());
            }
            let p = Pipeline::new(config)?;
            for (id, dir) in found {
                let path = dir.join("resolved.txt");
                let text = std::fs::read_to_string(&path).map_err(|e| anyhow!("reading {}: {e}", path.display()))?;
                let graph = p.extract_document(&id, text.trim_end(), &dir, resume)?;
                println!("{}: {} nodes, {} edges", dir.join("graph.json").display(), graph.nodes.len(), graph.edges.len());
            }
        }
        Command::Eval { graphs } => {
            let evaluator = Evaluator::from_config(&config)?;
            let targets: Vec<(String, PathBuf)> = if graphs.is_empty() {
                discover(&config.workdir, "graph.json")?
                    .into_iter()
                    .map(|(id, dir)| (id, dir.join("graph.json")))
                    .collect()
            } else {
                graphs.iter().map(|g| (graph_id(g), g.clone())).collect()
            };
            if targets.is_empty() {
                bail!("no graph.json under {}", config.workdir.display());
            }
            let mut rows = Vec::new();
            for (id, path) in targets {
                let graph = KnowledgeGraph::load(&path)?;
                let dir = path.parent().unwrap_or(Path::new("."));
                let report = evaluator.evaluate_into(&id, &graph, dir)?;
                rows.push((id, CaseCounts::from(&report)));
            }
            print_table(&rows);
        }
        Command::Pipeline { inputs } => {
            let docs = read_inputs(&inputs)?;
            let outcomes = Pipeline::new(config)?.run(&docs, resume)?;
            let rows: Vec<_> = outcomes.iter().map(|o| (o.meta.id.clone(), CaseCounts::from(&o.report))).collect();
            print_table(&rows);
        }
        Command::Trace { alias, doc } => {
            let mut hits = Vec::new();
            for (id, dir) in discover(&config.workdir, "provenance.jsonl")? {
                if doc.as_ref().is_some_and(|d| *d != id) {
                    continue;
                }
                for entry in pipeline::trace(&dir, &alias)? {
                    hits.push(serde_json::json!({ "document": id, "trace": entry }));
                }
            }
            if hits.is_empty() {
                bail!("no recorded resolution of `{alias}`");
            }
            for h in hits {
                println!("{}", serde_json::to_string_pretty(&h)?);
            }
        }
        Command::Export { graph, format, output } => {
            let g = KnowledgeGraph::load(&graph)?;
            match output {
                Some(path) => g.export(format, &path)?,
                None => print!("{}", g.render(format)),
            }
        }
    }
    Ok(())
}

fn graph_id(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    if stem != "graph" {
        return stem;
    }
    path.parent()
        .and_then(|d| d.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or(stem)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<PipelineError>() {
        return e.exit_code() as u8;
    }
    if let Some(e) = err.downcast_ref::<linkkg::kg::KgError>() {
        return match e {
            linkkg::kg::KgError::Io { .. } => 1,
            _ => 4,
        };
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
