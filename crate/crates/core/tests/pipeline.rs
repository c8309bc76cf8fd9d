use std::fs;
use std::path::{Path, PathBuf};

use linkkg::config::RunConfig;
use linkkg::corpus::{ingest, Source};
use linkkg::kg::KnowledgeGraph;
use linkkg::pipeline::{trace, Pipeline, PipelineError};

fn synthetic() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic")
}

fn run_into(workdir: &Path) -> Result<(), PipelineError> {
    let mut config = RunConfig::load(&synthetic().join("run.toml"))?;
    config.workdir = workdir.to_path_buf();
    let doc = ingest(Source::Path(&synthetic().join("document.txt")))?;
    Pipeline::new(config)?.run(&[doc], false)?;
    Ok(())
}

const ARTIFACTS: [&str; 5] = [
    "stage2/person/cache.gleaned.json",
    "resolved.txt",
    "graph.json",
    "report.json",
    "provenance.jsonl",
];

#[test]
fn replay_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_into(a.path()).unwrap();
    run_into(b.path()).unwrap();
    for name in ARTIFACTS {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }
}

#[test]
fn resolved_text_grounds_plurals_only_when_named() {
    let dir = tempfile::tempdir().unwrap();
    run_into(dir.path()).unwrap();
    let resolved = fs::read_to_string(dir.path().join("resolved.txt")).unwrap();
    assert!(resolved.contains("S.P. and A.B."));
    assert!(!resolved.to_lowercase().contains("the agents"));
    assert!(resolved.contains("The male passengers"));
    assert!(!resolved.contains("the stash house"));

    let graph = KnowledgeGraph::load(&dir.path().join("graph.json")).unwrap();
    graph.validate().unwrap();
    let mut keys: Vec<(String, String)> =
        graph.nodes.iter().map(|n| (n.entity_type.to_string(), n.name.to_lowercase())).collect();
    let before = keys.len();
    keys.sort();
    keys.dedup();
    assert_eq!(keys.len(), before);
}

#[test]
fn resume_reuses_artifacts_without_the_model() {
    let dir = tempfile::tempdir().unwrap();
    run_into(dir.path()).unwrap();
    let first = fs::read(dir.path().join("graph.json")).unwrap();

    // An empty fixture would fail on any model call.
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let mut config = RunConfig::load(&synthetic().join("run.toml")).unwrap();
    config.workdir = dir.path().to_path_buf();
    config.fixture = Some(empty);
    let doc = ingest(Source::Path(&synthetic().join("document.txt"))).unwrap();
    Pipeline::new(config).unwrap().run(&[doc], true).unwrap();
    assert_eq!(fs::read(dir.path().join("graph.json")).unwrap(), first);
}

#[test]
fn trace_reports_cache_entry_and_descriptions() {
    let dir = tempfile::tempdir().unwrap();
    run_into(dir.path()).unwrap();
    let hits = trace(dir.path(), "The Agents").unwrap();
    assert!(!hits.is_empty());
    let hit = &hits[0];
    assert_eq!(hit.provenance.resolved_to, "S.P. and A.B.");
    assert!(hit.descriptions.contains_key("S.P.") && hit.descriptions.contains_key("A.B."));
}

#[test]
fn missing_fixture_entry_fails_with_llm_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let mut config = RunConfig::load(&synthetic().join("run.toml")).unwrap();
    config.workdir = dir.path().join("run");
    config.fixture = Some(empty);
    let doc = ingest(Source::Path(&synthetic().join("document.txt"))).unwrap();
    let err = Pipeline::new(config).unwrap().run(&[doc], false).unwrap_err();
    assert_eq!(err.exit_code(), 3, "{err}");
}
