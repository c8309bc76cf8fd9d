//! Acceptance checks. Run with `cargo test -p linkkg-core --test acceptance`;
//! prints one PASS/FAIL/SKIP line per check with its runtime budget.
//!
//! Every value compared against the library comes from an oracle written
//! here, or from published table figures in `tests/data/benchmark_tables.tsv`.

// The oracles index on purpose; they mirror the textbook formulations.
#![allow(clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use linkkg::config::RunConfig;
use linkkg::coref::resolve::{resolve_chunk, resolve_chunk_deterministic};
use linkkg::coref::{update_cache, ChunkEntities, PromptCache};
use linkkg::corpus::{chunk_tokens, expected_chunk_count, ingest, reassemble, Source};
use linkkg::eval::{self, average_row, partial_ratio, CaseCounts, DuplicateCluster, NoiseRules};
use linkkg::kg::{filter_records, ExtractionRecord, KnowledgeGraph, Node};
use linkkg::lexicon::FilterLexicon;
use linkkg::llm::{CompletionRequest, Gateway, LlmBackend, LlmError, ReplayBackend};
use linkkg::pipeline::Pipeline;
use linkkg::prompts::PromptLibrary;
use linkkg::EntityType;
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

type Outcome = Result<String, String>;

fn manifest() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

struct Suite {
    failed: Vec<String>,
    known: Vec<String>,
}

impl Suite {
    fn check(&mut self, id: &str, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) {
        let t = Instant::now();
        let result = f();
        let elapsed = t.elapsed();
        let over = budget.is_some_and(|b| elapsed > b);
        let budget_s = budget.map_or("none".to_string(), |b| format!("{:.0?}", b));
        let (status, detail) = match (&result, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; over budget")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        println!("{status} [{id}] {name} ({elapsed:.2?}, budget {budget_s}): {detail}");
        if status == "FAIL" {
            self.failed.push(id.to_string());
        }
    }

    /// A check that cannot hold for the published data. It still runs and
    /// reports FAIL, but does not fail the process.
    fn check_known(&mut self, id: &str, name: &str, why: &str, f: impl FnOnce() -> Outcome) {
        match f() {
            Ok(d) => {
                println!("PASS [{id}] {name}: {d}");
            }
            Err(e) => {
                println!("FAIL [{id}] {name}: {e} (known: {why})");
                self.known.push(id.to_string());
            }
        }
    }

    fn skip(&mut self, id: &str, name: &str, why: &str) {
        println!("SKIP [{id}] {name}: {why}");
    }
}

// ---------------------------------------------------------------------------
// 1. Table reproduction
// ---------------------------------------------------------------------------

struct TableRow {
    table: String,
    case: String,
    method: String,
    metric: String,
    total: f64,
    count: f64,
    percent: f64,
}

fn load_tables() -> Vec<TableRow> {
    let text = fs::read_to_string(manifest().join("tests/data/benchmark_tables.tsv")).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            TableRow {
                table: f[0].into(),
                case: f[1].into(),
                method: f[2].into(),
                metric: f[3].into(),
                total: f[4].parse().unwrap(),
                count: f[5].parse().unwrap(),
                percent: f[6].parse().unwrap(),
            }
        })
        .collect()
}

/// A graph with `total` Person nodes, `noisy` of them procedural, and a
/// cluster assignment with exactly `duplicates` extra members.
fn table_graph(total: usize, duplicates: usize, noisy: usize) -> (KnowledgeGraph, Vec<DuplicateCluster>) {
    let t = EntityType::Person;
    let names: Vec<String> = (0..total)
        .map(|i| if i < noisy { format!("hearing {i:03}") } else { format!("node {i:03}") })
        .collect();
    let mut nodes: Vec<Node> = names
        .iter()
        .map(|n| Node {
            key: linkkg::kg::node_key(n, t, false),
            name: n.clone(),
            entity_type: t,
            descriptions: vec![],
            chunks: vec![0],
        })
        .collect();
    nodes.sort_by(|a, b| a.key.cmp(&b.key));
    let mut clusters = vec![DuplicateCluster { entity_type: t, members: names[..=duplicates].to_vec() }];
    clusters.extend(names[duplicates + 1..].iter().map(|n| DuplicateCluster { entity_type: t, members: vec![n.clone()] }));
    (KnowledgeGraph { nodes, edges: vec![] }, clusters)
}

fn criterion_tables() -> Outcome {
    let rows = load_tables();
    let mut cases: BTreeMap<(String, String, String), CaseCounts> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.case != "Average") {
        let e = cases
            .entry((r.table.clone(), r.method.clone(), r.case.clone()))
            .or_insert(CaseCounts { total: r.total as usize, duplicates: 0, noisy: 0 });
        if e.total != r.total as usize {
            return Err(format!("{} {} {}: totals differ between metrics", r.table, r.method, r.case));
        }
        match r.metric.as_str() {
            "duplication" => e.duplicates = r.count as usize,
            _ => e.noisy = r.count as usize,
        }
    }

    let noise = NoiseRules::default();
    let mut checked = 0;
    let mut reports: HashMap<(String, String, String), CaseCounts> = HashMap::new();
    for (key, c) in &cases {
        let (graph, clusters) = table_graph(c.total, c.duplicates, c.noisy);
        let rep = eval::report(&graph, &clusters, &noise, None).map_err(|e| e.to_string())?;
        if rep.total_nodes != c.total || rep.duplicate_count != c.duplicates || rep.noisy_count != c.noisy {
            return Err(format!("{key:?}: report counts {}/{}/{}", rep.total_nodes, rep.duplicate_count, rep.noisy_count));
        }
        reports.insert(key.clone(), (&rep).into());
        for r in rows.iter().filter(|r| (&r.table, &r.method, &r.case) == (&key.0, &key.1, &key.2)) {
            let got = if r.metric == "duplication" { rep.duplication_rate } else { rep.noise_rate };
            if (got - r.percent).abs() > 0.01 + 1e-9 {
                return Err(format!("{key:?} {}: computed {got:.4}, printed {:.2}", r.metric, r.percent));
            }
            checked += 1;
        }
    }

    for r in rows.iter().filter(|r| r.case == "Average") {
        let members: Vec<CaseCounts> = reports
            .iter()
            .filter(|(k, _)| k.0 == r.table && k.1 == r.method)
            .map(|(_, c)| *c)
            .collect();
        let a = average_row(&members);
        let (count, pct) = if r.metric == "duplication" {
            (a.duplicates, a.duplication_rate)
        } else {
            (a.noisy, a.noise_rate)
        };
        for (what, got, want) in [("total", a.total, r.total), ("count", count, r.count), ("%", pct, r.percent)] {
            if (got - want).abs() > 0.01 + 1e-9 {
                return Err(format!("{} {} {} average {what}: computed {got:.4}, printed {want:.2}", r.table, r.method, r.metric));
            }
        }
        checked += 1;
    }
    Ok(format!("{checked} printed percentages within ±0.01 ({} cases, 12 average rows)", cases.len()))
}

// ---------------------------------------------------------------------------
// 2. partial_ratio oracle
// ---------------------------------------------------------------------------

/// Insert/delete edit distance, full table.
fn indel_distance(a: &[char], b: &[char]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            d[i][j] = if a[i - 1] == b[j - 1] {
                d[i - 1][j - 1]
            } else {
                (d[i - 1][j] + 1).min(d[i][j - 1] + 1)
            };
        }
    }
    d[a.len()][b.len()]
}

fn oracle_similarity(s: &[char], w: &[char]) -> f64 {
    let total = s.len() + w.len();
    100.0 * (1.0 - indel_distance(s, w) as f64 / total as f64)
}

/// Every window the shorter string can align to: all full-length
/// substrings of the longer, plus the prefixes and suffixes shorter than it.
fn oracle_windows(n: usize, l: &[char]) -> Vec<&[char]> {
    let mut out: Vec<&[char]> = (0..=l.len() - n).map(|i| &l[i..i + n]).collect();
    for k in 1..n {
        out.push(&l[..k]);
        out.push(&l[l.len() - k..]);
    }
    out
}

fn oracle_partial_ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.to_lowercase().chars().collect();
    let b: Vec<char> = b.to_lowercase().chars().collect();
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() { 100.0 } else { 0.0 };
    }
    let best = |s: &[char], l: &[char]| {
        oracle_windows(s.len(), l).into_iter().map(|w| oracle_similarity(s, w)).fold(0.0, f64::max)
    };
    if a.len() == b.len() {
        best(&a, &b).max(best(&b, &a))
    } else if a.len() < b.len() {
        best(&a, &b)
    } else {
        best(&b, &a)
    }
}

const FAMILY: [&str; 3] = ["white pickup truck", "stolen white pickup truck", "white older Ford pickup truck"];

fn random_string(rng: &mut ChaCha8Rng, max_len: usize) -> String {
    const ALPHABET: &[char] = &['a', 'b', 'c', 'd', 'e', ' ', '.', 'A', 'B', 'é', 'É', 'z'];
    let n = rng.gen_range(0..=max_len);
    (0..n).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect()
}

fn criterion_partial_ratio_random() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for i in 0..1000 {
        let a = random_string(&mut rng, 30);
        let b = random_string(&mut rng, 30);
        let (got, want) = (partial_ratio(&a, &b), oracle_partial_ratio(&a, &b));
        if got != want {
            return Err(format!("pair {i} ({a:?}, {b:?}): library {got}, oracle {want}"));
        }
        if partial_ratio(&b, &a) != got {
            return Err(format!("pair {i} not symmetric"));
        }
    }
    Ok("1000 random pairs (length <= 30) equal the oracle exactly".into())
}

fn family_pairs() -> Vec<(&'static str, &'static str)> {
    let mut v = Vec::new();
    for i in 0..FAMILY.len() {
        for j in i + 1..FAMILY.len() {
            v.push((FAMILY[i], FAMILY[j]));
        }
    }
    v
}

fn criterion_partial_ratio_family_oracle() -> Outcome {
    let mut scores = Vec::new();
    for (a, b) in family_pairs() {
        let (got, want) = (partial_ratio(a, b), oracle_partial_ratio(a, b));
        if got != want {
            return Err(format!("({a:?}, {b:?}): library {got}, oracle {want}"));
        }
        scores.push(format!("{want:.2}"));
    }
    Ok(format!("example-cluster pairs equal the oracle: [{}]", scores.join(", ")))
}

fn criterion_family_one_cluster() -> Outcome {
    let names: Vec<String> = FAMILY.iter().map(|s| s.to_string()).collect();
    let clusters = eval::cluster(&names, EntityType::MeansOfTransportation, 75.0);
    if clusters.len() == 1 {
        Ok("the three spellings form one duplicate cluster at 75".into())
    } else {
        Err(format!("{} clusters", clusters.len()))
    }
}

fn criterion_family_pairwise() -> Outcome {
    let below: Vec<String> = family_pairs()
        .into_iter()
        .map(|(a, b)| (a, b, oracle_partial_ratio(a, b)))
        .filter(|(_, _, s)| *s < 75.0)
        .map(|(a, b, s)| format!("({a:?}, {b:?}) = {s:.2}"))
        .collect();
    if below.is_empty() {
        Ok("all pairs >= 75".into())
    } else {
        Err(format!("below 75: {}", below.join("; ")))
    }
}

// ---------------------------------------------------------------------------
// 3. Clustering vs transitive closure
// ---------------------------------------------------------------------------

fn closure_partition(names: &[String], threshold: f64) -> BTreeSet<BTreeSet<String>> {
    let n = names.len();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
        for j in 0..n {
            if i != j && oracle_partial_ratio(&names[i], &names[j]) >= threshold {
                reach[i][j] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    (0..n)
        .map(|i| (0..n).filter(|&j| reach[i][j]).map(|j| names[j].clone()).collect())
        .collect()
}

fn criterion_clustering() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mut multi = 0;
    for set in 0..100 {
        let n = rng.gen_range(1..=50);
        let mut names: Vec<String> = Vec::new();
        while names.len() < n {
            let s = random_string(&mut rng, 10);
            if !s.is_empty() && !names.contains(&s) {
                names.push(s);
            }
        }
        let threshold = [60.0, 75.0, 90.0][set % 3];
        let got: BTreeSet<BTreeSet<String>> = eval::cluster(&names, EntityType::Person, threshold)
            .into_iter()
            .map(|c| c.members.into_iter().collect())
            .collect();
        let want = closure_partition(&names, threshold);
        if got != want {
            return Err(format!("set {set} ({n} names, threshold {threshold}) differs"));
        }
        multi += want.iter().filter(|c| c.len() > 1).count();
    }
    Ok(format!("100 random sets match; {multi} multi-member clusters seen"))
}

// ---------------------------------------------------------------------------
// 4. Chunker
// ---------------------------------------------------------------------------

fn criterion_chunker() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    for doc in 0..500 {
        let t = rng.gen_range(1..=1000);
        let tokens: Vec<String> = (0..t).map(|i| format!("w{i}")).collect();
        let refs: Vec<&str> = tokens.iter().map(String::as_str).collect();
        let size = rng.gen_range(1..=400);
        let overlap = rng.gen_range(0..size);
        let chunks = chunk_tokens("d", &refs, size, overlap).map_err(|e| e.to_string())?;

        let stride = size - overlap;
        let span = if t > overlap { t - overlap } else { 1 };
        let want_count = span.div_ceil(stride);
        if chunks.len() != want_count || expected_chunk_count(t, size, overlap) != want_count {
            return Err(format!("doc {doc}: T={t} size={size} overlap={overlap}: {} chunks, formula {want_count}", chunks.len()));
        }
        if reassemble(&chunks) != tokens {
            return Err(format!("doc {doc}: reassembly differs (T={t} size={size} overlap={overlap})"));
        }
        for (i, c) in chunks.iter().enumerate() {
            if c.index != i || c.start != i * stride || c.tokens.len() > size || c.tokens[..] != tokens[c.start..c.start + c.tokens.len()] {
                return Err(format!("doc {doc}: chunk {i} is not the window at {}", i * stride));
            }
        }
        if chunks.last().map(|c| c.start + c.tokens.len()) != Some(t) {
            return Err(format!("doc {doc}: last chunk does not end the document"));
        }
    }
    Ok("500 random documents: count formula, windows and reassembly hold".into())
}

// ---------------------------------------------------------------------------
// 5. Golden end-to-end replay
// ---------------------------------------------------------------------------

fn golden_run(workdir: &Path) -> Result<(), String> {
    let fixtures = manifest().join("fixtures/synthetic");
    let mut config = RunConfig::load(&fixtures.join("run.toml")).map_err(|e| e.to_string())?;
    config.workdir = workdir.to_path_buf();
    config.endpoint = None;
    let doc = ingest(Source::Path(&fixtures.join("document.txt"))).map_err(|e| e.to_string())?;
    Pipeline::new(config).and_then(|p| p.run(&[doc], false)).map_err(|e| e.to_string())?;
    Ok(())
}

fn golden_artifacts() -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = EntityType::ALL
        .iter()
        .map(|t| PathBuf::from(format!("stage2/{}/cache.gleaned.json", t.slug())))
        .collect();
    out.extend(["resolved.txt", "graph.json", "report.json"].map(PathBuf::from));
    out
}

fn count_phrase(text: &str, phrase: &str) -> usize {
    text.to_lowercase().matches(&phrase.to_lowercase()).count()
}

fn criterion_golden() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    golden_run(a.path())?;
    golden_run(b.path())?;
    let artifacts = golden_artifacts();
    for rel in &artifacts {
        let x = fs::read(a.path().join(rel)).map_err(|e| format!("{}: {e}", rel.display()))?;
        let y = fs::read(b.path().join(rel)).map_err(|e| format!("{}: {e}", rel.display()))?;
        if x != y {
            return Err(format!("{} differs between runs", rel.display()));
        }
    }

    let original = fs::read_to_string(manifest().join("fixtures/synthetic/document.txt")).unwrap();
    let resolved = fs::read_to_string(a.path().join("resolved.txt")).unwrap();
    if count_phrase(&original, "the agents") == 0 || count_phrase(&resolved, "the agents") != 0 {
        return Err("`the agents` was not fully resolved".into());
    }
    if !resolved.contains("S.P. and A.B.") {
        return Err("`the agents` does not map to both named agents".into());
    }
    let plural = "the male passengers";
    if count_phrase(&resolved, plural) != count_phrase(&original, plural) || count_phrase(&original, plural) == 0 {
        return Err(format!("`{plural}` was rewritten"));
    }

    let graph: Value = serde_json::from_str(&fs::read_to_string(a.path().join("graph.json")).unwrap()).unwrap();
    let mut seen = BTreeSet::new();
    for n in graph["nodes"].as_array().unwrap() {
        let key = (n["type"].as_str().unwrap().to_string(), n["name"].as_str().unwrap().to_lowercase());
        if !seen.insert(key.clone()) {
            return Err(format!("two {} nodes named {:?}", key.0, key.1));
        }
    }
    Ok(format!(
        "{} artifacts byte-identical over two runs; plural grounded, `{plural}` kept; {} nodes, no case-folded twins",
        artifacts.len(),
        seen.len()
    ))
}

// ---------------------------------------------------------------------------
// 6. Cache invariants under adversarial mapping responses
// ---------------------------------------------------------------------------

struct Canned(String);

impl LlmBackend for Canned {
    fn complete(&self, _: &CompletionRequest) -> Result<String, LlmError> {
        Ok(self.0.clone())
    }
}

const PROPER: [&str; 6] = ["L.R.C.", "l.r.c.", "M.D.J.G.", "J.T.R.", "S.P.", "A.B."];
const PHRASES: [&str; 7] = ["the driver", "The Driver", "the agents", "the defendant", "the men", "the passengers", "L.R.C."];
const GHOSTS: [&str; 3] = ["Ghost", "E.V.", "the boss"];

fn any_name() -> impl Strategy<Value = String> {
    prop_oneof![
        prop::sample::select(PROPER.to_vec()),
        prop::sample::select(PHRASES.to_vec()),
        prop::sample::select(GHOSTS.to_vec()),
    ]
    .prop_map(str::to_string)
}

fn seeded_runner(cases: u32) -> TestRunner {
    let config = PropConfig { cases, failure_persistence: None, ..PropConfig::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).unwrap()
}

fn target() -> impl Strategy<Value = String> {
    prop_oneof![
        any_name().prop_map(|n| json_str(&n)),
        prop::collection::vec(any_name(), 0..4)
            .prop_map(|v| format!("[{}]", v.iter().map(|n| json_str(n)).collect::<Vec<_>>().join(", "))),
        Just("null".to_string()),
        Just("\"\"".to_string()),
        Just("42".to_string()),
        Just("{\"name\": \"L.R.C.\"}".to_string()),
    ]
}

fn description() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("\"driver of the truck\"".to_string()),
        Just("\"\"".to_string()),
        Just("null".to_string()),
        Just("7".to_string()),
    ]
}

/// Raw response text; object keys may repeat, which JSON parsers resolve
/// by keeping the last one.
fn mapping_response() -> impl Strategy<Value = String> {
    let resolved = prop::collection::vec((any_name(), target()), 0..6);
    let aux = prop::collection::vec((any_name(), description()), 0..5);
    (resolved, aux, 0..6u8).prop_map(|(r, a, wrap)| {
        let obj = |pairs: &[(String, String)]| {
            pairs.iter().map(|(k, v)| format!("{}: {v}", json_str(k))).collect::<Vec<_>>().join(", ")
        };
        let body = format!("{{\"RESOLVED_ENTITIES\": {{{}}}, \"AUXILIARY_DESCRIPTIONS\": {{{}}}}}", obj(&r), obj(&a));
        match wrap {
            0 => format!("Sure, here you go:\n```json\n{body}\n```"),
            1 => body[..body.len() / 2].to_string(),
            2 => format!("{{\"RESOLVED_ENTITIES\": {{{}}}}}", obj(&r)),
            3 => "[]".to_string(),
            _ => body,
        }
    })
}

fn chunk_mentions() -> impl Strategy<Value = Value> {
    (
        prop::collection::vec(prop::sample::select(PROPER.to_vec()), 0..3),
        prop::collection::vec(prop::sample::select(PHRASES.to_vec()), 0..4),
    )
        .prop_map(|(pn, np)| {
            let desc: serde_json::Map<String, Value> =
                pn.iter().map(|n| (n.to_string(), Value::String(format!("{n} in the case")))).collect();
            json!({"ENTITIES": {"PROPER_NOUN": pn, "NOUN_PHRASE": np}, "PROPER_NOUN_DESCRIPTION": desc})
        })
}

/// Independent check of the serialized cache: alias keys unique up to case,
/// every target name present as a description key, descriptions non-empty.
fn closure_violation(json_text: &str) -> Option<String> {
    let v: Value = serde_json::from_str(json_text).ok()?;
    let obj = v.as_object()?;
    if obj.len() != 2 {
        return Some(format!("top-level keys {:?}", obj.keys().collect::<Vec<_>>()));
    }
    let aux = v["AUXILIARY_DESCRIPTIONS"].as_object()?;
    let canon: BTreeSet<String> = aux.keys().map(|k| k.to_lowercase()).collect();
    if canon.len() != aux.len() {
        return Some("canonical names collide up to case".into());
    }
    for (k, d) in aux {
        if d.as_str().is_none_or(|s| s.trim().is_empty()) {
            return Some(format!("bad description for {k}"));
        }
    }
    let mut aliases = BTreeSet::new();
    for (alias, t) in v["RESOLVED_ENTITIES"].as_object()? {
        if !aliases.insert(alias.to_lowercase()) {
            return Some(format!("duplicate alias {alias}"));
        }
        let names: Vec<&str> = match t {
            Value::Null => vec![],
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) if a.len() >= 2 => a.iter().filter_map(Value::as_str).collect(),
            other => return Some(format!("alias {alias} has target {other}")),
        };
        for n in names {
            if !canon.contains(&n.to_lowercase()) {
                return Some(format!("alias {alias} -> {n} dangles"));
            }
        }
    }
    None
}

fn criterion_cache_invariants() -> Outcome {
    let prompts = PromptLibrary::builtin();
    let mut runner = seeded_runner(200);
    let steps = prop::collection::vec((chunk_mentions(), mapping_response()), 1..5);
    let accepted = std::cell::Cell::new(0usize);
    let rejected = std::cell::Cell::new(0usize);
    runner
        .run(&steps, |steps| {
            let mut cache = PromptCache::new(EntityType::Person);
            for (i, (mentions, response)) in steps.iter().enumerate() {
                let entities = ChunkEntities::from_response(i, EntityType::Person, mentions)
                    .map_err(|e| TestCaseError::fail(format!("mentions: {e}")))?;
                let gateway = Gateway::new(Box::new(Canned(response.clone())), "m");
                match update_cache(&gateway, &prompts, &entities, &cache) {
                    Ok(next) => {
                        accepted.set(accepted.get() + 1);
                        let text = next.to_json();
                        if let Some(v) = closure_violation(&text) {
                            return Err(TestCaseError::fail(format!("{v}\n{text}")));
                        }
                        let back = PromptCache::from_json(EntityType::Person, &text)
                            .map_err(|e| TestCaseError::fail(format!("reload: {e}\n{text}")))?;
                        prop_assert!(back.same_content(&next));
                        prop_assert_eq!(back.to_json(), text);
                        cache = next;
                    }
                    Err(_) => rejected.set(rejected.get() + 1),
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    if accepted.get() == 0 {
        return Err("no response was ever accepted; the check is vacuous".into());
    }
    Ok(format!(
        "200 cases: {} updates accepted and closed, {} rejected with typed errors",
        accepted.get(),
        rejected.get()
    ))
}

// ---------------------------------------------------------------------------
// 7. Resolver oracle
// ---------------------------------------------------------------------------

fn criterion_resolver() -> Outcome {
    let dir = manifest().join("fixtures/resolver");
    let cases: Vec<Value> = serde_json::from_str(&fs::read_to_string(dir.join("cases.json")).unwrap()).unwrap();
    let backend = ReplayBackend::from_path(&dir.join("llm.jsonl")).map_err(|e| e.to_string())?;
    let gateway = Gateway::new(Box::new(backend), linkkg::llm::DEFAULT_MODEL);
    let prompts = PromptLibrary::builtin();
    let mut kinds: BTreeMap<String, usize> = BTreeMap::new();
    let mut model_calls = 0;
    for case in &cases {
        let name = case["name"].as_str().unwrap();
        let t: EntityType = case["entity_type"].as_str().unwrap().parse().map_err(|e| format!("{name}: {e}"))?;
        let cache = PromptCache::from_json_value(t, &case["cache"]).map_err(|e| format!("{name}: {e}"))?;
        let text = case["text"].as_str().unwrap();
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let chunk = chunk_tokens(name, &tokens, tokens.len() + 1, 0).unwrap().remove(0);
        let got = resolve_chunk(&gateway, &prompts, &chunk, &cache, true).map_err(|e| format!("{name}: {e}"))?;
        let want = resolve_chunk_deterministic(&chunk.text, &cache);
        if got.text != want {
            return Err(format!("{name}:\n  model:         {}\n  deterministic: {want}", got.text));
        }
        model_calls += got.rewritten_by_model as usize;
        *kinds.entry(case["kind"].as_str().unwrap().to_string()).or_default() += 1;
    }
    if cases.len() != 20 {
        return Err(format!("expected 20 cases, found {}", cases.len()));
    }
    Ok(format!("20 chunks agree ({kinds:?}); {model_calls} went through the replayed model"))
}

// ---------------------------------------------------------------------------
// 8. Filter closure
// ---------------------------------------------------------------------------

fn is_word(c: char) -> bool {
    c.is_alphanumeric()
}

/// Word-bounded, case-insensitive containment.
fn mentions_term(name: &str, term: &str) -> bool {
    let hay: Vec<char> = name.to_lowercase().chars().collect();
    let needle: Vec<char> = term.to_lowercase().chars().collect();
    if needle.is_empty() || needle.len() > hay.len() {
        return false;
    }
    (0..=hay.len() - needle.len()).any(|i| {
        hay[i..i + needle.len()] == needle[..]
            && (i == 0 || !is_word(hay[i - 1]) || !is_word(needle[0]))
            && (i + needle.len() == hay.len() || !is_word(hay[i + needle.len()]) || !is_word(needle[needle.len() - 1]))
    })
}

fn record_set() -> impl Strategy<Value = Vec<ExtractionRecord>> {
    let names = prop::sample::select(vec![
        "L.R.C.", "District Court", "the court", "Courtney Ray", "grand jury", "Grand Jury", "Interstate 35", "Judge Ortiz",
        "judgement day", "Los Zetas", "U.S. Attorney", "Senate", "jury box", "Prosecutor's office",
    ]);
    let entity = (names.clone(), prop::sample::select(EntityType::ALL.to_vec())).prop_map(|(n, t)| ExtractionRecord::Entity {
        name: n.to_string(),
        entity_type: t,
        description: "d".into(),
    });
    let rel = (names.clone(), names, 1..=10u8).prop_map(|(s, t, w)| ExtractionRecord::Relationship {
        source: s.to_string(),
        target: t.to_string(),
        description: "r".into(),
        strength: w,
    });
    prop::collection::vec(prop_oneof![entity, rel], 0..30)
}

fn criterion_filter() -> Outcome {
    let lexicon = FilterLexicon::default_government();
    let terms: Vec<String> = lexicon.terms().map(|t| t.to_string()).collect();
    let mut runner = seeded_runner(100);
    let removed_total = std::cell::Cell::new(0usize);
    runner
        .run(&record_set(), |records| {
            let out = filter_records(&records, &lexicon);
            let removed: BTreeSet<String> = records
                .iter()
                .filter_map(|r| match r {
                    ExtractionRecord::Entity { name, .. } if terms.iter().any(|t| mentions_term(name, t)) => {
                        Some(name.to_lowercase())
                    }
                    _ => None,
                })
                .collect();
            removed_total.set(removed_total.get() + removed.len());
            for r in &out {
                match r {
                    ExtractionRecord::Entity { name, .. } => {
                        prop_assert!(!removed.contains(&name.to_lowercase()), "kept removed entity {}", name)
                    }
                    ExtractionRecord::Relationship { source, target, .. } => {
                        prop_assert!(!removed.contains(&source.to_lowercase()), "edge from removed {}", source);
                        prop_assert!(!removed.contains(&target.to_lowercase()), "edge to removed {}", target);
                    }
                }
            }
            let kept_entities = records
                .iter()
                .filter(|r| matches!(r, ExtractionRecord::Entity { name, .. } if !removed.contains(&name.to_lowercase())))
                .count();
            prop_assert_eq!(out.iter().filter(|r| r.is_entity()).count(), kept_entities);
            prop_assert_eq!(filter_records(&out, &lexicon), out);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("100 record sets closed and idempotent; {} entity names removed", removed_total.get()))
}

// ---------------------------------------------------------------------------
// 9. Live smoke test
// ---------------------------------------------------------------------------

fn criterion_live(endpoint: String) -> Outcome {
    let fixtures = manifest().join("fixtures/synthetic");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut config = RunConfig {
        mode: linkkg::llm::Mode::Live,
        endpoint: Some(endpoint),
        workdir: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    if let Ok(model) = std::env::var("LINKKG_LIVE_MODEL") {
        config.model = model;
    }
    if let Ok(api) = std::env::var("LINKKG_LIVE_API") {
        config.api = serde_json::from_value(Value::String(api)).map_err(|e| e.to_string())?;
    }
    if std::env::var("LINKKG_LIVE_API_KEY").is_ok() {
        config.api_key_env = Some("LINKKG_LIVE_API_KEY".into());
    }
    let doc = ingest(Source::Path(&fixtures.join("document.txt"))).map_err(|e| e.to_string())?;
    Pipeline::new(config).and_then(|p| p.run(&[doc], false)).map_err(|e| e.to_string())?;
    let graph = KnowledgeGraph::load(&dir.path().join("graph.json")).map_err(|e| e.to_string())?;
    graph.validate().map_err(|e| e.to_string())?;
    Ok(format!("live run produced a valid graph with {} nodes", graph.nodes.len()))
}

fn main() {
    let mut s = Suite { failed: vec![], known: vec![] };
    let secs = Duration::from_secs;

    s.check("1", "table reproduction", Some(secs(1)), criterion_tables);
    s.check("2a", "partial_ratio equals oracle on random pairs", Some(secs(10)), criterion_partial_ratio_random);
    s.check("2b", "partial_ratio equals oracle on example cluster", Some(secs(10)), criterion_partial_ratio_family_oracle);
    s.check("2c", "example cluster is one component", Some(secs(10)), criterion_family_one_cluster);
    s.check_known(
        "2d",
        "example cluster pairwise >= 75",
        "the published cluster is connected through `white pickup truck`; its two longer spellings score below 75 under any window-based partial ratio",
        criterion_family_pairwise,
    );
    s.check("3", "clustering equals transitive closure", Some(secs(10)), criterion_clustering);
    s.check("4", "chunker properties", Some(secs(5)), criterion_chunker);
    s.check("5", "golden end-to-end replay", Some(secs(5)), criterion_golden);
    s.check("6", "prompt cache invariants", Some(secs(10)), criterion_cache_invariants);
    s.check("7", "resolver matches deterministic substitution", None, criterion_resolver);
    s.check("8", "filter closure and idempotence", None, criterion_filter);
    match std::env::var("LINKKG_LIVE_ENDPOINT") {
        Ok(endpoint) => s.check("9", "live smoke test", None, || criterion_live(endpoint)),
        Err(_) => s.skip("9", "live smoke test", "set LINKKG_LIVE_ENDPOINT to run"),
    }

    println!(
        "acceptance: {} unexpected failure(s) {:?}, {} known {:?}",
        s.failed.len(),
        s.failed,
        s.known.len(),
        s.known
    );
    if !s.failed.is_empty() {
        std::process::exit(1);
    }
}
