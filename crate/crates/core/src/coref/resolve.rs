//! Stage 3: rewrite chunks against the final cache and stitch them back
//! into one document.

use serde::{Deserialize, Serialize};

use super::cache::{CanonicalTarget, PromptCache};
use super::CorefError;
use crate::corpus::Chunk;
use crate::llm::{Gateway, LlmError};
use crate::prompts::{vars, PromptLibrary, TemplateId};
use crate::text::Haystack;

/// An alias that survived resolution in one chunk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualAlias {
    pub chunk_index: usize,
    pub alias: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedChunk {
    pub chunk_index: usize,
    pub text: String,
    /// False when no resolvable alias occurred and the text passed through.
    pub rewritten_by_model: bool,
    pub residuals: Vec<ResidualAlias>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MergeError {
    #[error("no resolved text for chunk {0}")]
    MissingChunk(usize),
    #[error("could not align the overlap after chunk {0}")]
    AnchorNotFound(usize),
}

struct Matcher {
    /// (alias chars, replacement) sorted longest first; `None` protects the
    /// span of an unresolved alias from shorter matches.
    aliases: Vec<(Vec<char>, Option<String>)>,
}

impl Matcher {
    fn new(cache: &PromptCache) -> Self {
        let mut aliases: Vec<(Vec<char>, Option<String>)> = cache
            .resolved_entities
            .iter()
            .filter(|(a, _)| !a.trim().is_empty())
            .map(|(a, t)| (a.chars().collect(), t.rendered()))
            .collect();
        aliases.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        Matcher { aliases }
    }

    /// Longest alias matching at `at`: (end, replacement).
    fn longest_at(&self, hay: &Haystack<'_>, at: usize) -> Option<(usize, Option<&str>)> {
        self.aliases
            .iter()
            .find_map(|(chars, rep)| hay.match_at(at, chars).map(|end| (end, rep.as_deref())))
    }

    fn has_resolvable_match(&self, text: &str) -> bool {
        let hay = Haystack::new(text);
        let mut i = 0;
        while i < hay.len_chars() {
            match self.longest_at(&hay, i) {
                Some((_, Some(_))) => return true,
                Some((end, None)) => i = end,
                None => i += 1,
            }
        }
        false
    }
}

/// Substitute every resolvable alias, longest match first, scanning left to right.
pub fn resolve_chunk_deterministic(text: &str, cache: &PromptCache) -> String {
    let matcher = Matcher::new(cache);
    let hay = Haystack::new(text);
    let mut out = String::with_capacity(text.len());
    let mut copied = 0; // byte offset already copied
    let mut i = 0;
    while i < hay.len_chars() {
        match matcher.longest_at(&hay, i) {
            Some((end, Some(rep))) => {
                out.push_str(&text[copied..hay.byte_offset(i)]);
                out.push_str(rep);
                copied = hay.byte_offset(end);
                i = end;
            }
            Some((end, None)) => i = end,
            None => i += 1,
        }
    }
    out.push_str(&text[copied..]);
    out
}

/// Count occurrences of resolvable aliases left in `text`.
///
/// Occurrences inside the alias's own canonical rendering (or one of its
/// canonical names), or inside a longer unresolved alias, are not residual.
pub fn validate_resolution(chunk_index: usize, text: &str, cache: &PromptCache) -> Vec<ResidualAlias> {
    let hay = Haystack::new(text);
    let unresolved_spans: Vec<(usize, usize)> = cache
        .resolved_entities
        .iter()
        .filter(|(_, t)| matches!(t, CanonicalTarget::Unresolved))
        .flat_map(|(a, _)| hay.find_all(a))
        .collect();
    let mut out = Vec::new();
    for (alias, target) in cache.resolvable_aliases() {
        let mut covering: Vec<(usize, usize)> = unresolved_spans
            .iter()
            .copied()
            .filter(|(s, e)| e - s > alias.len())
            .collect();
        if let Some(r) = target.rendered() {
            covering.extend(hay.find_all(&r));
        }
        for n in target.names() {
            covering.extend(hay.find_all(n));
        }
        let count = hay
            .find_all(alias)
            .into_iter()
            .filter(|(s, e)| !covering.iter().any(|(cs, ce)| cs <= s && e <= ce))
            .count();
        if count > 0 {
            out.push(ResidualAlias { chunk_index, alias: alias.to_string(), count });
        }
    }
    out
}

pub fn resolve_prompt(prompts: &PromptLibrary, chunk_text: &str, cache: &PromptCache) -> Result<String, CorefError> {
    Ok(prompts.render(
        TemplateId::Resolve,
        Some(cache.entity_type),
        &vars([
            ("cache_json", cache.to_json().trim_end().to_string()),
            ("chunk_text", chunk_text.to_string()),
        ]),
    )?)
}

/// Strip wrappers models tend to add around rewritten text.
fn clean_rewrite(raw: &str) -> &str {
    let mut s = raw.trim();
    if let Some(rest) = s.strip_prefix("```") {
        let rest = rest.split_once('\n').map(|(_, body)| body).unwrap_or("");
        s = rest.trim_end().strip_suffix("```").unwrap_or(rest).trim();
    }
    if let Some(inner) = s.strip_prefix("<chunk>").and_then(|r| r.strip_suffix("</chunk>")) {
        s = inner.trim();
    }
    s
}

/// Rewrite one chunk with the resolve model.
///
/// Chunks in which no resolvable alias occurs are returned unchanged without
/// a model call. With `strict`, surviving aliases are an error; otherwise
/// they are logged and reported on the result.
pub fn resolve_chunk(
    gateway: &Gateway,
    prompts: &PromptLibrary,
    chunk: &Chunk,
    cache: &PromptCache,
    strict: bool,
) -> Result<ResolvedChunk, CorefError> {
    let matcher = Matcher::new(cache);
    if chunk.is_empty() || !matcher.has_resolvable_match(&chunk.text) {
        return Ok(ResolvedChunk {
            chunk_index: chunk.index,
            text: chunk.text.clone(),
            rewritten_by_model: false,
            residuals: Vec::new(),
        });
    }
    let prompt = resolve_prompt(prompts, &chunk.text, cache)?;
    let raw = gateway.complete(&prompt)?;
    let text = clean_rewrite(&raw);
    if text.is_empty() {
        return Err(LlmError::EmptyResponse.into());
    }
    let residuals = validate_resolution(chunk.index, text, cache);
    for r in &residuals {
        if strict {
            return Err(CorefError::ResidualAlias { alias: r.alias.clone(), count: r.count });
        }
        log::warn!(
            "chunk {}: {} residual occurrence(s) of {} alias `{}`",
            r.chunk_index,
            r.count,
            cache.entity_type,
            r.alias
        );
    }
    Ok(ResolvedChunk {
        chunk_index: chunk.index,
        text: text.to_string(),
        rewritten_by_model: true,
        residuals,
    })
}

const ANCHOR_RUN: usize = 3;

/// Stitch resolved chunks into one text, dropping duplicated overlap.
///
/// For each adjacent pair the overlap region of the source text is searched
/// for a short run of tokens that survived resolution in both chunks; the
/// earlier chunk is cut just before the run and the later chunk resumes at it.
pub fn merge(resolved: &[ResolvedChunk], chunks: &[Chunk]) -> Result<String, MergeError> {
    let mut texts: Vec<Vec<&str>> = Vec::with_capacity(chunks.len());
    for c in chunks {
        let r = resolved
            .iter()
            .find(|r| r.chunk_index == c.index)
            .ok_or(MergeError::MissingChunk(c.index))?;
        texts.push(r.text.split_whitespace().collect());
    }
    if chunks.is_empty() {
        return Ok(String::new());
    }

    let mut out: Vec<&str> = Vec::new();
    let mut from = 0;
    for j in 0..chunks.len() - 1 {
        let a = &texts[j];
        let b = &texts[j + 1];
        let o = chunks[j + 1].overlap.min(chunks[j + 1].tokens.len());
        if o == 0 {
            out.extend_from_slice(&a[from..]);
            from = 0;
            continue;
        }
        let shared: Vec<&str> = chunks[j + 1].tokens[..o].iter().map(String::as_str).collect();
        let (cut_a, start_b) = find_anchor(a, from, b, &shared).ok_or(MergeError::AnchorNotFound(j))?;
        out.extend_from_slice(&a[from..cut_a]);
        from = start_b;
    }
    out.extend_from_slice(&texts[chunks.len() - 1][from..]);
    Ok(out.join(" "))
}

fn find_anchor(a: &[&str], from: usize, b: &[&str], shared: &[&str]) -> Option<(usize, usize)> {
    let o = shared.len();
    // Prefer longer runs; fall back to shorter ones when rewrites break them up.
    for len in (1..=ANCHOR_RUN.min(o)).rev() {
        for k in 0..=(o - len) {
            let run = &shared[k..k + len];
            let expect_a = a.len() as isize - (o - k) as isize;
            let pos_a = occurrences(a, from, run).min_by_key(|&p| ((p as isize - expect_a).abs(), p));
            let pos_b = occurrences(b, 0, run).min_by_key(|&p| ((p as isize - k as isize).abs(), p));
            if let (Some(pa), Some(pb)) = (pos_a, pos_b) {
                return Some((pa, pb));
            }
        }
    }
    None
}

fn occurrences<'a>(hay: &'a [&str], from: usize, run: &'a [&str]) -> impl Iterator<Item = usize> + 'a {
    let last = hay.len().saturating_sub(run.len());
    (from..=last).filter(move |&p| p + run.len() <= hay.len() && hay[p..p + run.len()] == *run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::chunk_tokens;
    use crate::entity_type::EntityType;
    use indexmap::IndexMap;

    fn person_cache() -> PromptCache {
        let mut c = PromptCache::new(EntityType::Person);
        c.resolved_entities = IndexMap::from([
            ("the agents".to_string(), CanonicalTarget::Multiple(vec!["S.P.".into(), "A.B.".into()])),
            ("the driver".to_string(), CanonicalTarget::Single("L.R.C.".into())),
            ("the driver's brother".to_string(), CanonicalTarget::Single("J.T.R.".into())),
            ("the male passengers".to_string(), CanonicalTarget::Unresolved),
            ("Martin".to_string(), CanonicalTarget::Single("Agent Neil Martin".into())),
        ]);
        c.auxiliary_descriptions = IndexMap::from([
            ("S.P.".to_string(), "agent".to_string()),
            ("A.B.".to_string(), "agent".to_string()),
            ("L.R.C.".to_string(), "driver".to_string()),
            ("J.T.R.".to_string(), "brother".to_string()),
            ("Agent Neil Martin".to_string(), "agent".to_string()),
        ]);
        c
    }

    #[test]
    fn deterministic_substitution() {
        let c = person_cache();
        let out = resolve_chunk_deterministic(
            "The agents stopped the driver. The driver's brother fled with the male passengers. Martin watched.",
            &c,
        );
        assert_eq!(
            out,
            "S.P. and A.B. stopped L.R.C.. J.T.R. fled with the male passengers. Agent Neil Martin watched."
        );
        assert!(validate_resolution(0, &out, &c).is_empty());
    }

    #[test]
    fn residuals_are_counted() {
        let c = person_cache();
        let r = validate_resolution(3, "the driver and the Driver met Agent Neil Martin", &c);
        assert_eq!(r, vec![ResidualAlias { chunk_index: 3, alias: "the driver".into(), count: 2 }]);
    }

    #[test]
    fn merge_single_and_identity() {
        let tokens: Vec<String> = (0..23).map(|i| format!("w{i}")).collect();
        let refs: Vec<&str> = tokens.iter().map(String::as_str).collect();
        let chunks = chunk_tokens("d", &refs, 10, 4).unwrap();
        let resolved: Vec<ResolvedChunk> = chunks
            .iter()
            .map(|c| ResolvedChunk { chunk_index: c.index, text: c.text.clone(), rewritten_by_model: false, residuals: vec![] })
            .collect();
        assert_eq!(merge(&resolved, &chunks).unwrap(), refs.join(" "));
        assert_eq!(merge(&resolved[..1], &chunks[..1]).unwrap(), chunks[0].text);
        assert_eq!(merge(&resolved[1..], &chunks), Err(MergeError::MissingChunk(0)));
    }

    #[test]
    fn merge_handles_rewritten_overlap() {
        let text = "a b the driver c d e f g h the driver i j";
        let refs: Vec<&str> = text.split(' ').collect();
        let chunks = chunk_tokens("d", &refs, 8, 4).unwrap();
        let c = person_cache();
        let resolved: Vec<ResolvedChunk> = chunks
            .iter()
            .map(|ch| ResolvedChunk {
                chunk_index: ch.index,
                text: resolve_chunk_deterministic(&ch.text, &c),
                rewritten_by_model: true,
                residuals: vec![],
            })
            .collect();
        assert_eq!(merge(&resolved, &chunks).unwrap(), resolve_chunk_deterministic(text, &c));
    }

    #[test]
    fn merge_reports_missing_anchor() {
        let refs: Vec<&str> = "a b c d e f".split(' ').collect();
        let chunks = chunk_tokens("d", &refs, 4, 2).unwrap();
        let resolved = vec![
            ResolvedChunk { chunk_index: 0, text: "x y z q".into(), rewritten_by_model: true, residuals: vec![] },
            ResolvedChunk { chunk_index: 1, text: "c d e f".into(), rewritten_by_model: true, residuals: vec![] },
        ];
        assert_eq!(merge(&resolved, &chunks), Err(MergeError::AnchorNotFound(0)));
    }

    #[test]
    fn clean_rewrite_strips_wrappers() {
        assert_eq!(clean_rewrite("```text\nhello\n```"), "hello");
        assert_eq!(clean_rewrite("<chunk>\nhello\n</chunk>"), "hello");
        assert_eq!(clean_rewrite("  hello "), "hello");
    }
}
