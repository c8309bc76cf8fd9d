//! Reviewer edits applied on top of automatic clustering and noise detection.
//!
//! One directive per line; `#` starts a comment. Names containing spaces
//! are double-quoted; types may be written as a slug or a quoted name.
//!
//! ```text
//! merge <type> "<name>" "<name>" ...
//! split <type> <cluster-id> := {"<name>", ...} | {"<name>", ...}
//! noise "<name>"
//! not-noise "<name>"
//! ```
//!
//! `cluster-id` is the 0-based position of the cluster among that type's
//! clusters at the point the directive is applied.

use std::path::Path;

use super::cluster::DuplicateCluster;
use super::EvalError;
use crate::entity_type::EntityType;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Directive {
    Merge { entity_type: EntityType, names: Vec<String> },
    Split { entity_type: EntityType, cluster_id: usize, parts: Vec<Vec<String>> },
    Noise { name: String },
    NotNoise { name: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Overrides {
    /// Directives with their 1-based source line.
    pub directives: Vec<(usize, Directive)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Word(String),
    Quoted(String),
    Sym(char),
}

fn tokenize(line: &str, n: usize) -> Result<Vec<Token>, EvalError> {
    let mut out = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '#' => break,
            c if c.is_whitespace() => {
                chars.next();
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some('\\') => s.extend(chars.next()),
                        Some(c) => s.push(c),
                        None => return Err(syntax(n, "unterminated quoted name")),
                    }
                }
                out.push(Token::Quoted(s));
            }
            '{' | '}' | '|' | ',' => {
                chars.next();
                out.push(Token::Sym(c));
            }
            ':' => {
                chars.next();
                if chars.next() != Some('=') {
                    return Err(syntax(n, "expected `:=`"));
                }
                out.push(Token::Sym('='));
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || "{}|,\"#".contains(c) {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                out.push(Token::Word(s));
            }
        }
    }
    Ok(out)
}

fn syntax(line: usize, message: &str) -> EvalError {
    EvalError::OverrideSyntax { line, message: message.to_string() }
}

fn name_of(t: &Token) -> Option<&str> {
    match t {
        Token::Word(s) | Token::Quoted(s) => Some(s),
        Token::Sym(_) => None,
    }
}

fn parse_type(t: Option<&Token>, n: usize) -> Result<EntityType, EvalError> {
    let s = t.and_then(name_of).ok_or_else(|| syntax(n, "missing entity type"))?;
    s.parse().map_err(|e| syntax(n, &format!("{e}")))
}

fn parse_parts(tokens: &[Token], n: usize) -> Result<Vec<Vec<String>>, EvalError> {
    let mut parts = Vec::new();
    let mut i = 0;
    loop {
        if tokens.get(i) != Some(&Token::Sym('{')) {
            return Err(syntax(n, "expected `{` to open a part"));
        }
        i += 1;
        let mut part = Vec::new();
        loop {
            match tokens.get(i) {
                Some(Token::Sym('}')) => {
                    i += 1;
                    break;
                }
                Some(Token::Sym(',')) => i += 1,
                Some(t @ (Token::Word(_) | Token::Quoted(_))) => {
                    part.push(name_of(t).expect("name").to_string());
                    i += 1;
                }
                _ => return Err(syntax(n, "unterminated part")),
            }
        }
        parts.push(part);
        match tokens.get(i) {
            None => return Ok(parts),
            Some(Token::Sym('|')) => i += 1,
            _ => return Err(syntax(n, "expected `|` between parts")),
        }
    }
}

impl Overrides {
    pub fn parse(text: &str) -> Result<Self, EvalError> {
        let mut directives = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let n = idx + 1;
            let tokens = tokenize(line, n)?;
            let Some(Token::Word(head)) = tokens.first() else {
                if tokens.is_empty() {
                    continue;
                }
                return Err(syntax(n, "expected a directive"));
            };
            let d = match head.as_str() {
                "merge" => {
                    let entity_type = parse_type(tokens.get(1), n)?;
                    let names: Vec<String> = tokens[2..]
                        .iter()
                        .map(|t| name_of(t).map(str::to_string).ok_or_else(|| syntax(n, "unexpected symbol")))
                        .collect::<Result<_, _>>()?;
                    if names.len() < 2 {
                        return Err(syntax(n, "merge needs at least two names"));
                    }
                    Directive::Merge { entity_type, names }
                }
                "split" => {
                    let entity_type = parse_type(tokens.get(1), n)?;
                    let cluster_id = tokens
                        .get(2)
                        .and_then(name_of)
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| syntax(n, "expected a numeric cluster id"))?;
                    if tokens.get(3) != Some(&Token::Sym('=')) {
                        return Err(syntax(n, "expected `:=` after the cluster id"));
                    }
                    let parts = parse_parts(&tokens[4..], n)?;
                    Directive::Split { entity_type, cluster_id, parts }
                }
                "noise" | "not-noise" => {
                    if tokens.len() != 2 {
                        return Err(syntax(n, "expected exactly one name"));
                    }
                    let name = name_of(&tokens[1]).ok_or_else(|| syntax(n, "expected a name"))?.to_string();
                    if head == "noise" {
                        Directive::Noise { name }
                    } else {
                        Directive::NotNoise { name }
                    }
                }
                other => return Err(syntax(n, &format!("unknown directive `{other}`"))),
            };
            directives.push((n, d));
        }
        Ok(Overrides { directives })
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Noise marks in file order: `(line, name, is_noise)`.
    pub fn noise_marks(&self) -> impl Iterator<Item = (usize, &str, bool)> {
        self.directives.iter().filter_map(|(n, d)| match d {
            Directive::Noise { name } => Some((*n, name.as_str(), true)),
            Directive::NotNoise { name } => Some((*n, name.as_str(), false)),
            _ => None,
        })
    }
}

fn type_positions(clusters: &[DuplicateCluster], t: EntityType) -> Vec<usize> {
    clusters
        .iter()
        .enumerate()
        .filter(|(_, c)| c.entity_type == t)
        .map(|(i, _)| i)
        .collect()
}

fn sorted_members(clusters: &[DuplicateCluster], t: EntityType) -> Vec<String> {
    let mut v: Vec<String> = clusters
        .iter()
        .filter(|c| c.entity_type == t)
        .flat_map(|c| c.members.iter().cloned())
        .collect();
    v.sort();
    v
}

/// Apply merge and split directives in file order.
pub fn apply_overrides(clusters: &[DuplicateCluster], overrides: &Overrides) -> Result<Vec<DuplicateCluster>, EvalError> {
    let mut out = clusters.to_vec();
    for (line, d) in &overrides.directives {
        let line = *line;
        match d {
            Directive::Merge { entity_type, names } => {
                let mut hit: Vec<usize> = Vec::new();
                for name in names {
                    let i = out
                        .iter()
                        .position(|c| c.entity_type == *entity_type && c.members.contains(name))
                        .ok_or_else(|| EvalError::UnknownNode { line, name: name.clone() })?;
                    if !hit.contains(&i) {
                        hit.push(i);
                    }
                }
                hit.sort_unstable();
                let keep = hit[0];
                for &i in hit[1..].iter().rev() {
                    let moved = out.remove(i);
                    out[keep].members.extend(moved.members);
                }
            }
            Directive::Split { entity_type, cluster_id, parts } => {
                let positions = type_positions(&out, *entity_type);
                let &at = positions.get(*cluster_id).ok_or(EvalError::UnknownCluster {
                    line,
                    entity_type: *entity_type,
                    cluster_id: *cluster_id,
                })?;
                let mut want: Vec<String> = parts.iter().flatten().cloned().collect();
                want.sort();
                let mut have = out[at].members.clone();
                have.sort();
                if let Some(name) = want.iter().find(|n| !have.contains(n)) {
                    return Err(EvalError::UnknownNode { line, name: name.clone() });
                }
                if parts.iter().any(Vec::is_empty) || want != have {
                    return Err(EvalError::PartitionViolation {
                        line,
                        message: format!("parts must cover cluster {cluster_id} exactly: {have:?}"),
                    });
                }
                let replacement: Vec<DuplicateCluster> = parts
                    .iter()
                    .map(|p| DuplicateCluster { entity_type: *entity_type, members: p.clone() })
                    .collect();
                out.splice(at..=at, replacement);
            }
            Directive::Noise { .. } | Directive::NotNoise { .. } => {}
        }
        for t in EntityType::ALL {
            if sorted_members(&out, t) != sorted_members(clusters, t) {
                return Err(EvalError::PartitionViolation {
                    line,
                    message: format!("{t} clusters no longer partition the node set"),
                });
            }
        }
    }
    Ok(out)
}
