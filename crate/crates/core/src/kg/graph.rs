//! Knowledge-graph assembly with exact-match entity merging, plus export.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::extract::{ChunkRecords, ExtractionRecord};
use super::KgError;
use crate::entity_type::EntityType;
use crate::text::{collapse_ws, fold};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub key: String,
    pub name: String,
    #[serde(rename = "type")]
    pub entity_type: EntityType,
    pub descriptions: Vec<String>,
    pub chunks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub source: String,
    pub target: String,
    pub description: String,
    pub strength: u8,
    pub chunk: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    GraphMl,
    Dot,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ExportFormat::Json),
            "graphml" => Ok(ExportFormat::GraphMl),
            "dot" => Ok(ExportFormat::Dot),
            other => Err(format!("unknown export format `{other}`")),
        }
    }
}

/// Merge key: type slug plus the normalized name.
pub fn node_key(name: &str, entity_type: EntityType, case_sensitive: bool) -> String {
    let name = if case_sensitive { collapse_ws(name) } else { fold(name) };
    format!("{}:{}", entity_type.slug(), name)
}

/// Aggregate chunk records into a graph.
///
/// Entities with the same type and normalized name become one node. The
/// display name is the lexicographically smallest spelling seen, so the
/// result does not depend on record order. Relationship endpoints take the
/// type of the same-named entity in their chunk.
pub fn assemble(chunks: &[ChunkRecords], case_sensitive: bool) -> KnowledgeGraph {
    let mut nodes: BTreeMap<String, Node> = BTreeMap::new();
    let mut edges = Vec::new();
    let norm = |s: &str| if case_sensitive { collapse_ws(s) } else { fold(s) };

    for chunk in chunks {
        let mut local: Vec<(String, EntityType)> = Vec::new();
        for r in &chunk.records {
            if let ExtractionRecord::Entity { name, entity_type, description } = r {
                let name = collapse_ws(name);
                let key = node_key(&name, *entity_type, case_sensitive);
                let node = nodes.entry(key.clone()).or_insert_with(|| Node {
                    key,
                    name: name.clone(),
                    entity_type: *entity_type,
                    descriptions: Vec::new(),
                    chunks: Vec::new(),
                });
                if name < node.name {
                    node.name = name.clone();
                }
                let description = collapse_ws(description);
                if !description.is_empty() && !node.descriptions.contains(&description) {
                    node.descriptions.push(description);
                }
                node.chunks.push(chunk.chunk_index);
                local.push((norm(&name), *entity_type));
            }
        }
        for r in &chunk.records {
            if let ExtractionRecord::Relationship { source, target, description, strength } = r {
                let endpoint = |n: &str| {
                    let n = norm(n);
                    local.iter().find(|(m, _)| *m == n).map(|(_, t)| node_key(&n, *t, case_sensitive))
                };
                match (endpoint(source), endpoint(target)) {
                    (Some(s), Some(t)) => edges.push(Edge {
                        source: s,
                        target: t,
                        description: collapse_ws(description),
                        strength: *strength,
                        chunk: chunk.chunk_index,
                    }),
                    _ => log::warn!(
                        "chunk {}: relationship {source} -> {target} has no matching entity; skipped",
                        chunk.chunk_index
                    ),
                }
            }
        }
    }

    let nodes = nodes
        .into_values()
        .map(|mut n| {
            n.descriptions.sort();
            n.chunks.sort_unstable();
            n
        })
        .collect();
    edges.sort();
    KnowledgeGraph { nodes, edges }
}

impl KnowledgeGraph {
    pub fn node(&self, key: &str) -> Option<&Node> {
        self.nodes
            .binary_search_by(|n| n.key.as_str().cmp(key))
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn nodes_of_type(&self, t: EntityType) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(move |n| n.entity_type == t)
    }

    pub fn validate(&self) -> Result<(), KgError> {
        for w in self.nodes.windows(2) {
            if w[0].key >= w[1].key {
                return Err(KgError::InvalidGraph(format!("node keys not unique and sorted at `{}`", w[1].key)));
            }
        }
        for e in &self.edges {
            for k in [&e.source, &e.target] {
                if self.node(k).is_none() {
                    return Err(KgError::InvalidGraph(format!("edge endpoint `{k}` is not a node")));
                }
            }
            if !(1..=10).contains(&e.strength) {
                return Err(KgError::InvalidGraph(format!("edge strength {} outside 1..=10", e.strength)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("graph serializes");
        s.push('\n');
        s
    }

    pub fn from_json(json: &str) -> Result<Self, KgError> {
        let mut g: KnowledgeGraph = serde_json::from_str(json).map_err(|e| KgError::InvalidGraph(e.to_string()))?;
        g.nodes.sort_by(|a, b| a.key.cmp(&b.key));
        g.validate()?;
        Ok(g)
    }

    pub fn load(path: &Path) -> Result<Self, KgError> {
        let text = std::fs::read_to_string(path).map_err(|e| KgError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_graphml(&self) -> String {
        let mut s = String::new();
        s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
        for (id, on, name) in [
            ("d0", "node", "name"),
            ("d1", "node", "type"),
            ("d2", "node", "descriptions"),
            ("d3", "node", "chunks"),
            ("d4", "edge", "description"),
            ("d5", "edge", "strength"),
            ("d6", "edge", "chunk"),
        ] {
            let ty = if matches!(name, "strength" | "chunk") { "int" } else { "string" };
            let _ = writeln!(s, "  <key id=\"{id}\" for=\"{on}\" attr.name=\"{name}\" attr.type=\"{ty}\"/>");
        }
        s.push_str("  <graph id=\"G\" edgedefault=\"directed\">\n");
        for n in &self.nodes {
            let chunks = n.chunks.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
            let _ = writeln!(s, "    <node id=\"{}\">", xml_escape(&n.key));
            let _ = writeln!(s, "      <data key=\"d0\">{}</data>", xml_escape(&n.name));
            let _ = writeln!(s, "      <data key=\"d1\">{}</data>", xml_escape(n.entity_type.name()));
            let _ = writeln!(s, "      <data key=\"d2\">{}</data>", xml_escape(&n.descriptions.join(" | ")));
            let _ = writeln!(s, "      <data key=\"d3\">{chunks}</data>");
            s.push_str("    </node>\n");
        }
        for e in &self.edges {
            let _ = writeln!(
                s,
                "    <edge source=\"{}\" target=\"{}\">",
                xml_escape(&e.source),
                xml_escape(&e.target)
            );
            let _ = writeln!(s, "      <data key=\"d4\">{}</data>", xml_escape(&e.description));
            let _ = writeln!(s, "      <data key=\"d5\">{}</data>", e.strength);
            let _ = writeln!(s, "      <data key=\"d6\">{}</data>", e.chunk);
            s.push_str("    </edge>\n");
        }
        s.push_str("  </graph>\n</graphml>\n");
        s
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph kg {\n");
        for n in &self.nodes {
            let _ = writeln!(
                s,
                "  \"{}\" [label=\"{}\", type=\"{}\"];",
                dot_escape(&n.key),
                dot_escape(&n.name),
                n.entity_type.name()
            );
        }
        for e in &self.edges {
            let _ = writeln!(
                s,
                "  \"{}\" -> \"{}\" [label=\"{}\", strength={}, chunk={}];",
                dot_escape(&e.source),
                dot_escape(&e.target),
                dot_escape(&e.description),
                e.strength,
                e.chunk
            );
        }
        s.push_str("}\n");
        s
    }

    pub fn render(&self, format: ExportFormat) -> String {
        match format {
            ExportFormat::Json => self.to_json(),
            ExportFormat::GraphMl => self.to_graphml(),
            ExportFormat::Dot => self.to_dot(),
        }
    }

    pub fn export(&self, format: ExportFormat, path: &Path) -> Result<(), KgError> {
        std::fs::write(path, self.render(format)).map_err(|e| KgError::io(path, e))
    }
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ent(name: &str, t: EntityType) -> ExtractionRecord {
        ExtractionRecord::Entity { name: name.into(), entity_type: t, description: format!("{name} desc") }
    }

    fn rel(s: &str, t: &str) -> ExtractionRecord {
        ExtractionRecord::Relationship { source: s.into(), target: t.into(), description: "drove".into(), strength: 8 }
    }

    fn sample() -> Vec<ChunkRecords> {
        vec![
            ChunkRecords {
                chunk_index: 0,
                records: vec![
                    ent("L.R.C.", EntityType::Person),
                    ent("Highway 77", EntityType::Route),
                    ent("White Pickup Truck", EntityType::MeansOfTransportation),
                    rel("L.R.C.", "White Pickup Truck"),
                ],
            },
            ChunkRecords {
                chunk_index: 1,
                records: vec![
                    ent("L.R.C.", EntityType::Person),
                    ent("highway  77", EntityType::Route),
                    ent("stolen white pickup truck", EntityType::MeansOfTransportation),
                    rel("L.R.C.", "highway 77"),
                ],
            },
        ]
    }

    #[test]
    fn exact_merge_and_conservation() {
        let g = assemble(&sample(), false);
        g.validate().unwrap();
        assert_eq!(g.nodes.len(), 4);
        let lrc = g.node("person:l.r.c.").unwrap();
        assert_eq!(lrc.chunks, vec![0, 1]);
        let hwy = g.node("route:highway 77").unwrap();
        assert_eq!(hwy.name, "Highway 77");
        assert_eq!(hwy.descriptions.len(), 2);
        assert_eq!(g.nodes.iter().map(|n| n.chunks.len()).sum::<usize>(), 6);
        assert_eq!(g.edges.len(), 2);

        let strict = assemble(&sample(), true);
        assert_eq!(strict.nodes.len(), 5);
    }

    #[test]
    fn order_independent() {
        let mut rev = sample();
        rev.reverse();
        for c in &mut rev {
            let (mut e, r): (Vec<_>, Vec<_>) = c.records.drain(..).partition(ExtractionRecord::is_entity);
            e.reverse();
            c.records = e.into_iter().chain(r).collect();
        }
        assert_eq!(assemble(&rev, false), assemble(&sample(), false));
    }

    #[test]
    fn exports() {
        let g = assemble(&sample(), false);
        let back = KnowledgeGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(back, g);
        let xml = g.to_graphml();
        assert_eq!(xml.matches("<node ").count(), 4);
        assert_eq!(xml.matches("<edge ").count(), 2);
        assert_eq!(g.to_dot().matches("->").count(), 2);

        let empty = KnowledgeGraph::default();
        assert_eq!(KnowledgeGraph::from_json(&empty.to_json()).unwrap(), empty);
        assert!(empty.to_graphml().contains("<graph "));
        assert!(empty.to_dot().starts_with("digraph"));
    }

    #[test]
    fn json_field_order() {
        let g = assemble(&sample()[..1], false);
        let j = g.to_json();
        let pos = |k: &str| j.find(k).unwrap();
        assert!(pos("\"key\"") < pos("\"name\""));
        assert!(pos("\"name\"") < pos("\"type\""));
        assert!(pos("\"descriptions\"") < pos("\"chunks\""));
        assert!(pos("\"source\"") < pos("\"strength\""));
    }
}
