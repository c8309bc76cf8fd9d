//! Duplication and noise metrics over an assembled graph.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cluster::DuplicateCluster;
use super::overrides::Overrides;
use super::EvalError;
use crate::entity_type::EntityType;
use crate::kg::KnowledgeGraph;
use crate::lexicon::{FilterLexicon, LexiconError};

/// `100 * count / total`, or 0 for an empty total.
pub fn rate(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

/// Display rounding for percentages.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Lexicons that decide which nodes count as noise.
#[derive(Debug, Clone)]
pub struct NoiseRules {
    /// Applied to nodes of every type.
    pub general: FilterLexicon,
    /// Applied to Organization nodes only.
    pub organization: FilterLexicon,
}

impl Default for NoiseRules {
    fn default() -> Self {
        NoiseRules {
            general: FilterLexicon::default_noise(),
            organization: FilterLexicon::default_noise_org(),
        }
    }
}

impl NoiseRules {
    pub fn load(general: Option<&Path>, organization: Option<&Path>) -> Result<Self, LexiconError> {
        let d = NoiseRules::default();
        Ok(NoiseRules {
            general: general.map(FilterLexicon::load).transpose()?.unwrap_or(d.general),
            organization: organization.map(FilterLexicon::load).transpose()?.unwrap_or(d.organization),
        })
    }

    /// The lexicon term that marks a node as noise, if any.
    pub fn reason(&self, name: &str, entity_type: EntityType) -> Option<String> {
        self.general
            .matching_term(name)
            .or_else(|| {
                (entity_type == EntityType::Organization)
                    .then(|| self.organization.matching_term(name))
                    .flatten()
            })
            .map(|t| format!("lexicon: {t}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyNode {
    pub name: String,
    #[serde(rename = "type")]
    pub entity_type: EntityType,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeBreakdown {
    #[serde(rename = "type")]
    pub entity_type: EntityType,
    pub nodes: usize,
    pub duplicates: usize,
    pub noisy: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub total_nodes: usize,
    pub duplicate_count: usize,
    pub duplication_rate: f64,
    pub noisy_count: usize,
    pub noise_rate: f64,
    pub by_type: Vec<TypeBreakdown>,
    pub clusters: Vec<DuplicateCluster>,
    pub noisy_nodes: Vec<NoisyNode>,
}

/// Compute both metrics. `clusters` must partition each type's node names.
pub fn report(
    graph: &KnowledgeGraph,
    clusters: &[DuplicateCluster],
    noise: &NoiseRules,
    overrides: Option<&Overrides>,
) -> Result<EvaluationReport, EvalError> {
    for t in EntityType::ALL {
        let mut nodes: Vec<&str> = graph.nodes_of_type(t).map(|n| n.name.as_str()).collect();
        let mut members: Vec<&str> = clusters
            .iter()
            .filter(|c| c.entity_type == t)
            .flat_map(|c| c.members.iter().map(String::as_str))
            .collect();
        nodes.sort_unstable();
        members.sort_unstable();
        if nodes != members {
            return Err(EvalError::PartitionViolation {
                line: 0,
                message: format!("{t} clusters do not partition the graph's {t} nodes"),
            });
        }
    }

    let mut flagged: Vec<Option<String>> = graph
        .nodes
        .iter()
        .map(|n| noise.reason(&n.name, n.entity_type))
        .collect();
    if let Some(o) = overrides {
        for (line, name, is_noise) in o.noise_marks() {
            let hits: Vec<usize> = graph
                .nodes
                .iter()
                .enumerate()
                .filter(|(_, n)| n.name == name)
                .map(|(i, _)| i)
                .collect();
            if hits.is_empty() {
                return Err(EvalError::UnknownNode { line, name: name.to_string() });
            }
            for i in hits {
                flagged[i] = is_noise.then(|| format!("override line {line}"));
            }
        }
    }

    let noisy_nodes: Vec<NoisyNode> = graph
        .nodes
        .iter()
        .zip(&flagged)
        .filter_map(|(n, r)| {
            r.as_ref().map(|reason| NoisyNode {
                name: n.name.clone(),
                entity_type: n.entity_type,
                reason: reason.clone(),
            })
        })
        .collect();

    let present: BTreeSet<EntityType> = graph.nodes.iter().map(|n| n.entity_type).collect();
    let by_type: Vec<TypeBreakdown> = EntityType::ALL
        .iter()
        .filter(|t| present.contains(t))
        .map(|&t| TypeBreakdown {
            entity_type: t,
            nodes: graph.nodes_of_type(t).count(),
            duplicates: clusters.iter().filter(|c| c.entity_type == t).map(DuplicateCluster::duplicates).sum(),
            noisy: noisy_nodes.iter().filter(|n| n.entity_type == t).count(),
        })
        .collect();

    let total_nodes = graph.nodes.len();
    let duplicate_count = clusters.iter().map(DuplicateCluster::duplicates).sum();
    let noisy_count = noisy_nodes.len();
    Ok(EvaluationReport {
        total_nodes,
        duplicate_count,
        duplication_rate: rate(duplicate_count, total_nodes),
        noisy_count,
        noise_rate: rate(noisy_count, total_nodes),
        by_type,
        clusters: clusters.to_vec(),
        noisy_nodes,
    })
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Counts for one document, as they appear in a results table row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseCounts {
    pub total: usize,
    pub duplicates: usize,
    pub noisy: usize,
}

impl CaseCounts {
    pub fn duplication_rate(&self) -> f64 {
        rate(self.duplicates, self.total)
    }

    pub fn noise_rate(&self) -> f64 {
        rate(self.noisy, self.total)
    }
}

impl From<&EvaluationReport> for CaseCounts {
    fn from(r: &EvaluationReport) -> Self {
        CaseCounts { total: r.total_nodes, duplicates: r.duplicate_count, noisy: r.noisy_count }
    }
}

/// The average row of a results table.
///
/// Totals and counts are plain means. The percentages are the means of the
/// per-case percentages, not the ratio of the mean counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageRow {
    pub total: f64,
    pub duplicates: f64,
    pub duplication_rate: f64,
    pub noisy: f64,
    pub noise_rate: f64,
}

pub fn average_row(cases: &[CaseCounts]) -> AverageRow {
    let n = cases.len().max(1) as f64;
    let mean = |f: &dyn Fn(&CaseCounts) -> f64| cases.iter().map(f).sum::<f64>() / n;
    AverageRow {
        total: mean(&|c| c.total as f64),
        duplicates: mean(&|c| c.duplicates as f64),
        duplication_rate: mean(&|c| c.duplication_rate()),
        noisy: mean(&|c| c.noisy as f64),
        noise_rate: mean(&|c| c.noise_rate()),
    }
}

/// Text table with one row per case and an average row when there are
/// several: Total, Dup. Ent, %, Noisy Ent, %.
pub fn render_table(rows: &[(String, CaseCounts)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(4).max("Average".len());
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<width$}  {:>8}  {:>8}  {:>7}  {:>9}  {:>7}",
        "Case", "Total", "Dup. Ent", "%", "Noisy Ent", "%"
    );
    for (name, c) in rows {
        let _ = writeln!(
            s,
            "{:<width$}  {:>8}  {:>8}  {:>7.2}  {:>9}  {:>7.2}",
            name,
            c.total,
            c.duplicates,
            c.duplication_rate(),
            c.noisy,
            c.noise_rate()
        );
    }
    if rows.len() > 1 {
        let counts: Vec<CaseCounts> = rows.iter().map(|(_, c)| *c).collect();
        let a = average_row(&counts);
        let _ = writeln!(
            s,
            "{:<width$}  {:>8.2}  {:>8.2}  {:>7.2}  {:>9.2}  {:>7.2}",
            "Average", a.total, a.duplicates, a.duplication_rate, a.noisy, a.noise_rate
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::cluster::cluster_graph;
    use crate::kg::{Node, KnowledgeGraph};

    fn graph(names: &[(&str, EntityType)]) -> KnowledgeGraph {
        let mut nodes: Vec<Node> = names
            .iter()
            .map(|(n, t)| Node {
                key: crate::kg::node_key(n, *t, false),
                name: n.to_string(),
                entity_type: *t,
                descriptions: vec![],
                chunks: vec![0],
            })
            .collect();
        nodes.sort_by(|a, b| a.key.cmp(&b.key));
        KnowledgeGraph { nodes, edges: vec![] }
    }

    #[test]
    fn rates() {
        assert_eq!(round2(rate(32, 94)), 34.04);
        assert_eq!(round2(rate(26, 94)), 27.66);
        assert_eq!(rate(3, 0), 0.0);
    }

    #[test]
    fn cluster_formula() {
        let clusters = vec![
            DuplicateCluster { entity_type: EntityType::Person, members: vec!["a".into(), "b".into(), "c".into()] },
            DuplicateCluster { entity_type: EntityType::Person, members: vec!["d".into()] },
        ];
        let g = graph(&[("a", EntityType::Person), ("b", EntityType::Person), ("c", EntityType::Person), ("d", EntityType::Person)]);
        let r = report(&g, &clusters, &NoiseRules::default(), None).unwrap();
        assert_eq!(r.duplicate_count, 2);
        assert_eq!(r.duplication_rate, 50.0);
    }

    #[test]
    fn noise_detection_and_overrides() {
        let g = graph(&[
            ("L.R.C.", EntityType::Person),
            ("judicial proceedings", EntityType::Organization),
            ("Office of the Federal Public Defender", EntityType::Organization),
            ("Laredo", EntityType::Location),
        ]);
        let c = cluster_graph(&g, 75.0);
        let r = report(&g, &c, &NoiseRules::default(), None).unwrap();
        assert_eq!(r.noisy_count, 2);
        assert_eq!(r.noise_rate, 50.0);

        let o = Overrides::parse("not-noise \"judicial proceedings\"\nnoise Laredo").unwrap();
        let r = report(&g, &c, &NoiseRules::default(), Some(&o)).unwrap();
        let names: Vec<_> = r.noisy_nodes.iter().map(|n| n.name.as_str()).collect();
        assert_eq!(names.len(), 2);
        assert!(names.contains(&"Laredo"));

        let o = Overrides::parse("noise Nowhere").unwrap();
        assert!(matches!(report(&g, &c, &NoiseRules::default(), Some(&o)), Err(EvalError::UnknownNode { .. })));
    }

    #[test]
    fn rejects_non_partition() {
        let g = graph(&[("a", EntityType::Person)]);
        let r = report(&g, &[], &NoiseRules::default(), None);
        assert!(matches!(r, Err(EvalError::PartitionViolation { .. })));
    }

    #[test]
    fn average_uses_mean_of_rates() {
        let cases = [
            CaseCounts { total: 10, duplicates: 1, noisy: 0 },
            CaseCounts { total: 30, duplicates: 9, noisy: 3 },
        ];
        let a = average_row(&cases);
        assert_eq!(a.total, 20.0);
        assert_eq!(a.duplication_rate, 20.0);
        let t = render_table(&[("Case 01".into(), cases[0]), ("Case 02".into(), cases[1])]);
        assert!(t.lines().last().unwrap().starts_with("Average"));
    }
}
