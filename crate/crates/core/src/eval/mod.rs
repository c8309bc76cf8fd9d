//! Duplication and noise evaluation of assembled graphs.

pub mod cluster;
pub mod overrides;
pub mod report;
pub mod similarity;

pub use cluster::{cluster, cluster_graph, DuplicateCluster, UnionFind, DEFAULT_THRESHOLD};
pub use overrides::{apply_overrides, Directive, Overrides};
pub use report::{average_row, rate, render_table, report, AverageRow, CaseCounts, EvaluationReport, NoiseRules};
pub use similarity::{partial_ratio, ratio};

use std::path::PathBuf;

use crate::entity_type::EntityType;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("overrides line {line}: {message}")]
    OverrideSyntax { line: usize, message: String },
    #[error("overrides line {line}: unknown node `{name}`")]
    UnknownNode { line: usize, name: String },
    #[error("overrides line {line}: no {entity_type} cluster {cluster_id}")]
    UnknownCluster { line: usize, entity_type: EntityType, cluster_id: usize },
    #[error("partition violation (line {line}): {message}")]
    PartitionViolation { line: usize, message: String },
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
