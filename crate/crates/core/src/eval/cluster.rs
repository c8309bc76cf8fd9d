//! Intra-type duplicate clustering by thresholded similarity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::similarity::partial_ratio;
use crate::entity_type::EntityType;
use crate::kg::KnowledgeGraph;

pub const DEFAULT_THRESHOLD: f64 = 75.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateCluster {
    pub entity_type: EntityType,
    pub members: Vec<String>,
}

impl DuplicateCluster {
    pub fn duplicates(&self) -> usize {
        self.members.len().saturating_sub(1)
    }
}

pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }

    /// Components as lists of indices, ordered by smallest member.
    pub fn components(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot: Vec<Option<usize>> = vec![None; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let r = self.find(i);
            match slot[r] {
                Some(k) => out[k].push(i),
                None => {
                    slot[r] = Some(out.len());
                    out.push(vec![i]);
                }
            }
        }
        out
    }
}

/// Pairs `(i, j)`, `i < j`, whose similarity reaches `threshold`.
pub fn similar_pairs(names: &[String], threshold: f64) -> Vec<(usize, usize)> {
    (0..names.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            ((i + 1)..names.len())
                .filter(move |&j| partial_ratio(&names[i], &names[j]) >= threshold)
                .map(move |j| (i, j))
        })
        .collect()
}

/// Connected components of the thresholded similarity graph over `names`.
/// Every name lands in exactly one cluster; singletons are included.
pub fn cluster(names: &[String], entity_type: EntityType, threshold: f64) -> Vec<DuplicateCluster> {
    assert!(threshold > 0.0 && threshold <= 100.0, "threshold must be in (0, 100]");
    let mut uf = UnionFind::new(names.len());
    for (i, j) in similar_pairs(names, threshold) {
        uf.union(i, j);
    }
    uf.components()
        .into_iter()
        .map(|idx| DuplicateCluster {
            entity_type,
            members: idx.into_iter().map(|i| names[i].clone()).collect(),
        })
        .collect()
}

/// Cluster every entity type of a graph, in the fixed type order.
pub fn cluster_graph(graph: &KnowledgeGraph, threshold: f64) -> Vec<DuplicateCluster> {
    EntityType::ALL
        .iter()
        .flat_map(|&t| {
            let names: Vec<String> = graph.nodes_of_type(t).map(|n| n.name.clone()).collect();
            cluster(&names, t, threshold)
        })
        .collect()
}
