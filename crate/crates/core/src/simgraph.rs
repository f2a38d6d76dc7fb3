//! Weighted user-user similarity graphs and the nearest-rank quantile.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::AccountKey;
use crate::error::GraphError;
use crate::vectorize::TfidfMatrix;

/// Edges at or below this weight are not stored.
pub const WEIGHT_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Undirected weighted graph over accounts. Edges satisfy `i < j` and are
/// sorted by `(i, j)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimilarityGraph {
    pub nodes: Vec<AccountKey>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairMode {
    /// Pairs of accounts on the same platform.
    Intra,
    /// Pairs of accounts on different platforms.
    Cross,
}

impl PairMode {
    fn admits(self, a: &AccountKey, b: &AccountKey) -> bool {
        match self {
            PairMode::Intra => a.platform == b.platform,
            PairMode::Cross => a.platform != b.platform,
        }
    }
}

impl SimilarityGraph {
    /// Builds a graph, normalizing edge orientation and ordering.
    pub fn from_parts(nodes: Vec<AccountKey>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let n = nodes.len();
        let mut norm = Vec::with_capacity(edges.len());
        for e in edges {
            let (i, j) = if e.i < e.j { (e.i, e.j) } else { (e.j, e.i) };
            if i == j {
                return Err(GraphError::Degenerate(format!("self-loop on node {i}")));
            }
            if j >= n {
                return Err(GraphError::Degenerate(format!("edge endpoint {j} out of range")));
            }
            if !(e.w.is_finite() && e.w > 0.0) {
                return Err(GraphError::Degenerate(format!("non-positive weight {}", e.w)));
            }
            norm.push(Edge { i, j, w: e.w });
        }
        norm.sort_by(|a, b| (a.i, a.j).cmp(&(b.i, b.j)));
        if norm.windows(2).any(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return Err(GraphError::Degenerate("duplicate edge".into()));
        }
        Ok(Self { nodes, edges: norm })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.w).collect()
    }

    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[e.i].push((e.j, e.w));
            adj[e.j].push((e.i, e.w));
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for e in &self.edges {
            deg[e.i] += 1;
            deg[e.j] += 1;
        }
        deg
    }

    /// Subgraph induced by the nodes flagged in `keep`, reindexed in order.
    pub fn induced(&self, keep: &[bool]) -> SimilarityGraph {
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for (idx, node) in self.nodes.iter().enumerate() {
            if keep[idx] {
                remap[idx] = nodes.len();
                nodes.push(node.clone());
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| keep[e.i] && keep[e.j])
            .map(|e| Edge {
                i: remap[e.i],
                j: remap[e.j],
                w: e.w,
            })
            .collect();
        SimilarityGraph { nodes, edges }
    }

    /// Keeps only edges satisfying `pred`; nodes are untouched.
    pub fn retain_edges(&self, pred: impl Fn(&Edge) -> bool) -> SimilarityGraph {
        SimilarityGraph {
            nodes: self.nodes.clone(),
            edges: self.edges.iter().copied().filter(|e| pred(e)).collect(),
        }
    }

    pub fn drop_isolated(&self) -> SimilarityGraph {
        let keep: Vec<bool> = self.degrees().into_iter().map(|d| d > 0).collect();
        self.induced(&keep)
    }

    pub fn restrict_platform(&self, platform: &str) -> SimilarityGraph {
        let keep: Vec<bool> = self.nodes.iter().map(|k| k.platform == platform).collect();
        self.induced(&keep)
    }

    pub fn platforms(&self) -> BTreeSet<String> {
        self.nodes.iter().map(|k| k.platform.clone()).collect()
    }

    /// Edges keyed by account pair, smaller key first.
    pub fn keyed_edges(&self) -> BTreeMap<(AccountKey, AccountKey), f64> {
        self.edges
            .iter()
            .map(|e| {
                let (a, b) = (&self.nodes[e.i], &self.nodes[e.j]);
                let key = if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
                (key, e.w)
            })
            .collect()
    }

    /// `src_platform,src_user,dst_platform,dst_user,weight` in edge order.
    pub fn to_edge_csv(&self) -> String {
        let mut out = String::from("src_platform,src_user,dst_platform,dst_user,weight\n");
        for e in &self.edges {
            let (a, b) = (&self.nodes[e.i], &self.nodes[e.j]);
            let _ = writeln!(out, "{},{},{},{},{:.9}", a.platform, a.user_id, b.platform, b.user_id, e.w);
        }
        out
    }

    /// Parses the edge-list CSV. The node set is the set of endpoints, sorted.
    pub fn from_edge_csv(text: &str) -> Result<Self, GraphError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "src_platform,src_user,dst_platform,dst_user,weight" => {}
            _ => {
                return Err(GraphError::EdgeList {
                    line: 1,
                    message: "unexpected header".into(),
                })
            }
        }
        let mut raw = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            let bad = |message: &str| GraphError::EdgeList {
                line: idx + 1,
                message: message.into(),
            };
            if cols.len() != 5 {
                return Err(bad("expected 5 columns"));
            }
            let w: f64 = cols[4].trim().parse().map_err(|_| bad("weight is not a number"))?;
            raw.push((AccountKey::new(cols[0], cols[1]), AccountKey::new(cols[2], cols[3]), w));
        }
        let nodes: Vec<AccountKey> = raw
            .iter()
            .flat_map(|(a, b, _)| [a.clone(), b.clone()])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: BTreeMap<&AccountKey, usize> = nodes.iter().enumerate().map(|(i, k)| (k, i)).collect();
        let edges = raw
            .iter()
            .map(|(a, b, w)| Edge {
                i: index[a],
                j: index[b],
                w: *w,
            })
            .collect();
        SimilarityGraph::from_parts(nodes.clone(), edges)
    }
}

/// Exhaustive pairwise cosine similarity between L2-normalized TF-IDF rows.
/// Pairs are restricted by `mode`; weights at or below [`WEIGHT_FLOOR`] are omitted.
pub fn cosine_pairs(t: &TfidfMatrix, mode: PairMode) -> Result<SimilarityGraph, GraphError> {
    let n = t.n_users();
    let admissible = (0..n).any(|a| (a + 1..n).any(|b| mode.admits(&t.users[a], &t.users[b])));
    if !admissible {
        return Err(GraphError::Degenerate(format!(
            "fewer than 2 admissible nodes for {mode:?} pairing"
        )));
    }
    // column -> (row, weight); rows ascending
    let mut postings: Vec<Vec<(usize, f64)>> = vec![Vec::new(); t.urls.len()];
    for (row, entries) in t.rows.iter().enumerate() {
        for &(col, w) in entries {
            postings[col].push((row, w));
        }
    }
    let edges: Vec<Edge> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
            for &(col, wi) in &t.rows[i] {
                let list = &postings[col];
                let start = list.partition_point(|&(r, _)| r <= i);
                for &(j, wj) in &list[start..] {
                    if mode.admits(&t.users[i], &t.users[j]) {
                        *acc.entry(j).or_insert(0.0) += wi * wj;
                    }
                }
            }
            acc.into_iter()
                .filter(|&(_, w)| w > WEIGHT_FLOOR)
                .map(|(j, w)| Edge { i, j, w })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect();
    Ok(SimilarityGraph {
        nodes: t.users.clone(),
        edges,
    })
}

/// Zero-based index of the nearest-rank `q`-quantile in a sorted list of
/// length `n` (1-based rank `max(1, ceil(q * n))`).
pub fn nearest_rank_index(n: usize, q: f64) -> usize {
    debug_assert!(n > 0);
    // absorb representation error such as 0.9 * 10 = 9.000000000000002
    let rank = (q * n as f64 - 1e-9).ceil().max(1.0) as usize;
    rank.min(n) - 1
}

/// Nearest-rank quantile; the result is always an element of `values`.
pub fn quantile(values: &[f64], q: f64) -> Result<f64, GraphError> {
    if values.is_empty() {
        return Err(GraphError::EmptyQuantile);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(GraphError::QuantileLevel(q));
    }
    let mut scratch = values.to_vec();
    let k = nearest_rank_index(scratch.len(), q);
    let (_, kth, _) = scratch.select_nth_unstable_by(k, f64::total_cmp);
    Ok(*kth)
}
