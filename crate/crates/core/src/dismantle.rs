//! Density-based unsupervised network dismantling.
//!
//! A similarity graph is pruned in two stages: edges below the `edge_q`
//! quantile of the weight distribution are removed, then nodes below the
//! `node_q` quantile of eigenvector centrality (computed on the edge-filtered
//! graph) are removed. Isolated nodes are dropped after each stage. A grid over
//! both quantiles records the smallest density among the surviving connected
//! components; a sharp rise of that minimum marks the coordinated regime.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::AccountKey;
use crate::error::DismantleError;
use crate::simgraph::{quantile, Edge, SimilarityGraph};
use crate::spectral::{
    component_density, connected_components, eigenvector_centrality, CentralityConfig,
    CentralityVector,
};

/// Default density floor for automatic threshold selection.
pub const DEFAULT_MIN_FLOOR: f64 = 0.8;

/// Hand-picked `(edge_q, node_q)` pairs per platform.
pub const PLATFORM_PRESETS: [(&str, f64, f64); 4] = [
    ("facebook", 0.50, 0.45),
    ("twitter", 0.85, 0.99),
    ("reddit", 0.85, 0.80),
    ("telegram", 0.99, 0.99),
];

pub fn preset_for(platform: &str) -> Option<(f64, f64)> {
    PLATFORM_PRESETS
        .iter()
        .find(|(p, _, _)| p.eq_ignore_ascii_case(platform))
        .map(|&(_, e, n)| (e, n))
}

/// `0, 0.05, ..., 0.95, 0.99`.
pub fn default_axis() -> Vec<f64> {
    let mut axis: Vec<f64> = (0..20).map(|i| i as f64 / 20.0).collect();
    axis.push(0.99);
    axis
}

fn check_quantile(q: f64) -> Result<(), DismantleError> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(DismantleError::QuantileRange(q))
    }
}

fn check_axis(axis: &[f64]) -> Result<(), DismantleError> {
    let in_range = axis.iter().all(|q| (0.0..=1.0).contains(q));
    let ascending = axis.windows(2).all(|w| w[0] < w[1]);
    if axis.is_empty() || !in_range || !ascending {
        return Err(DismantleError::InvalidAxis);
    }
    Ok(())
}

/// Keeps edges with weight at or above the `edge_q` quantile, then drops isolated nodes.
fn edge_stage(g: &SimilarityGraph, edge_q: f64) -> Result<SimilarityGraph, DismantleError> {
    if g.edges.is_empty() {
        return Ok(SimilarityGraph::empty());
    }
    let tau = quantile(&g.weights(), edge_q)?;
    Ok(g.retain_edges(|e| e.w >= tau).drop_isolated())
}

/// Keeps nodes scoring at or above the `node_q` quantile, then drops isolated nodes.
fn node_stage(
    g: &SimilarityGraph,
    centrality: &CentralityVector,
    node_q: f64,
) -> Result<SimilarityGraph, DismantleError> {
    if g.is_empty() {
        return Ok(SimilarityGraph::empty());
    }
    let tau = quantile(&centrality.scores, node_q)?;
    let keep: Vec<bool> = centrality.scores.iter().map(|&s| s >= tau).collect();
    Ok(g.induced(&keep).drop_isolated())
}

pub fn filter_graph(
    g: &SimilarityGraph,
    edge_q: f64,
    node_q: f64,
    cfg: CentralityConfig,
) -> Result<SimilarityGraph, DismantleError> {
    check_quantile(edge_q)?;
    check_quantile(node_q)?;
    let filtered = edge_stage(g, edge_q)?;
    if filtered.is_empty() {
        return Ok(filtered);
    }
    let centrality = eigenvector_centrality(&filtered, cfg)?;
    node_stage(&filtered, &centrality, node_q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub edge_q: f64,
    pub node_q: f64,
    pub min_density: Option<f64>,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub n_components_ge2: usize,
}

/// Cells in edge-major order: `cells[i * node_qs.len() + j]` holds `(edge_qs[i], node_qs[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSurface {
    pub edge_qs: Vec<f64>,
    pub node_qs: Vec<f64>,
    pub cells: Vec<GridCell>,
}

impl GridSurface {
    pub fn cell(&self, edge_idx: usize, node_idx: usize) -> &GridCell {
        &self.cells[edge_idx * self.node_qs.len() + node_idx]
    }

    pub fn get(&self, edge_q: f64, node_q: f64) -> Option<&GridCell> {
        let i = axis_position(&self.edge_qs, edge_q)?;
        let j = axis_position(&self.node_qs, node_q)?;
        Some(self.cell(i, j))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("edge_q,node_q,min_density,n_nodes,n_edges,n_components\n");
        for c in &self.cells {
            let density = c.min_density.map(|d| format!("{d:.9}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                c.edge_q, c.node_q, density, c.n_nodes, c.n_edges, c.n_components_ge2
            );
        }
        out
    }
}

fn axis_position(axis: &[f64], q: f64) -> Option<usize> {
    axis.iter().position(|&a| (a - q).abs() < 1e-12)
}

fn summarize(edge_q: f64, node_q: f64, g: &SimilarityGraph) -> GridCell {
    let partition = connected_components(g);
    let densities: Vec<f64> = partition
        .non_trivial()
        .map(|c| component_density(c, g).expect("non-trivial component"))
        .collect();
    GridCell {
        edge_q,
        node_q,
        min_density: densities.iter().copied().reduce(f64::min),
        n_nodes: g.n_nodes(),
        n_edges: g.n_edges(),
        n_components_ge2: densities.len(),
    }
}

/// Evaluates every `(edge_q, node_q)` cell. Centrality is computed once per
/// edge quantile since it depends only on the edge-filtered graph.
pub fn grid_search(
    g: &SimilarityGraph,
    edge_qs: &[f64],
    node_qs: &[f64],
    cfg: CentralityConfig,
) -> Result<GridSurface, DismantleError> {
    check_axis(edge_qs)?;
    check_axis(node_qs)?;
    let rows: Vec<Vec<GridCell>> = edge_qs
        .par_iter()
        .map(|&edge_q| {
            let filtered = edge_stage(g, edge_q)?;
            let centrality = if filtered.is_empty() {
                None
            } else {
                Some(eigenvector_centrality(&filtered, cfg)?)
            };
            node_qs
                .iter()
                .map(|&node_q| {
                    let survivors = match &centrality {
                        Some(c) => node_stage(&filtered, c, node_q)?,
                        None => SimilarityGraph::empty(),
                    };
                    Ok(summarize(edge_q, node_q, &survivors))
                })
                .collect::<Result<Vec<_>, DismantleError>>()
        })
        .collect::<Result<_, _>>()?;
    Ok(GridSurface {
        edge_qs: edge_qs.to_vec(),
        node_qs: node_qs.to_vec(),
        cells: rows.into_iter().flatten().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ThresholdPolicy {
    Manual { edge_q: f64, node_q: f64 },
    Auto { min_floor: f64 },
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        ThresholdPolicy::Auto {
            min_floor: DEFAULT_MIN_FLOOR,
        }
    }
}

/// Picks `(edge_q, node_q)` from a surface.
///
/// `Auto` takes, among cells whose minimum density reaches `min_floor`, the one
/// with the largest rise over its lower neighbours on either axis (absent
/// neighbours count as 0). Ties go to the higher density, then fewer nodes,
/// then the lexicographically smaller pair.
pub fn select_thresholds(
    surface: &GridSurface,
    policy: ThresholdPolicy,
) -> Result<(f64, f64), DismantleError> {
    if surface.cells.is_empty() {
        return Err(DismantleError::DegenerateSurface);
    }
    match policy {
        ThresholdPolicy::Manual { edge_q, node_q } => {
            let i = axis_position(&surface.edge_qs, edge_q);
            let j = axis_position(&surface.node_qs, node_q);
            match (i, j) {
                (Some(_), Some(_)) => Ok((edge_q, node_q)),
                _ => Err(DismantleError::OffGrid(edge_q, node_q)),
            }
        }
        ThresholdPolicy::Auto { min_floor } => {
            let density = |i: Option<usize>, j: Option<usize>| match (i, j) {
                (Some(i), Some(j)) => surface.cell(i, j).min_density.unwrap_or(0.0),
                _ => 0.0,
            };
            let mut best: Option<(f64, &GridCell)> = None;
            for i in 0..surface.edge_qs.len() {
                for j in 0..surface.node_qs.len() {
                    let cell = surface.cell(i, j);
                    let Some(md) = cell.min_density.filter(|&d| d >= min_floor) else {
                        continue;
                    };
                    let below = density(i.checked_sub(1), Some(j)).max(density(Some(i), j.checked_sub(1)));
                    let jump = md - below;
                    let better = match best {
                        None => true,
                        Some((bj, bc)) => {
                            let bmd = bc.min_density.unwrap_or(0.0);
                            jump > bj
                                || (jump == bj && md > bmd)
                                || (jump == bj && md == bmd && cell.n_nodes < bc.n_nodes)
                        }
                    };
                    // cells are visited in lexicographic order, so equal keys keep the earlier one
                    if better {
                        best = Some((jump, cell));
                    }
                }
            }
            best.map(|(_, c)| (c.edge_q, c.node_q))
                .ok_or(DismantleError::NoTransition)
        }
    }
}

/// Outcome of dismantling one graph at fixed thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct DismantleResult {
    pub selected: (f64, f64),
    /// Surviving filtered graph.
    pub graph: SimilarityGraph,
    pub coordinated: BTreeSet<AccountKey>,
    /// Node-index sets into `graph.nodes`.
    pub components: Vec<Vec<usize>>,
    pub densities: Vec<f64>,
}

impl DismantleResult {
    pub fn min_density(&self) -> Option<f64> {
        self.densities.iter().copied().reduce(f64::min)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut accounts = Vec::new();
        for (c, members) in self.components.iter().enumerate() {
            for &v in members {
                let key = &self.graph.nodes[v];
                accounts.push((key, c));
            }
        }
        accounts.sort();
        json!({
            "selected": {"edge_q": self.selected.0, "node_q": self.selected.1},
            "accounts": accounts
                .into_iter()
                .map(|(k, c)| json!({"platform": k.platform, "user_id": k.user_id, "component": c}))
                .collect::<Vec<_>>(),
            "densities": self.densities,
        })
    }
}

pub fn detect_coordinated(
    g: &SimilarityGraph,
    edge_q: f64,
    node_q: f64,
    cfg: CentralityConfig,
) -> Result<DismantleResult, DismantleError> {
    let survivors = filter_graph(g, edge_q, node_q, cfg)?;
    let partition = connected_components(&survivors);
    let densities = partition
        .components
        .iter()
        .map(|c| component_density(c, &survivors))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DismantleResult {
        selected: (edge_q, node_q),
        coordinated: survivors.nodes.iter().cloned().collect(),
        components: partition.components,
        densities,
        graph: survivors,
    })
}

/// Union of surviving graphs: accounts are linked if adjacent in any input,
/// with the largest weight seen.
pub fn merge_cross_platform(intra: &[DismantleResult], cross: &DismantleResult) -> SimilarityGraph {
    let mut nodes = BTreeSet::new();
    let mut edges: BTreeMap<(AccountKey, AccountKey), f64> = BTreeMap::new();
    for result in intra.iter().chain(std::iter::once(cross)) {
        nodes.extend(result.coordinated.iter().cloned());
        for (pair, w) in result.graph.keyed_edges() {
            let slot = edges.entry(pair).or_insert(w);
            *slot = slot.max(w);
        }
    }
    let nodes: Vec<AccountKey> = nodes.into_iter().collect();
    let index: BTreeMap<&AccountKey, usize> = nodes.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let edges = edges
        .iter()
        .map(|((a, b), &w)| Edge {
            i: index[a],
            j: index[b],
            w,
        })
        .collect();
    SimilarityGraph { nodes, edges }
}
