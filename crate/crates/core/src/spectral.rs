//! Connected components, topological component density and per-component
//! eigenvector centrality.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SpectralError;
use crate::simgraph::SimilarityGraph;

/// Disjoint node sets covering the graph. Each set is sorted; sets are ordered
/// by their smallest node index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentPartition {
    pub components: Vec<Vec<usize>>,
}

impl ComponentPartition {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Component index of every node.
    pub fn labels(&self, n_nodes: usize) -> Vec<usize> {
        let mut labels = vec![usize::MAX; n_nodes];
        for (c, members) in self.components.iter().enumerate() {
            for &v in members {
                labels[v] = c;
            }
        }
        labels
    }

    pub fn non_trivial(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.components.iter().filter(|c| c.len() >= 2)
    }
}

pub fn connected_components(g: &SimilarityGraph) -> ComponentPartition {
    let adj = g.adjacency();
    let mut seen = vec![false; g.n_nodes()];
    let mut components = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..g.n_nodes() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut members = Vec::new();
        while let Some(v) = queue.pop_front() {
            members.push(v);
            for &(u, _) in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    ComponentPartition { components }
}

/// `2m / (n (n - 1))` over edges with both endpoints in `component`; weights ignored.
pub fn component_density(component: &[usize], g: &SimilarityGraph) -> Result<f64, SpectralError> {
    let n = component.len();
    if n < 2 {
        return Err(SpectralError::DensityUndefined(n));
    }
    let mut member = vec![false; g.n_nodes()];
    for &v in component {
        member[v] = true;
    }
    let m = g.edges.iter().filter(|e| member[e.i] && member[e.j]).count();
    Ok(2.0 * m as f64 / (n as f64 * (n as f64 - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CentralityConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CentralityConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 1000,
        }
    }
}

/// Non-negative eigenvector centrality per node.
///
/// Within each component of size >= 2 the score vector has L2 norm
/// `eigenvalues[c] / max(eigenvalues)`; singleton components score 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityVector {
    pub scores: Vec<f64>,
    pub partition: ComponentPartition,
    /// Principal eigenvalue of the weighted adjacency of each component
    /// (0 for singletons), indexed like `partition.components`.
    pub eigenvalues: Vec<f64>,
}

impl CentralityVector {
    pub fn score(&self, node: usize) -> f64 {
        self.scores[node]
    }
}

struct Eigenpair {
    value: f64,
    vector: Vec<f64>,
}

/// Power iteration on `W + I` restricted to one component. Stops once both the
/// successive change and the eigen-residual `||W x - lambda x||` drop below `tol`.
fn principal_eigenpair(
    members: &[usize],
    adj: &[Vec<(usize, f64)>],
    local: &[usize],
    cfg: CentralityConfig,
) -> Result<Eigenpair, SpectralError> {
    let n = members.len();
    let local_adj: Vec<Vec<(usize, f64)>> = members
        .iter()
        .map(|&v| adj[v].iter().map(|&(u, w)| (local[u], w)).collect())
        .collect();
    let apply = |x: &[f64], out: &mut [f64]| {
        for (row, o) in local_adj.iter().zip(out.iter_mut()) {
            *o = row.iter().map(|&(u, w)| w * x[u]).sum();
        }
    };

    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut wx = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_iter {
        apply(&x, &mut wx);
        let mut next: Vec<f64> = x.iter().zip(&wx).map(|(a, b)| a + b).collect();
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        next.iter_mut().for_each(|v| *v /= norm);
        let change = next.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        x = next;
        if change < cfg.tol {
            apply(&x, &mut wx);
            let lambda: f64 = x.iter().zip(&wx).map(|(a, b)| a * b).sum();
            residual = wx
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - lambda * b) * (a - lambda * b))
                .sum::<f64>()
                .sqrt();
            if residual < cfg.tol * (1.0 + lambda) {
                return Ok(Eigenpair { value: lambda, vector: x });
            }
        }
    }
    if residual.is_infinite() {
        apply(&x, &mut wx);
        let lambda: f64 = x.iter().zip(&wx).map(|(a, b)| a * b).sum();
        residual = wx
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - lambda * b) * (a - lambda * b))
            .sum::<f64>()
            .sqrt();
    }
    Err(SpectralError::NoConvergence {
        iterations: cfg.max_iter,
        residual,
    })
}

pub fn eigenvector_centrality(
    g: &SimilarityGraph,
    cfg: CentralityConfig,
) -> Result<CentralityVector, SpectralError> {
    if g.n_nodes() == 0 {
        return Err(SpectralError::EmptyGraph);
    }
    let partition = connected_components(g);
    let adj = g.adjacency();
    let mut local = vec![0usize; g.n_nodes()];
    for members in &partition.components {
        for (pos, &v) in members.iter().enumerate() {
            local[v] = pos;
        }
    }
    let pairs: Vec<Option<Eigenpair>> = partition
        .components
        .par_iter()
        .map(|members| {
            if members.len() < 2 {
                Ok(None)
            } else {
                principal_eigenpair(members, &adj, &local, cfg).map(Some)
            }
        })
        .collect::<Result<_, _>>()?;

    let lambda_max = pairs
        .iter()
        .flatten()
        .map(|p| p.value)
        .fold(0.0f64, f64::max);
    let mut scores = vec![0.0; g.n_nodes()];
    let mut eigenvalues = vec![0.0; partition.len()];
    for (c, (members, pair)) in partition.components.iter().zip(&pairs).enumerate() {
        if let Some(pair) = pair {
            eigenvalues[c] = pair.value;
            let scale = pair.value / lambda_max;
            for (&v, &s) in members.iter().zip(&pair.vector) {
                scores[v] = s * scale;
            }
        }
    }
    Ok(CentralityVector {
        scores,
        partition,
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::AccountKey;
    use crate::simgraph::Edge;

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> SimilarityGraph {
        SimilarityGraph::from_parts(
            (0..n).map(|i| AccountKey::new("p", format!("{i:02}"))).collect(),
            edges.iter().map(|&(i, j, w)| Edge { i, j, w }).collect(),
        )
        .unwrap()
    }

    #[test]
    fn component_shapes() {
        let two_triangles = graph(6, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)]);
        let p = connected_components(&two_triangles);
        assert_eq!(p.components, vec![vec![0, 1, 2], vec![3, 4, 5]]);
        assert_eq!(connected_components(&graph(4, &[])).len(), 4);
        let path = graph(5, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0)]);
        assert_eq!(connected_components(&path).len(), 1);
    }

    #[test]
    fn densities() {
        let k3 = graph(3, &[(0, 1, 0.3), (1, 2, 0.4), (0, 2, 0.9)]);
        assert_eq!(component_density(&[0, 1, 2], &k3).unwrap(), 1.0);
        let p3 = graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        assert_eq!(component_density(&[0, 1, 2], &p3).unwrap(), 2.0 / 3.0);
        let star = graph(4, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)]);
        assert_eq!(component_density(&[0, 1, 2, 3], &star).unwrap(), 0.5);
        assert_eq!(component_density(&[0], &star), Err(SpectralError::DensityUndefined(1)));
    }

    #[test]
    fn k3_scores_equal() {
        let k3 = graph(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]);
        let c = eigenvector_centrality(&k3, CentralityConfig::default()).unwrap();
        assert!((c.scores[0] - c.scores[1]).abs() < 1e-12);
        assert!((c.scores[1] - c.scores[2]).abs() < 1e-12);
        assert!((c.eigenvalues[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn p3_center_ratio() {
        let p3 = graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let c = eigenvector_centrality(&p3, CentralityConfig::default()).unwrap();
        assert!((c.scores[1] / c.scores[0] - 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn weaker_component_is_scaled() {
        let g = graph(
            7,
            &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 0.5), (4, 5, 0.5), (3, 5, 0.5)],
        );
        let c = eigenvector_centrality(&g, CentralityConfig::default()).unwrap();
        for k in 0..3 {
            assert!((c.scores[k + 3] - 0.5 * c.scores[k]).abs() < 1e-9);
        }
        assert_eq!(c.scores[6], 0.0);
    }

    #[test]
    fn no_convergence_reports_residual() {
        let path: Vec<(usize, usize, f64)> = (0..59).map(|i| (i, i + 1, 1.0)).collect();
        let g = graph(60, &path);
        let err = eigenvector_centrality(&g, CentralityConfig { tol: 1e-12, max_iter: 3 }).unwrap_err();
        match err {
            SpectralError::NoConvergence { iterations, residual } => {
                assert_eq!(iterations, 3);
                assert!(residual > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            eigenvector_centrality(&SimilarityGraph::empty(), CentralityConfig::default()),
            Err(SpectralError::EmptyGraph)
        );
    }
}
