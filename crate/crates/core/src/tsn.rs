//! Text similarity network over precomputed post embeddings and
//! content-amplification detection.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::{AccountKey, Post};
use crate::error::TsnError;
use crate::simgraph::{quantile, Edge, SimilarityGraph};
use crate::spectral::{eigenvector_centrality, CentralityConfig};

const DAY_SECS: i64 = 86_400;

const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "am", "an", "and", "any", "are", "as", "at", "be",
    "because", "been", "before", "being", "but", "by", "can", "could", "did", "do", "does", "for",
    "from", "had", "has", "have", "he", "her", "here", "him", "his", "how", "i", "if", "in",
    "into", "is", "it", "its", "just", "me", "more", "my", "no", "not", "now", "of", "on", "or",
    "our", "out", "over", "she", "so", "some", "than", "that", "the", "their", "them", "then",
    "there", "these", "they", "this", "those", "to", "too", "up", "us", "very", "was", "we",
    "were", "what", "when", "where", "which", "who", "why", "will", "with", "would", "you",
    "your",
];

pub fn default_stopwords() -> BTreeSet<String> {
    DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect()
}

/// Unit-normalized embedding per post id, all of one dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, post_id: &str) -> Option<&[f64]> {
        self.vectors.get(post_id).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Stores `vector` normalized to unit length.
    pub fn insert(&mut self, post_id: impl Into<String>, mut vector: Vec<f64>) -> Result<(), String> {
        if vector.len() < 2 {
            return Err("embedding dimension must be at least 2".into());
        }
        if self.dim != 0 && vector.len() != self.dim {
            return Err(format!("dimension {} differs from {}", vector.len(), self.dim));
        }
        let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err("zero or non-finite vector".into());
        }
        vector.iter_mut().for_each(|v| *v /= norm);
        self.dim = vector.len();
        self.vectors.insert(post_id.into(), vector);
        Ok(())
    }

    /// Reads `{"post_id": "...", "vector": [...]}` lines.
    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Self, TsnError> {
        let mut store = Self::new();
        for (idx, line) in reader.lines().enumerate() {
            let bad = |message: String| TsnError::Embeddings {
                line: idx + 1,
                message,
            };
            let line = line.map_err(|e| bad(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let value: Value = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
            let id = value
                .get("post_id")
                .and_then(Value::as_str)
                .ok_or_else(|| bad("missing field: post_id".into()))?;
            let vector = value
                .get("vector")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("missing field: vector".into()))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| bad("vector entries must be numbers".into())))
                .collect::<Result<Vec<f64>, _>>()?;
            store.insert(id, vector).map_err(bad)?;
        }
        Ok(store)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (id, v) in &self.vectors {
            out.push_str(&serde_json::json!({"post_id": id, "vector": v}).to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsnConfig {
    pub edge_threshold: f64,
    pub centrality_top_fraction: f64,
    pub window_secs: i64,
    pub min_eligible_posts: usize,
    pub stopwords: BTreeSet<String>,
}

impl Default for TsnConfig {
    fn default() -> Self {
        Self {
            edge_threshold: 0.95,
            centrality_top_fraction: 0.005,
            window_secs: DAY_SECS,
            min_eligible_posts: 3,
            stopwords: default_stopwords(),
        }
    }
}

impl TsnConfig {
    pub fn validate(&self) -> Result<(), TsnError> {
        if !(self.edge_threshold > 0.0 && self.edge_threshold <= 1.0) {
            return Err(TsnError::InvalidConfig("edge_threshold must lie in (0, 1]".into()));
        }
        if !(self.centrality_top_fraction > 0.0 && self.centrality_top_fraction < 1.0) {
            return Err(TsnError::InvalidConfig(
                "centrality_top_fraction must lie in (0, 1)".into(),
            ));
        }
        if self.window_secs <= 0 {
            return Err(TsnError::InvalidConfig("window must be positive".into()));
        }
        Ok(())
    }
}

fn strip_regexes() -> &'static (Regex, Regex, Regex) {
    static RE: OnceLock<(Regex, Regex, Regex)> = OnceLock::new();
    RE.get_or_init(|| {
        (
            Regex::new(r"(?i)https?://\S+").expect("url regex"),
            Regex::new(r"[\p{Emoji_Presentation}\x{FE0E}\x{FE0F}\x{200D}]").expect("emoji regex"),
            Regex::new(r"\p{P}").expect("punctuation regex"),
        )
    })
}

/// Strips URLs, emoji and punctuation, lowercases and removes stopwords.
/// Returns `None` when fewer than four tokens remain.
pub fn preprocess_text(text: &str, stopwords: &BTreeSet<String>) -> Option<String> {
    let (urls, emoji, punct) = strip_regexes();
    let no_urls = urls.replace_all(text, " ");
    let no_emoji = emoji.replace_all(&no_urls, " ");
    let cleaned = punct.replace_all(&no_emoji, "").to_lowercase();
    let tokens: Vec<&str> = cleaned
        .split_whitespace()
        .filter(|t| !stopwords.contains(*t))
        .collect();
    (tokens.len() >= 4).then(|| tokens.join(" "))
}

/// Builds the text similarity network.
///
/// Eligible posts are non-reposts that survive [`preprocess_text`]; accounts
/// with fewer than `min_eligible_posts` of them are dropped. For every window
/// shared by two accounts the window similarity is the mean cosine over all
/// cross pairs of their posts, computed as `(sum a) . (sum b) / (n_a n_b)` on
/// unit vectors. The edge weight is the mean over shared windows.
pub fn build_tsn(
    posts: &[Post],
    emb: &EmbeddingStore,
    cfg: &TsnConfig,
) -> Result<SimilarityGraph, TsnError> {
    cfg.validate()?;
    let mut eligible: BTreeMap<AccountKey, Vec<(i64, &[f64])>> = BTreeMap::new();
    for post in posts {
        if post.is_repost || preprocess_text(&post.text, &cfg.stopwords).is_none() {
            continue;
        }
        let vector = emb
            .get(&post.id)
            .ok_or_else(|| TsnError::MissingEmbedding(post.id.clone()))?;
        let window = post.timestamp.div_euclid(cfg.window_secs);
        eligible.entry(post.account()).or_default().push((window, vector));
    }
    eligible.retain(|_, p| p.len() >= cfg.min_eligible_posts);

    let nodes: Vec<AccountKey> = eligible.keys().cloned().collect();
    let dim = emb.dim();
    let mut windows: BTreeMap<i64, BTreeMap<usize, (Vec<f64>, usize)>> = BTreeMap::new();
    for (user, user_posts) in eligible.values().enumerate() {
        for &(window, vector) in user_posts {
            let slot = windows
                .entry(window)
                .or_default()
                .entry(user)
                .or_insert_with(|| (vec![0.0; dim], 0));
            slot.0.iter_mut().zip(vector).for_each(|(s, v)| *s += v);
            slot.1 += 1;
        }
    }

    let mut pairs: HashMap<(usize, usize), (f64, usize)> = HashMap::new();
    for active in windows.values() {
        let members: Vec<(&usize, &(Vec<f64>, usize))> = active.iter().collect();
        for (a_pos, &(&a, (sum_a, n_a))) in members.iter().enumerate() {
            for &(&b, (sum_b, n_b)) in &members[a_pos + 1..] {
                let dot: f64 = sum_a.iter().zip(sum_b).map(|(x, y)| x * y).sum();
                let sim = dot / (*n_a * *n_b) as f64;
                let slot = pairs.entry((a, b)).or_insert((0.0, 0));
                slot.0 += sim;
                slot.1 += 1;
            }
        }
    }
    let mut edges: Vec<Edge> = pairs
        .into_iter()
        .map(|((i, j), (sum, count))| Edge {
            i,
            j,
            w: sum / count as f64,
        })
        .filter(|e| e.w > 0.0)
        .collect();
    edges.sort_by(|a, b| (a.i, a.j).cmp(&(b.i, b.j)));
    Ok(SimilarityGraph { nodes, edges })
}

/// Accounts whose centrality on the `edge_threshold`-filtered network ranks in
/// the top `centrality_top_fraction` (ties included).
pub fn detect_tsn_coordinated(
    tsn: &SimilarityGraph,
    cfg: &TsnConfig,
) -> Result<BTreeSet<AccountKey>, TsnError> {
    cfg.validate()?;
    let strong = tsn.retain_edges(|e| e.w >= cfg.edge_threshold).drop_isolated();
    if strong.is_empty() {
        return Ok(BTreeSet::new());
    }
    let centrality = eigenvector_centrality(&strong, CentralityConfig::default())?;
    let tau = quantile(&centrality.scores, 1.0 - cfg.centrality_top_fraction)?;
    Ok(strong
        .nodes
        .iter()
        .zip(&centrality.scores)
        .filter(|(_, &s)| s >= tau)
        .map(|(k, _)| k.clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(id: &str, user: &str, ts: i64, text: &str) -> Post {
        Post {
            id: id.into(),
            platform: "p".into(),
            user_id: user.into(),
            timestamp: ts,
            text: text.into(),
            urls: vec![],
            is_repost: false,
            engagement: Default::default(),
            ai_score: None,
        }
    }

    const TEXT: &str = "alpha bravo charlie delta echo";

    #[test]
    fn short_content_dropped() {
        assert_eq!(preprocess_text("Go vote! https://x.co 🇺🇸", &BTreeSet::new()), None);
    }

    #[test]
    fn stopwords_removed() {
        let stop = BTreeSet::from(["the".to_string()]);
        assert_eq!(
            preprocess_text("the quick brown fox jumps", &stop).as_deref(),
            Some("quick brown fox jumps")
        );
        assert_eq!(
            preprocess_text("The QUICK, brown fox... jumps! 😀", &stop).as_deref(),
            Some("quick brown fox jumps")
        );
    }

    #[test]
    fn embeddings_validated() {
        let mut s = EmbeddingStore::new();
        assert!(s.insert("a", vec![3.0, 4.0]).is_ok());
        assert_eq!(s.get("a").unwrap(), &[0.6, 0.8]);
        assert!(s.insert("b", vec![0.0, 0.0]).is_err());
        assert!(s.insert("c", vec![1.0, 0.0, 0.0]).is_err());
        assert!(EmbeddingStore::new().insert("d", vec![1.0]).is_err());
        let parsed = EmbeddingStore::from_jsonl(s.to_jsonl().as_bytes()).unwrap();
        assert_eq!(parsed, s);
        assert!(EmbeddingStore::from_jsonl(r#"{"vector":[1,2]}"#.as_bytes()).is_err());
    }

    fn cfg(min_posts: usize) -> TsnConfig {
        TsnConfig {
            min_eligible_posts: min_posts,
            ..TsnConfig::default()
        }
    }

    #[test]
    fn identical_vectors_same_day() {
        let posts = vec![post("1", "a", 10, TEXT), post("2", "b", 20, TEXT)];
        let mut emb = EmbeddingStore::new();
        emb.insert("1", vec![1.0, 2.0]).unwrap();
        emb.insert("2", vec![1.0, 2.0]).unwrap();
        let g = build_tsn(&posts, &emb, &cfg(1)).unwrap();
        assert_eq!(g.n_edges(), 1);
        assert!((g.edges[0].w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_days_no_edge() {
        let posts = vec![post("1", "a", 10, TEXT), post("2", "b", DAY_SECS + 10, TEXT)];
        let mut emb = EmbeddingStore::new();
        emb.insert("1", vec![1.0, 0.0]).unwrap();
        emb.insert("2", vec![1.0, 0.0]).unwrap();
        let g = build_tsn(&posts, &emb, &cfg(1)).unwrap();
        assert_eq!(g.n_nodes(), 2);
        assert_eq!(g.n_edges(), 0);
    }

    #[test]
    fn averages_across_windows() {
        // day 0 similarity 0.9, day 1 similarity 1.0
        let c = 0.9f64;
        let s = (1.0 - c * c).sqrt();
        let posts = vec![
            post("a0", "a", 0, TEXT),
            post("b0", "b", 5, TEXT),
            post("a1", "a", DAY_SECS, TEXT),
            post("b1", "b", DAY_SECS + 5, TEXT),
        ];
        let mut emb = EmbeddingStore::new();
        emb.insert("a0", vec![1.0, 0.0]).unwrap();
        emb.insert("b0", vec![c, s]).unwrap();
        emb.insert("a1", vec![0.0, 1.0]).unwrap();
        emb.insert("b1", vec![0.0, 1.0]).unwrap();
        let g = build_tsn(&posts, &emb, &cfg(1)).unwrap();
        assert!((g.edges[0].w - 0.95).abs() < 1e-12);
    }

    #[test]
    fn reposts_short_posts_and_inactive_users_skipped() {
        let mut repost = post("r", "a", 0, TEXT);
        repost.is_repost = true;
        let posts = vec![repost, post("s", "a", 0, "too short"), post("ok", "b", 0, TEXT)];
        let mut emb = EmbeddingStore::new();
        emb.insert("ok", vec![1.0, 0.0]).unwrap();
        let g = build_tsn(&posts, &emb, &cfg(1)).unwrap();
        assert_eq!(g.nodes, vec![AccountKey::new("p", "b")]);
        let g = build_tsn(&posts, &emb, &cfg(3)).unwrap();
        assert!(g.is_empty());
    }

    #[test]
    fn missing_embedding_names_post() {
        let posts = vec![post("lost", "a", 0, TEXT)];
        assert_eq!(
            build_tsn(&posts, &EmbeddingStore::new(), &cfg(1)),
            Err(TsnError::MissingEmbedding("lost".into()))
        );
    }

    fn clique(n: usize, w: f64) -> SimilarityGraph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push(Edge { i, j, w });
            }
        }
        SimilarityGraph::from_parts((0..n).map(|i| AccountKey::new("p", format!("{i}"))).collect(), edges).unwrap()
    }

    #[test]
    fn tied_clique_fully_detected() {
        let found = detect_tsn_coordinated(&clique(10, 0.99), &TsnConfig::default()).unwrap();
        assert_eq!(found.len(), 10);
    }

    #[test]
    fn weak_edges_detect_nothing() {
        let found = detect_tsn_coordinated(&clique(10, 0.90), &TsnConfig::default()).unwrap();
        assert!(found.is_empty());
    }

    #[test]
    fn config_validation() {
        let bad = TsnConfig {
            centrality_top_fraction: 1.0,
            ..TsnConfig::default()
        };
        assert!(detect_tsn_coordinated(&clique(3, 1.0), &bad).is_err());
    }
}
