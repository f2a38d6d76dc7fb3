//! Fixtures and brute-force reference implementations shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coia::analyze::{DomainLabel, DomainTable, Factuality};
use coia::corpus::{AccountKey, Post};
use coia::simgraph::{Edge, SimilarityGraph};
use coia::spectral::connected_components;
use coia::vectorize::UserUrlMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdos-Renyi style graph with weights in (0.05, 1].
pub fn random_graph(rng: &mut impl Rng, max_nodes: usize) -> SimilarityGraph {
    let n = rng.random_range(1..=max_nodes);
    let p: f64 = rng.random_range(0.1..0.6);
    let nodes: Vec<AccountKey> = (0..n).map(|i| AccountKey::new("p", format!("u{i:02}"))).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                let w: f64 = rng.random_range(0.05..=1.0);
                edges.push(Edge { i, j, w });
            }
        }
    }
    SimilarityGraph::from_parts(nodes, edges).expect("valid random graph")
}

/// Dense symmetric eigensolve per component: principal eigenvector with
/// non-negative sign, unit L2 norm, then scaled by lambda_c / lambda_max.
pub fn dense_centrality(g: &SimilarityGraph) -> Vec<f64> {
    let partition = connected_components(g);
    let mut scores = vec![0.0; g.n_nodes()];
    let mut per_component: Vec<(Vec<usize>, f64, Vec<f64>)> = Vec::new();
    for comp in &partition.components {
        if comp.len() < 2 {
            continue;
        }
        let pos: BTreeMap<usize, usize> = comp.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let mut m = DMatrix::<f64>::zeros(comp.len(), comp.len());
        for e in &g.edges {
            if let (Some(&a), Some(&b)) = (pos.get(&e.i), pos.get(&e.j)) {
                m[(a, b)] = e.w;
                m[(b, a)] = e.w;
            }
        }
        let eig = SymmetricEigen::new(m);
        let (top, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty component");
        let lambda = eig.eigenvalues[top];
        let mut v: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
        if v.iter().sum::<f64>() < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        per_component.push((comp.clone(), lambda, v));
    }
    let lambda_max = per_component.iter().map(|c| c.1).fold(0.0, f64::max);
    for (comp, lambda, v) in per_component {
        for (k, &node) in comp.iter().enumerate() {
            scores[node] = v[k] * lambda / lambda_max;
        }
    }
    scores
}

/// Random count matrix with at least two users and every row and column non-empty.
pub fn random_counts(rng: &mut impl Rng, max_dim: usize) -> UserUrlMatrix {
    let n_users = rng.random_range(2..=max_dim);
    let n_urls = rng.random_range(1..=max_dim);
    let mut dense = vec![vec![0u32; n_urls]; n_users];
    for row in dense.iter_mut() {
        for c in row.iter_mut() {
            if rng.random_bool(0.35) {
                *c = rng.random_range(1..=6);
            }
        }
    }
    for (u, row) in dense.iter_mut().enumerate() {
        if row.iter().all(|&c| c == 0) {
            row[u % n_urls] = 1;
        }
    }
    for l in 0..n_urls {
        if dense.iter().all(|r| r[l] == 0) {
            dense[l % n_users][l] = 1;
        }
    }
    UserUrlMatrix {
        users: (0..n_users).map(|i| AccountKey::new("p", format!("u{i:02}"))).collect(),
        urls: (0..n_urls).map(|l| format!("https://e.example/{l:02}")).collect(),
        rows: dense
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, &c)| c > 0).map(|(l, &c)| (l, c)).collect())
            .collect(),
    }
}

pub fn dense_counts(m: &UserUrlMatrix) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; m.urls.len()]; m.users.len()];
    for (u, row) in m.rows.iter().enumerate() {
        for &(l, c) in row {
            out[u][l] = c as f64;
        }
    }
    out
}

/// Direct evaluation of the smoothed TF-IDF formula with L2 rows.
pub fn brute_tfidf(counts: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = counts.len() as f64;
    let n_urls = counts.first().map_or(0, Vec::len);
    let df: Vec<f64> = (0..n_urls)
        .map(|l| counts.iter().filter(|r| r[l] > 0.0).count() as f64)
        .collect();
    counts
        .iter()
        .map(|row| {
            let raw: Vec<f64> = row
                .iter()
                .enumerate()
                .map(|(l, &c)| c * (((1.0 + n) / (1.0 + df[l])).ln() + 1.0))
                .collect();
            let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            raw.iter().map(|x| x / norm).collect()
        })
        .collect()
}

pub fn brute_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Nearest rank for `q = k / d` computed in integers: `max(1, ceil(k n / d))`.
pub fn exact_quantile(values: &[f64], k: u64, d: u64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as u64;
    let rank = (k * n).div_ceil(d).max(1);
    sorted[(rank - 1) as usize]
}

pub fn node_set(g: &SimilarityGraph) -> BTreeSet<AccountKey> {
    g.nodes.iter().cloned().collect()
}

pub fn edge_set(g: &SimilarityGraph) -> BTreeSet<(AccountKey, AccountKey)> {
    g.keyed_edges().into_keys().collect()
}

const WORDS: &[&str] = &[
    "vote", "ballot", "news", "qanon", "wwg1wga", "storm", "the", "rigged", "fraud", "plan", "trust", "q",
    "election", "freedom", "patriot", "report",
];
const DOMAINS: &[&str] = &[
    "rt.com", "www.rt.com", "news.rt.com", "sputniknews.com", "cnn.com", "www.bbc.co.uk", "blog.example.org",
    "example.org", "infowars.com", "apnews.com",
];

/// Random posts for analyzer checks: mixed case text with punctuation and
/// keywords glued to other tokens, URLs over labelled and unlabelled domains.
pub fn random_posts(rng: &mut impl Rng, n_posts: usize) -> Vec<Post> {
    let platforms = ["twitter", "facebook", "telegram"];
    (0..n_posts)
        .map(|i| {
            let n_words = rng.random_range(0..12);
            let mut text = String::new();
            for _ in 0..n_words {
                let w = WORDS[rng.random_range(0..WORDS.len())];
                let w = if rng.random_bool(0.2) { w.to_uppercase() } else { w.to_string() };
                let sep = [" ", " ", ", ", "! ", "#", "_", "-", "qq"][rng.random_range(0..8)];
                text.push_str(&w);
                text.push_str(sep);
            }
            let n_urls = rng.random_range(0..3);
            let urls = (0..n_urls)
                .map(|k| format!("https://{}/a/{i}/{k}", DOMAINS[rng.random_range(0..DOMAINS.len())]))
                .collect();
            let mut engagement = BTreeMap::new();
            for name in ["likes", "shares"] {
                if rng.random_bool(0.8) {
                    engagement.insert(name.to_string(), rng.random_range(0..20u64));
                }
            }
            Post {
                id: format!("p{i}"),
                platform: platforms[rng.random_range(0..3)].to_string(),
                user_id: format!("u{}", rng.random_range(0..8)),
                timestamp: i as i64 * 3600,
                text,
                urls,
                is_repost: false,
                engagement,
                ai_score: rng.random_bool(0.7).then(|| rng.random_range(0..=10) as f64 / 10.0),
            }
        })
        .collect()
}

pub fn domain_table() -> DomainTable {
    let label = |d: &str, f| DomainLabel {
        domain: d.to_string(),
        factuality: f,
        leaning: "x".into(),
    };
    DomainTable::new([
        label("rt.com", Factuality::VeryLow),
        label("news.rt.com", Factuality::Low),
        label("cnn.com", Factuality::MostlyFactual),
        label("bbc.co.uk", Factuality::High),
        label("example.org", Factuality::Mixed),
        label("apnews.com", Factuality::VeryHigh),
    ])
}

pub fn random_cohort(rng: &mut impl Rng, posts: &[Post]) -> BTreeSet<AccountKey> {
    posts.iter().map(Post::account).filter(|_| rng.random_bool(0.5)).collect()
}

/// Keyword occurrences by trying every char boundary as a start position.
pub fn naive_keyword_count(text: &str, kw: &str) -> u64 {
    let text = text.to_lowercase();
    let mut n = 0;
    for start in 0..text.len() {
        if !text.is_char_boundary(start) || !text[start..].starts_with(kw) {
            continue;
        }
        let end = start + kw.len();
        let before = text[..start].chars().last();
        let after = text[end..].chars().next();
        if before.is_none_or(|c| !c.is_alphanumeric()) && after.is_none_or(|c| !c.is_alphanumeric()) {
            n += 1;
        }
    }
    n
}

/// Host without a leading `www.`, labelled by the longest matching table suffix.
pub fn naive_label(url: &str, table: &[(&str, Factuality)]) -> (String, Factuality) {
    let host = url::Url::parse(url).unwrap().host_str().unwrap().to_lowercase();
    let host = host.strip_prefix("www.").unwrap_or(&host).to_string();
    let best = table
        .iter()
        .filter(|(d, _)| host == *d || host.ends_with(&format!(".{d}")))
        .max_by_key(|(d, _)| d.len());
    match best {
        Some((d, f)) => (d.to_string(), *f),
        None => (host, Factuality::NA),
    }
}

pub const TABLE: &[(&str, Factuality)] = &[
    ("rt.com", Factuality::VeryLow),
    ("news.rt.com", Factuality::Low),
    ("cnn.com", Factuality::MostlyFactual),
    ("bbc.co.uk", Factuality::High),
    ("example.org", Factuality::Mixed),
    ("apnews.com", Factuality::VeryHigh),
];
