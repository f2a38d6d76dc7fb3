//! Bipartite user-URL matrix, document-frequency filtering and TF-IDF weighting.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::corpus::{AccountKey, Post};
use crate::error::VectorizeError;
use crate::simgraph::nearest_rank_index;

pub const DEFAULT_MIN_DF: usize = 5;
pub const DEFAULT_MAX_DF_QUANTILE: f64 = 0.90;

/// Sparse user x URL share counts. Rows are sorted by column index.
#[derive(Debug, Clone, PartialEq)]
pub struct UserUrlMatrix {
    pub users: Vec<AccountKey>,
    pub urls: Vec<String>,
    pub rows: Vec<Vec<(usize, u32)>>,
}

/// L2-normalized TF-IDF rows over the same index space as the source matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfMatrix {
    pub users: Vec<AccountKey>,
    pub urls: Vec<String>,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl UserUrlMatrix {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_urls(&self) -> usize {
        self.urls.len()
    }

    pub fn count(&self, user: usize, url: usize) -> u32 {
        self.rows[user]
            .binary_search_by_key(&url, |&(c, _)| c)
            .map(|pos| self.rows[user][pos].1)
            .unwrap_or(0)
    }

    /// Number of distinct users sharing each URL.
    pub fn document_frequencies(&self) -> Vec<usize> {
        let mut df = vec![0usize; self.urls.len()];
        for row in &self.rows {
            for &(col, _) in row {
                df[col] += 1;
            }
        }
        df
    }

    /// Keeps the columns flagged in `keep`, reindexes them and drops rows left empty.
    fn retain_columns(&self, keep: &[bool]) -> UserUrlMatrix {
        let mut remap = vec![usize::MAX; self.urls.len()];
        let mut urls = Vec::new();
        for (col, url) in self.urls.iter().enumerate() {
            if keep[col] {
                remap[col] = urls.len();
                urls.push(url.clone());
            }
        }
        let mut users = Vec::new();
        let mut rows = Vec::new();
        for (user, row) in self.users.iter().zip(&self.rows) {
            let kept: Vec<(usize, u32)> = row
                .iter()
                .filter(|(c, _)| keep[*c])
                .map(|&(c, n)| (remap[c], n))
                .collect();
            if !kept.is_empty() {
                users.push(user.clone());
                rows.push(kept);
            }
        }
        UserUrlMatrix { users, urls, rows }
    }

    /// `platform,user_id,url,count` rows in matrix order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("platform,user_id,url,count\n");
        for (user, row) in self.users.iter().zip(&self.rows) {
            for &(col, count) in row {
                let _ = writeln!(out, "{},{},{},{}", user.platform, user.user_id, self.urls[col], count);
            }
        }
        out
    }
}

impl TfidfMatrix {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn row_norm(&self, user: usize) -> f64 {
        self.rows[user].iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("platform,user_id,url,weight\n");
        for (user, row) in self.users.iter().zip(&self.rows) {
            for &(col, w) in row {
                let _ = writeln!(out, "{},{},{},{:.9}", user.platform, user.user_id, self.urls[col], w);
            }
        }
        out
    }
}

/// Counts, per active account, the posts containing each canonical URL.
pub fn build_user_url_matrix(
    posts: &[Post],
    active: &BTreeSet<AccountKey>,
    include_reposts: bool,
) -> Result<UserUrlMatrix, VectorizeError> {
    let mut counts: BTreeMap<AccountKey, BTreeMap<&str, u32>> = BTreeMap::new();
    for post in posts {
        if post.is_repost && !include_reposts {
            continue;
        }
        let account = post.account();
        if !active.contains(&account) || post.urls.is_empty() {
            continue;
        }
        let row = counts.entry(account).or_default();
        // a post's urls are already distinct
        for url in &post.urls {
            *row.entry(url.as_str()).or_insert(0) += 1;
        }
    }
    if counts.is_empty() {
        return Err(VectorizeError::EmptyMatrix);
    }
    let url_set: BTreeSet<&str> = counts.values().flat_map(|r| r.keys().copied()).collect();
    let urls: Vec<String> = url_set.iter().map(|s| s.to_string()).collect();
    let index: BTreeMap<&str, usize> = url_set.iter().enumerate().map(|(i, u)| (*u, i)).collect();
    let mut users = Vec::with_capacity(counts.len());
    let mut rows = Vec::with_capacity(counts.len());
    for (account, row) in counts {
        users.push(account);
        rows.push(row.into_iter().map(|(url, n)| (index[url], n)).collect());
    }
    Ok(UserUrlMatrix { users, urls, rows })
}

/// Drops URLs with `df < min_df`, then those above the nearest-rank
/// `max_df_quantile` of the surviving df values, then empty rows.
pub fn apply_df_filters(
    m: &UserUrlMatrix,
    min_df: usize,
    max_df_quantile: f64,
) -> Result<UserUrlMatrix, VectorizeError> {
    if min_df == 0 {
        return Err(VectorizeError::InvalidParameter("min_df must be at least 1".into()));
    }
    if !(max_df_quantile > 0.0 && max_df_quantile <= 1.0) {
        return Err(VectorizeError::InvalidParameter(format!(
            "max_df_quantile {max_df_quantile} outside (0, 1]"
        )));
    }
    let df = m.document_frequencies();
    let mut surviving: Vec<usize> = df.iter().copied().filter(|&d| d >= min_df).collect();
    if surviving.is_empty() {
        return Err(VectorizeError::NoUrlsSurvive);
    }
    surviving.sort_unstable();
    let max_df = surviving[nearest_rank_index(surviving.len(), max_df_quantile)];
    let keep: Vec<bool> = df.iter().map(|&d| d >= min_df && d <= max_df).collect();
    Ok(m.retain_columns(&keep))
}

/// Smoothed-idf TF-IDF with L2 row normalization:
/// `w(u, l) = count(u, l) * (ln((1 + N) / (1 + df(l))) + 1)`.
pub fn tfidf(m: &UserUrlMatrix) -> Result<TfidfMatrix, VectorizeError> {
    if m.users.is_empty() || m.urls.is_empty() {
        return Err(VectorizeError::EmptyMatrix);
    }
    let n = m.n_users() as f64;
    let idf: Vec<f64> = m
        .document_frequencies()
        .into_iter()
        .map(|d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
        .collect();
    let rows = m
        .rows
        .iter()
        .map(|row| {
            let raw: Vec<(usize, f64)> = row.iter().map(|&(c, k)| (c, k as f64 * idf[c])).collect();
            let norm = raw.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
            raw.into_iter().map(|(c, w)| (c, w / norm)).collect()
        })
        .collect();
    Ok(TfidfMatrix {
        users: m.users.clone(),
        urls: m.urls.clone(),
        rows,
    })
}
