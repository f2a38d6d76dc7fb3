//! Cohort characterization: domain credibility, state-affiliated media,
//! keyword prevalence, engagement ECDFs, AI-content prevalence and overlap.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use url::Url;

use crate::corpus::{AccountKey, Post};
use crate::error::AnalyzeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Factuality {
    VeryLow,
    Low,
    Mixed,
    MostlyFactual,
    High,
    VeryHigh,
    NA,
}

impl Factuality {
    /// Accepts `VeryLow`, `very low`, `very-low`, `MOSTLY_FACTUAL`, `n/a`, ...
    pub fn parse(raw: &str) -> Option<Self> {
        let key: String = raw
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        Some(match key.as_str() {
            "verylow" => Factuality::VeryLow,
            "low" => Factuality::Low,
            "mixed" => Factuality::Mixed,
            "mostlyfactual" => Factuality::MostlyFactual,
            "high" => Factuality::High,
            "veryhigh" => Factuality::VeryHigh,
            "na" | "" => Factuality::NA,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainLabel {
    pub domain: String,
    pub factuality: Factuality,
    pub leaning: String,
}

/// Domain labels keyed by registrable domain.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DomainTable {
    labels: BTreeMap<String, DomainLabel>,
}

impl DomainTable {
    pub fn new(labels: impl IntoIterator<Item = DomainLabel>) -> Self {
        Self {
            labels: labels
                .into_iter()
                .map(|l| (l.domain.to_lowercase(), l))
                .collect(),
        }
    }

    /// Parses `domain,factuality,leaning` CSV (header required).
    pub fn from_csv(text: &str) -> Result<Self, AnalyzeError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "domain,factuality,leaning" => {}
            _ => {
                return Err(AnalyzeError::DomainTable {
                    line: 1,
                    message: "expected header `domain,factuality,leaning`".into(),
                })
            }
        }
        let mut labels = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: &str| AnalyzeError::DomainTable {
                line: idx + 1,
                message: message.into(),
            };
            let mut cols = line.splitn(3, ',');
            let domain = cols.next().unwrap_or("").trim().to_lowercase();
            let factuality = cols.next().ok_or_else(|| bad("missing factuality"))?;
            let leaning = cols.next().unwrap_or("").trim().to_string();
            if domain.is_empty() || domain.contains('/') || domain.contains(':') {
                return Err(bad("domain must be a bare host name"));
            }
            let factuality = Factuality::parse(factuality).ok_or_else(|| bad("unknown factuality"))?;
            labels.push(DomainLabel {
                domain,
                factuality,
                leaning,
            });
        }
        Ok(Self::new(labels))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Label for `host` or its closest listed parent domain.
    pub fn lookup(&self, host: &str) -> Option<&DomainLabel> {
        suffixes(host).find_map(|s| self.labels.get(s))
    }
}

/// One domain per line; blank lines and `#` comments ignored.
pub fn parse_domain_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.trim_start_matches("www.").to_lowercase())
        .collect()
}

/// One lowercase keyword per line.
pub fn parse_keyword_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// `host`, then each parent domain: `a.b.c` -> `a.b.c`, `b.c`, `c`.
fn suffixes(host: &str) -> impl Iterator<Item = &str> {
    std::iter::successors(Some(host), |h| h.split_once('.').map(|(_, rest)| rest))
        .filter(|s| !s.is_empty())
}

/// Host of a URL, lowercased, with a leading `www.` removed.
pub fn url_domain(url: &str) -> String {
    let host = Url::parse(url)
        .ok()
        .and_then(|u| u.host_str().map(str::to_lowercase))
        .unwrap_or_else(|| url.to_lowercase());
    host.strip_prefix("www.").map(str::to_string).unwrap_or(host)
}

fn cohort_posts<'a>(posts: &'a [Post], cohort: &'a BTreeSet<AccountKey>) -> impl Iterator<Item = &'a Post> {
    posts.iter().filter(move |p| cohort.contains(&p.account()))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DomainCounts {
    pub total_shares: u64,
    pub per_domain: BTreeMap<String, u64>,
    pub per_factuality: BTreeMap<Factuality, u64>,
}

/// Aggregates URL shares by cohort members per domain and factuality bucket.
/// Domains missing from the table land in `NA` under their own host name.
pub fn label_domains(posts: &[Post], cohort: &BTreeSet<AccountKey>, table: &DomainTable) -> DomainCounts {
    let mut counts = DomainCounts::default();
    for post in cohort_posts(posts, cohort) {
        for url in &post.urls {
            let host = url_domain(url);
            let (domain, factuality) = match table.lookup(&host) {
                Some(label) => (label.domain.clone(), label.factuality),
                None => (host, Factuality::NA),
            };
            counts.total_shares += 1;
            *counts.per_domain.entry(domain).or_insert(0) += 1;
            *counts.per_factuality.entry(factuality).or_insert(0) += 1;
        }
    }
    counts
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StateAffiliatedCounts {
    pub total: u64,
    pub per_domain: BTreeMap<String, u64>,
}

/// Shares of listed domains (or their subdomains) by cohort members.
pub fn match_state_affiliated(
    posts: &[Post],
    cohort: &BTreeSet<AccountKey>,
    list: &BTreeSet<String>,
) -> StateAffiliatedCounts {
    let mut counts = StateAffiliatedCounts::default();
    if list.is_empty() {
        return counts;
    }
    for post in cohort_posts(posts, cohort) {
        for url in &post.urls {
            let host = url_domain(url);
            let hit = suffixes(&host).find(|s| list.contains(*s)).map(str::to_string);
            if let Some(hit) = hit {
                counts.total += 1;
                *counts.per_domain.entry(hit).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Occurrences of `keyword` in `haystack` not flanked by alphanumerics.
/// Both arguments must already be lowercase. Overlapping matches all count.
pub fn count_keyword(haystack: &str, keyword: &str) -> u64 {
    if keyword.is_empty() {
        return 0;
    }
    let mut count = 0;
    let mut from = 0;
    while let Some(pos) = haystack[from..].find(keyword) {
        let start = from + pos;
        let end = start + keyword.len();
        let before_ok = haystack[..start].chars().next_back().is_none_or(|c| !c.is_alphanumeric());
        let after_ok = haystack[end..].chars().next().is_none_or(|c| !c.is_alphanumeric());
        if before_ok && after_ok {
            count += 1;
        }
        from = start + haystack[start..].chars().next().map_or(1, char::len_utf8);
    }
    count
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KeywordStats {
    pub counts: BTreeMap<String, u64>,
    pub matching_posts: u64,
    pub total_posts: u64,
    pub prevalence: f64,
}

pub fn keyword_prevalence(
    posts: &[Post],
    cohort: &BTreeSet<AccountKey>,
    keywords: &BTreeSet<String>,
) -> Result<KeywordStats, AnalyzeError> {
    if keywords.is_empty() {
        return Err(AnalyzeError::NoKeywords);
    }
    let keywords: BTreeSet<String> = keywords.iter().map(|k| k.to_lowercase()).collect();
    let mut stats = KeywordStats {
        counts: keywords.iter().map(|k| (k.clone(), 0)).collect(),
        ..KeywordStats::default()
    };
    for post in cohort_posts(posts, cohort) {
        stats.total_posts += 1;
        let text = post.text.to_lowercase();
        let mut matched = false;
        for kw in &keywords {
            let n = count_keyword(&text, kw);
            if n > 0 {
                matched = true;
                *stats.counts.get_mut(kw).expect("seeded") += n;
            }
        }
        stats.matching_posts += u64::from(matched);
    }
    stats.prevalence = if stats.total_posts == 0 {
        0.0
    } else {
        stats.matching_posts as f64 / stats.total_posts as f64
    };
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngagementMetric {
    Total,
    Named(String),
}

impl EngagementMetric {
    pub fn value(&self, post: &Post) -> u64 {
        match self {
            EngagementMetric::Total => post.total_engagement(),
            EngagementMetric::Named(name) => post.engagement.get(name).copied().unwrap_or(0),
        }
    }
}

/// Right-continuous ECDF: distinct values ascending with `P(X <= value)`.
pub fn engagement_ecdf(
    posts: &[Post],
    cohort: &BTreeSet<AccountKey>,
    metric: &EngagementMetric,
) -> Result<Vec<(u64, f64)>, AnalyzeError> {
    let mut values: Vec<u64> = cohort_posts(posts, cohort).map(|p| metric.value(p)).collect();
    if values.is_empty() {
        return Err(AnalyzeError::EmptyCohort);
    }
    values.sort_unstable();
    let n = values.len() as f64;
    let mut ecdf: Vec<(u64, f64)> = Vec::new();
    for (idx, &v) in values.iter().enumerate() {
        let frac = (idx + 1) as f64 / n;
        match ecdf.last_mut() {
            Some(last) if last.0 == v => last.1 = frac,
            _ => ecdf.push((v, frac)),
        }
    }
    Ok(ecdf)
}

pub fn ecdf_to_csv(ecdf: &[(u64, f64)]) -> String {
    let mut out = String::from("value,fraction\n");
    for (v, f) in ecdf {
        let _ = writeln!(out, "{v},{f:.9}");
    }
    out
}

/// Fraction of scored cohort posts with `ai_score >= threshold`.
pub fn aigc_prevalence(
    posts: &[Post],
    cohort: &BTreeSet<AccountKey>,
    threshold: f64,
) -> Result<f64, AnalyzeError> {
    let scores: Vec<f64> = cohort_posts(posts, cohort).filter_map(|p| p.ai_score).collect();
    if scores.is_empty() {
        return Err(AnalyzeError::NoAiScores);
    }
    let hits = scores.iter().filter(|&&s| s >= threshold).count();
    Ok(hits as f64 / scores.len() as f64)
}

/// Jaccard index; 0 when both sets are empty.
pub fn cohort_overlap(a: &BTreeSet<AccountKey>, b: &BTreeSet<AccountKey>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Inputs shared by every cohort characterization.
#[derive(Debug, Clone, Default)]
pub struct AnalysisInputs {
    pub domains: DomainTable,
    pub state_affiliated: BTreeSet<String>,
    pub keywords: BTreeSet<String>,
    pub metric: Option<EngagementMetric>,
    pub ai_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortStats {
    pub cohort: String,
    pub n_accounts: usize,
    pub n_posts: usize,
    pub domains: DomainCounts,
    pub state_affiliated: StateAffiliatedCounts,
    pub keywords: Option<KeywordStats>,
    pub engagement_ecdf: Vec<(u64, f64)>,
    pub aigc_prevalence: Option<f64>,
}

pub fn cohort_stats(
    name: &str,
    posts: &[Post],
    cohort: &BTreeSet<AccountKey>,
    inputs: &AnalysisInputs,
) -> CohortStats {
    let metric = inputs.metric.clone().unwrap_or(EngagementMetric::Total);
    CohortStats {
        cohort: name.to_string(),
        n_accounts: cohort.len(),
        n_posts: cohort_posts(posts, cohort).count(),
        domains: label_domains(posts, cohort, &inputs.domains),
        state_affiliated: match_state_affiliated(posts, cohort, &inputs.state_affiliated),
        keywords: keyword_prevalence(posts, cohort, &inputs.keywords).ok(),
        engagement_ecdf: engagement_ecdf(posts, cohort, &metric).unwrap_or_default(),
        aigc_prevalence: aigc_prevalence(posts, cohort, inputs.ai_threshold).ok(),
    }
}
