//! Post ingestion, URL canonicalization and the minimum-activity filter.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::BufRead;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use url::Url;

use crate::error::CorpusError;

/// Maximum number of expansion-table hops applied to one URL.
pub const MAX_EXPANSION_HOPS: usize = 5;

/// Default minimum number of distinct URLs an account must share.
pub const DEFAULT_MIN_UNIQUE_URLS: usize = 10;

/// Identity of an account across platforms. Ordered by `(platform, user_id)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AccountKey {
    pub platform: String,
    pub user_id: String,
}

impl AccountKey {
    pub fn new(platform: impl Into<String>, user_id: impl Into<String>) -> Self {
        Self {
            platform: platform.into(),
            user_id: user_id.into(),
        }
    }
}

impl fmt::Display for AccountKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.platform, self.user_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub platform: String,
    pub user_id: String,
    pub timestamp: i64,
    pub text: String,
    #[serde(default)]
    pub urls: Vec<String>,
    #[serde(default)]
    pub is_repost: bool,
    #[serde(default)]
    pub engagement: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ai_score: Option<f64>,
}

impl Post {
    pub fn account(&self) -> AccountKey {
        AccountKey::new(self.platform.clone(), self.user_id.clone())
    }

    /// Sum of all engagement counters.
    pub fn total_engagement(&self) -> u64 {
        self.engagement.values().sum()
    }

    /// One JSONL line, without trailing newline.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("post serialization is infallible")
    }
}

/// Short-URL to expanded-URL mapping. Keys are stored canonicalized.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UrlExpansionTable {
    map: BTreeMap<String, String>,
}

impl UrlExpansionTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, short: &str, expanded: &str) -> Result<(), CorpusError> {
        let short = short.trim();
        let expanded = expanded.trim();
        if short.is_empty() || expanded.is_empty() {
            return Err(CorpusError::InvalidUrl {
                url: short.to_string(),
                message: "expansion entries must be non-empty".into(),
            });
        }
        let key = normalize_url(short)?;
        let value = normalize_url(expanded)?;
        if key == value {
            return Err(CorpusError::InvalidUrl {
                url: short.to_string(),
                message: "expansion maps URL to itself".into(),
            });
        }
        self.map.insert(key, value);
        Ok(())
    }

    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut table = Self::new();
        for (short, expanded) in pairs {
            table.insert(short, expanded)?;
        }
        Ok(table)
    }

    /// Parses the `short,expanded` CSV form (header required).
    pub fn from_csv(text: &str) -> Result<Self, CorpusError> {
        let mut table = Self::new();
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "short,expanded" => {}
            _ => {
                return Err(CorpusError::ExpansionTable {
                    line: 1,
                    message: "expected header `short,expanded`".into(),
                })
            }
        }
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (short, expanded) =
                line.split_once(',')
                    .ok_or_else(|| CorpusError::ExpansionTable {
                        line: idx + 1,
                        message: "expected two columns".into(),
                    })?;
            table
                .insert(short, expanded)
                .map_err(|e| CorpusError::ExpansionTable {
                    line: idx + 1,
                    message: e.to_string(),
                })?;
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    fn get(&self, canonical: &str) -> Option<&str> {
        self.map.get(canonical).map(String::as_str)
    }
}

fn url_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"(?i)\bhttps?://[^\s<>"']+"#).expect("valid url regex"))
}

/// HTTP(S) URLs found in free text, trailing punctuation trimmed.
pub fn extract_urls(text: &str) -> Vec<&str> {
    url_regex()
        .find_iter(text)
        .map(|m| m.as_str().trim_end_matches(['.', ',', ';', ':', '!', '?', ')', ']', '}']))
        .filter(|s| !s.is_empty())
        .collect()
}

/// Lowercases scheme and host, drops the fragment and `utm_*` query parameters.
fn normalize_url(raw: &str) -> Result<String, CorpusError> {
    let mut url = Url::parse(raw.trim()).map_err(|e| CorpusError::InvalidUrl {
        url: raw.to_string(),
        message: e.to_string(),
    })?;
    url.set_fragment(None);
    if let Some(query) = url.query() {
        let kept: Vec<&str> = query
            .split('&')
            .filter(|param| {
                let name = param.split('=').next().unwrap_or("");
                !param.is_empty() && !name.starts_with("utm_")
            })
            .collect();
        if kept.is_empty() {
            url.set_query(None);
        } else {
            let joined = kept.join("&");
            url.set_query(Some(&joined));
        }
    }
    Ok(url.to_string())
}

/// Expands `url` through `table` (transitively, at most [`MAX_EXPANSION_HOPS`])
/// and normalizes the result.
pub fn canonicalize_url(url: &str, table: &UrlExpansionTable) -> Result<String, CorpusError> {
    if url.trim().is_empty() {
        return Err(CorpusError::InvalidUrl {
            url: url.to_string(),
            message: "empty url".into(),
        });
    }
    let mut current = normalize_url(url)?;
    let mut seen = HashSet::new();
    seen.insert(current.clone());
    let mut hops = 0;
    while let Some(next) = table.get(&current) {
        hops += 1;
        if hops > MAX_EXPANSION_HOPS || !seen.insert(next.to_string()) {
            return Err(CorpusError::ExpansionLoop(url.to_string()));
        }
        current = next.to_string();
    }
    Ok(current)
}

fn required_str(obj: &Map<String, Value>, field: &str, line: usize) -> Result<String, CorpusError> {
    match obj.get(field) {
        None | Some(Value::Null) => Err(CorpusError::MissingField {
            line,
            field: field.into(),
        }),
        Some(Value::String(s)) => Ok(s.clone()),
        // numeric ids are common in platform exports
        Some(Value::Number(n)) if field != "text" && field != "platform" => Ok(n.to_string()),
        Some(_) => Err(CorpusError::InvalidField {
            line,
            field: field.into(),
            message: "expected a string".into(),
        }),
    }
}

fn invalid(line: usize, field: &str, message: &str) -> CorpusError {
    CorpusError::InvalidField {
        line,
        field: field.into(),
        message: message.into(),
    }
}

fn parse_post_object(
    value: Value,
    line: usize,
    table: &UrlExpansionTable,
) -> Result<Post, CorpusError> {
    let Value::Object(obj) = value else {
        return Err(CorpusError::MalformedLine {
            line,
            message: "expected a JSON object".into(),
        });
    };
    let id = required_str(&obj, "id", line)?;
    let platform = required_str(&obj, "platform", line)?;
    let user_id = required_str(&obj, "user_id", line)?;
    let timestamp = match obj.get("timestamp") {
        None | Some(Value::Null) => {
            return Err(CorpusError::MissingField {
                line,
                field: "timestamp".into(),
            })
        }
        Some(v) => v
            .as_i64()
            .filter(|t| *t >= 0)
            .ok_or_else(|| invalid(line, "timestamp", "expected a non-negative integer"))?,
    };
    let text = required_str(&obj, "text", line)?;

    let raw_urls: Vec<String> = match obj.get("urls") {
        None | Some(Value::Null) => extract_urls(&text).into_iter().map(String::from).collect(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| {
                v.as_str()
                    .map(String::from)
                    .ok_or_else(|| invalid(line, "urls", "expected an array of strings"))
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(invalid(line, "urls", "expected an array of strings")),
    };
    let mut urls = Vec::with_capacity(raw_urls.len());
    let mut seen = HashSet::new();
    for raw in &raw_urls {
        let canonical = canonicalize_url(raw, table).map_err(|e| invalid(line, "urls", &e.to_string()))?;
        if seen.insert(canonical.clone()) {
            urls.push(canonical);
        }
    }

    let is_repost = match obj.get("is_repost") {
        None | Some(Value::Null) => false,
        Some(Value::Bool(b)) => *b,
        Some(_) => return Err(invalid(line, "is_repost", "expected a boolean")),
    };
    let mut engagement = BTreeMap::new();
    match obj.get("engagement") {
        None | Some(Value::Null) => {}
        Some(Value::Object(metrics)) => {
            for (name, v) in metrics {
                let count = v
                    .as_u64()
                    .ok_or_else(|| invalid(line, "engagement", "counts must be non-negative integers"))?;
                engagement.insert(name.clone(), count);
            }
        }
        Some(_) => return Err(invalid(line, "engagement", "expected an object")),
    }
    let ai_score = match obj.get("ai_score") {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            v.as_f64()
                .filter(|s| (0.0..=1.0).contains(s))
                .ok_or_else(|| invalid(line, "ai_score", "expected a real in [0, 1]"))?,
        ),
    };

    Ok(Post {
        id,
        platform,
        user_id,
        timestamp,
        text,
        urls,
        is_repost,
        engagement,
        ai_score,
    })
}

/// Parses a JSONL post stream with an empty expansion table.
pub fn parse_posts<R: BufRead>(reader: R) -> Result<Vec<Post>, CorpusError> {
    parse_posts_with(reader, &UrlExpansionTable::new())
}

/// Parses a JSONL post stream. Blank lines are skipped; line numbers are 1-based.
pub fn parse_posts_with<R: BufRead>(
    reader: R,
    table: &UrlExpansionTable,
) -> Result<Vec<Post>, CorpusError> {
    let mut posts = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| CorpusError::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| CorpusError::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        posts.push(parse_post_object(value, line_no, table)?);
    }
    Ok(posts)
}

/// Distinct canonical URLs per account.
pub fn unique_urls_per_account(posts: &[Post]) -> BTreeMap<AccountKey, BTreeSet<&str>> {
    let mut per_account: BTreeMap<AccountKey, BTreeSet<&str>> = BTreeMap::new();
    for post in posts {
        per_account
            .entry(post.account())
            .or_default()
            .extend(post.urls.iter().map(String::as_str));
    }
    per_account
}

/// Accounts that shared at least `min_unique_urls` distinct URLs.
pub fn filter_active_users(
    posts: &[Post],
    min_unique_urls: usize,
) -> Result<BTreeSet<AccountKey>, CorpusError> {
    if min_unique_urls == 0 {
        return Err(CorpusError::InvalidThreshold);
    }
    Ok(unique_urls_per_account(posts)
        .into_iter()
        .filter(|(_, urls)| urls.len() >= min_unique_urls)
        .map(|(account, _)| account)
        .collect())
}
