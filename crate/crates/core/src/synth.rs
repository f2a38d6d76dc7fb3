//! Deterministic synthetic multi-platform corpora with planted coordinated
//! cohorts, and precision/recall scoring against the planted ground truth.
//!
//! All randomness comes from a single `ChaCha8Rng` seeded with
//! `SeedableRng::seed_from_u64(spec.seed)`; draws happen in a fixed order, so a
//! given spec reproduces the same posts, truth and embeddings byte for byte.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Zipf};
use serde::{Deserialize, Serialize};

use crate::corpus::{AccountKey, Post};
use crate::error::SynthError;
use crate::tsn::EmbeddingStore;

const DAY_SECS: i64 = 86_400;
/// Minimum pairwise URL overlap between members of one cohort, as a fraction
/// of `urls_per_member`.
pub const MIN_POOL_OVERLAP: f64 = 0.6;
const NOISE_MAGNITUDE: f64 = 0.05;
const N_DOMAINS: usize = 60;

const VOCAB: &[&str] = &[
    "election", "vote", "ballot", "county", "senate", "debate", "economy", "border", "policy",
    "campaign", "rally", "poll", "candidate", "governor", "inflation", "taxes", "energy", "media",
    "report", "court", "justice", "freedom", "rights", "community", "school", "health", "market",
    "jobs", "wages", "housing", "climate", "security", "veterans", "farmers", "river", "weather",
    "stadium", "concert", "festival", "recipe", "garden", "coffee", "travel", "museum", "library",
    "science", "rocket", "ocean", "forest", "mountain", "coast", "bridge", "highway", "railway",
    "station", "airport", "hospital", "doctor", "nurse", "teacher", "student", "family", "friends",
    "neighbors", "weekend", "morning", "evening", "tonight", "update", "breaking", "analysis",
    "opinion", "history", "future", "local", "national", "global", "digital", "video", "photo",
];

const AMPLIFIED: &[&str] = &[
    "wwg1wga", "stolen", "rigged", "patriots", "awakening", "truth", "exposed", "cover", "scandal",
    "corrupt", "regime", "uprising", "globalists", "censored", "deep", "state", "plan", "storm",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextMode {
    None,
    NearDuplicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub size: usize,
    /// Members are split evenly across these platforms in order.
    pub platforms: Vec<String>,
    pub pool_size: usize,
    pub urls_per_member: usize,
    pub text_mode: TextMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformShare {
    pub name: String,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_organic: usize,
    pub platforms: Vec<PlatformShare>,
    pub url_catalog_size: usize,
    pub zipf_exponent: f64,
    /// Inclusive range of distinct URLs per organic user.
    pub organic_urls_per_user: (usize, usize),
    pub cohorts: Vec<CohortSpec>,
    pub days: usize,
    pub start_timestamp: i64,
    pub embedding_dim: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_organic: 500,
            platforms: vec![
                PlatformShare { name: "twitter".into(), share: 0.4 },
                PlatformShare { name: "facebook".into(), share: 0.3 },
                PlatformShare { name: "telegram".into(), share: 0.3 },
            ],
            url_catalog_size: 2000,
            zipf_exponent: 1.2,
            organic_urls_per_user: (10, 50),
            cohorts: vec![
                CohortSpec {
                    size: 20,
                    platforms: vec!["twitter".into()],
                    pool_size: 40,
                    urls_per_member: 30,
                    text_mode: TextMode::None,
                },
                CohortSpec {
                    size: 15,
                    platforms: vec!["telegram".into()],
                    pool_size: 40,
                    urls_per_member: 30,
                    text_mode: TextMode::NearDuplicate,
                },
            ],
            days: 14,
            // 2024-06-01T00:00:00Z
            start_timestamp: 1_717_200_000,
            embedding_dim: 32,
            seed: 2024,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidSpec(m.into()));
        if self.n_organic == 0 || self.url_catalog_size == 0 || self.days == 0 {
            return bad("n_organic, url_catalog_size and days must be at least 1");
        }
        if self.platforms.is_empty() || self.platforms.iter().any(|p| p.share < 0.0 || p.name.is_empty()) {
            return bad("platform shares must be non-negative with non-empty names");
        }
        if self.platforms.iter().map(|p| p.share).sum::<f64>() <= 0.0 {
            return bad("platform shares must not all be zero");
        }
        let (lo, hi) = self.organic_urls_per_user;
        if lo == 0 || lo > hi || hi > self.url_catalog_size {
            return bad("organic_urls_per_user must satisfy 1 <= lo <= hi <= catalog");
        }
        if !(self.zipf_exponent > 0.0) {
            return bad("zipf_exponent must be positive");
        }
        if self.embedding_dim < 2 {
            return bad("embedding_dim must be at least 2");
        }
        for c in &self.cohorts {
            if c.size == 0 || c.pool_size == 0 || c.urls_per_member == 0 || c.platforms.is_empty() {
                return bad("cohort sizes must be at least 1 and platforms non-empty");
            }
            if c.pool_size > self.url_catalog_size {
                return bad("cohort pool_size exceeds url_catalog_size");
            }
            // |A n B| >= 2u - p must reach MIN_POOL_OVERLAP * u
            let guaranteed = 2 * c.urls_per_member as i64 - c.pool_size as i64;
            if c.urls_per_member > c.pool_size
                || (guaranteed as f64) < MIN_POOL_OVERLAP * c.urls_per_member as f64
            {
                return Err(SynthError::InfeasibleOverlap {
                    pool: c.pool_size,
                    per_member: c.urls_per_member,
                });
            }
        }
        let reserved: usize = self.cohorts.iter().map(|c| c.pool_size).sum();
        if reserved + hi > self.url_catalog_size {
            return bad("cohort pools leave too few catalog URLs for organic users");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Organic,
    Cohort(usize),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub labels: BTreeMap<AccountKey, Label>,
}

impl GroundTruth {
    pub fn positives(&self) -> BTreeSet<AccountKey> {
        self.labels
            .iter()
            .filter(|(_, l)| matches!(l, Label::Cohort(_)))
            .map(|(k, _)| k.clone())
            .collect()
    }

    pub fn cohort(&self, id: usize) -> BTreeSet<AccountKey> {
        self.labels
            .iter()
            .filter(|(_, l)| **l == Label::Cohort(id))
            .map(|(k, _)| k.clone())
            .collect()
    }

    /// `platform,user_id,cohort` with `organic` or the cohort index.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("platform,user_id,cohort\n");
        for (k, l) in &self.labels {
            let label = match l {
                Label::Organic => "organic".to_string(),
                Label::Cohort(c) => c.to_string(),
            };
            let _ = writeln!(out, "{},{},{}", k.platform, k.user_id, label);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub posts: Vec<Post>,
    pub truth: GroundTruth,
    pub embeddings: Option<EmbeddingStore>,
}

impl SynthOutput {
    pub fn posts_jsonl(&self) -> String {
        let mut out = String::new();
        for p in &self.posts {
            out.push_str(&p.to_json_line());
            out.push('\n');
        }
        out
    }
}

fn catalog_url(idx: usize) -> String {
    format!("https://news{}.example/story/{idx}", idx % N_DOMAINS)
}

/// Largest-remainder apportionment of `n` over `shares`.
fn apportion(n: usize, shares: &[f64]) -> Vec<usize> {
    let total: f64 = shares.iter().sum();
    let exact: Vec<f64> = shares.iter().map(|s| s / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut remaining = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        counts[i] += 1;
        remaining -= 1;
    }
    counts
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn perturbed(rng: &mut ChaCha8Rng, base: &[f64]) -> Vec<f64> {
    let direction = unit_vector(rng, base.len());
    let magnitude = rng.random_range(0.0..=NOISE_MAGNITUDE);
    let v: Vec<f64> = base.iter().zip(&direction).map(|(b, d)| b + magnitude * d).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

fn sentence(rng: &mut ChaCha8Rng, words: &[&str], len: usize) -> String {
    (0..len)
        .map(|_| *words.choose(rng).expect("non-empty vocabulary"))
        .collect::<Vec<_>>()
        .join(" ")
}

struct Emitter<'a> {
    spec: &'a SynthSpec,
    posts: Vec<Post>,
    embeddings: Option<EmbeddingStore>,
}

impl Emitter<'_> {
    #[allow(clippy::too_many_arguments)]
    fn emit(
        &mut self,
        account: &AccountKey,
        day: usize,
        rng: &mut ChaCha8Rng,
        text: String,
        urls: Vec<String>,
        is_repost: bool,
        coordinated: bool,
        vector: Option<Vec<f64>>,
    ) {
        let id = format!("p{:07}", self.posts.len());
        let timestamp = self.spec.start_timestamp + day as i64 * DAY_SECS + rng.random_range(0..DAY_SECS);
        let scale = if coordinated { 4 } else { 40 };
        let mut engagement = BTreeMap::new();
        engagement.insert("likes".to_string(), rng.random_range(0..scale * 5));
        engagement.insert("shares".to_string(), rng.random_range(0..scale));
        engagement.insert("comments".to_string(), rng.random_range(0..scale));
        let ai_score: f64 = if coordinated {
            rng.random_range(0.3..1.0)
        } else {
            rng.random_range(0.0..0.7)
        };
        if let (Some(store), Some(v)) = (self.embeddings.as_mut(), vector) {
            store.insert(id.clone(), v).expect("generated vectors are valid");
        }
        self.posts.push(Post {
            id,
            platform: account.platform.clone(),
            user_id: account.user_id.clone(),
            timestamp,
            text,
            urls,
            is_repost,
            engagement,
            ai_score: Some((ai_score * 1e6).round() / 1e6),
        });
    }
}

pub fn generate(spec: &SynthSpec) -> Result<SynthOutput, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let with_text = spec.cohorts.iter().any(|c| c.text_mode == TextMode::NearDuplicate);
    let dim = spec.embedding_dim;
    let mut out = Emitter {
        spec,
        posts: Vec::new(),
        embeddings: with_text.then(EmbeddingStore::new),
    };
    let mut truth = GroundTruth::default();

    // cohort pools are carved out of the catalog; organic users sample the remainder
    let mut remaining: Vec<usize> = (0..spec.url_catalog_size).collect();
    let mut pools: Vec<Vec<usize>> = Vec::with_capacity(spec.cohorts.len());
    for cohort in &spec.cohorts {
        let picked: BTreeSet<usize> = remaining.choose_multiple(&mut rng, cohort.pool_size).copied().collect();
        remaining.retain(|i| !picked.contains(i));
        let mut pool: Vec<usize> = picked.into_iter().collect();
        pool.shuffle(&mut rng);
        pools.push(pool);
    }
    let zipf = Zipf::new(remaining.len() as f64, spec.zipf_exponent)
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    let shares: Vec<f64> = spec.platforms.iter().map(|p| p.share).collect();
    let per_platform = apportion(spec.n_organic, &shares);
    let mut organic_id = 0usize;
    for (platform, &count) in spec.platforms.iter().zip(&per_platform) {
        for _ in 0..count {
            let account = AccountKey::new(platform.name.clone(), format!("org{organic_id:05}"));
            organic_id += 1;
            truth.labels.insert(account.clone(), Label::Organic);
            let (lo, hi) = spec.organic_urls_per_user;
            let k = rng.random_range(lo..=hi);
            let mut chosen = BTreeSet::new();
            let mut order = Vec::with_capacity(k);
            while chosen.len() < k {
                let idx = remaining[zipf.sample(&mut rng) as usize - 1];
                if chosen.insert(idx) {
                    order.push(idx);
                }
            }
            for idx in order {
                let repeats = if rng.random_bool(0.25) { 2 } else { 1 };
                for _ in 0..repeats {
                    let day = rng.random_range(0..spec.days);
                    let len = rng.random_range(6..=14);
                    let text = format!("{} {}", sentence(&mut rng, VOCAB, len), catalog_url(idx));
                    let is_repost = rng.random_bool(0.1);
                    let vector = with_text.then(|| unit_vector(&mut rng, dim));
                    out.emit(&account, day, &mut rng, text, vec![catalog_url(idx)], is_repost, false, vector);
                }
            }
        }
    }

    for (cid, cohort) in spec.cohorts.iter().enumerate() {
        let pool = &pools[cid];
        let near_dup = cohort.text_mode == TextMode::NearDuplicate;
        let day_vectors: Vec<Vec<f64>> = if near_dup {
            (0..spec.days).map(|_| unit_vector(&mut rng, dim)).collect()
        } else {
            Vec::new()
        };
        let day_texts: Vec<String> = (0..spec.days)
            .map(|_| {
                let len = rng.random_range(8..=12);
                format!("{} {}", sentence(&mut rng, AMPLIFIED, 3), sentence(&mut rng, VOCAB, len))
            })
            .collect();

        let mut member_sets: Vec<BTreeSet<usize>> = Vec::with_capacity(cohort.size);
        for m in 0..cohort.size {
            let platform = &cohort.platforms[m * cohort.platforms.len() / cohort.size];
            let account = AccountKey::new(platform.clone(), format!("c{cid}m{m:03}"));
            truth.labels.insert(account.clone(), Label::Cohort(cid));
            let urls: Vec<usize> = pool.choose_multiple(&mut rng, cohort.urls_per_member).copied().collect();
            member_sets.push(urls.iter().copied().collect());
            for idx in urls {
                let day = rng.random_range(0..spec.days);
                let text = format!("{} {}", day_texts[day], catalog_url(idx));
                let vector = if near_dup {
                    Some(perturbed(&mut rng, &day_vectors[day]))
                } else {
                    with_text.then(|| unit_vector(&mut rng, dim))
                };
                out.emit(&account, day, &mut rng, text, vec![catalog_url(idx)], false, true, vector);
            }
            if near_dup {
                for (day, base) in day_vectors.iter().enumerate() {
                    let vector = perturbed(&mut rng, base);
                    out.emit(&account, day, &mut rng, day_texts[day].clone(), Vec::new(), false, true, Some(vector));
                }
            } else if with_text {
                // keep every post embeddable when another cohort needs text
                for day in 0..spec.days {
                    let vector = unit_vector(&mut rng, dim);
                    out.emit(&account, day, &mut rng, day_texts[day].clone(), Vec::new(), false, true, Some(vector));
                }
            }
        }
        let min_shared = (MIN_POOL_OVERLAP * cohort.urls_per_member as f64).ceil() as usize;
        for (a, sa) in member_sets.iter().enumerate() {
            for sb in &member_sets[a + 1..] {
                if sa.intersection(sb).count() < min_shared {
                    return Err(SynthError::InfeasibleOverlap {
                        pool: cohort.pool_size,
                        per_member: cohort.urls_per_member,
                    });
                }
            }
        }
    }

    Ok(SynthOutput {
        posts: out.posts,
        truth,
        embeddings: out.embeddings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn evaluate(detected: &BTreeSet<AccountKey>, truth: &GroundTruth) -> DetectionMetrics {
    let positives = truth.positives();
    let hits = detected.intersection(&positives).count() as f64;
    let precision = if detected.is_empty() { 1.0 } else { hits / detected.len() as f64 };
    let recall = if positives.is_empty() { 1.0 } else { hits / positives.len() as f64 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    DetectionMetrics { precision, recall, f1 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthSpec {
        SynthSpec {
            n_organic: 40,
            url_catalog_size: 300,
            cohorts: vec![CohortSpec {
                size: 20,
                platforms: vec!["twitter".into()],
                pool_size: 40,
                urls_per_member: 30,
                text_mode: TextMode::NearDuplicate,
            }],
            days: 3,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn same_seed_same_output() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.posts_jsonl(), b.posts_jsonl());
        assert_eq!(a.truth.to_csv(), b.truth.to_csv());
        assert_eq!(a.embeddings.unwrap().to_jsonl(), b.embeddings.unwrap().to_jsonl());
        let c = generate(&SynthSpec { seed: 7, ..small() }).unwrap();
        assert_ne!(c.posts_jsonl(), generate(&small()).unwrap().posts_jsonl());
    }

    #[test]
    fn zero_cohorts_all_organic() {
        let out = generate(&SynthSpec { cohorts: vec![], ..small() }).unwrap();
        assert_eq!(out.truth.labels.len(), 40);
        assert!(out.truth.positives().is_empty());
        assert!(out.embeddings.is_none());
    }

    #[test]
    fn cohort_members_share_pool_urls() {
        let spec = SynthSpec {
            cohorts: vec![CohortSpec { text_mode: TextMode::None, ..small().cohorts[0].clone() }],
            ..small()
        };
        let out = generate(&spec).unwrap();
        let members = out.truth.cohort(0);
        assert_eq!(members.len(), 20);
        let sets: Vec<BTreeSet<&str>> = members
            .iter()
            .map(|m| {
                out.posts
                    .iter()
                    .filter(|p| &p.account() == m)
                    .flat_map(|p| p.urls.iter().map(String::as_str))
                    .collect()
            })
            .collect();
        for (a, sa) in sets.iter().enumerate() {
            assert_eq!(sa.len(), 30);
            for sb in &sets[a + 1..] {
                assert!(sa.intersection(sb).count() >= 20);
            }
        }
    }

    #[test]
    fn infeasible_overlap_rejected() {
        let mut spec = small();
        spec.cohorts[0].pool_size = 100;
        assert!(matches!(generate(&spec), Err(SynthError::InfeasibleOverlap { .. })));
        spec.cohorts[0].pool_size = 400;
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn apportionment_is_exact() {
        assert_eq!(apportion(500, &[0.4, 0.3, 0.3]), vec![200, 150, 150]);
        assert_eq!(apportion(10, &[1.0, 1.0, 1.0]).iter().sum::<usize>(), 10);
    }

    #[test]
    fn metric_conventions() {
        let mut truth = GroundTruth::default();
        let keys: Vec<AccountKey> = (0..8).map(|i| AccountKey::new("p", format!("{i}"))).collect();
        for (i, k) in keys.iter().enumerate() {
            truth.labels.insert(k.clone(), if i < 4 { Label::Cohort(0) } else { Label::Organic });
        }
        let exact = evaluate(&truth.positives(), &truth);
        assert_eq!((exact.precision, exact.recall, exact.f1), (1.0, 1.0, 1.0));
        let none = evaluate(&BTreeSet::new(), &truth);
        assert_eq!((none.precision, none.recall, none.f1), (1.0, 0.0, 0.0));
        let half: BTreeSet<AccountKey> = [0, 1, 4, 5].iter().map(|&i| keys[i].clone()).collect();
        let m = evaluate(&half, &truth);
        assert_eq!((m.precision, m.recall, m.f1), (0.5, 0.5, 0.5));
    }
}
