//! Config-driven orchestration of the full detection pipeline and the
//! artifacts it writes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analyze::{self, AnalysisInputs, CohortStats, DomainTable, EngagementMetric};
use crate::corpus::{self, AccountKey, Post, UrlExpansionTable};
use crate::dismantle::{self, DismantleResult, GridSurface, ThresholdPolicy};
use crate::error::{Error, Result};
use crate::simgraph::{self, PairMode, SimilarityGraph};
use crate::spectral::{self, CentralityConfig};
use crate::tsn::{self, EmbeddingStore, TsnConfig};
use crate::vectorize::{self, TfidfMatrix, UserUrlMatrix};

/// Bipartite cross-platform graphs cannot reach the intra-platform density
/// floor: a complete bipartite cohort split evenly has density just above 1/2.
pub const DEFAULT_CROSS_MIN_FLOOR: f64 = 0.5;

/// Iteration budget for centrality inside the grid. Components close to having
/// a repeated top eigenvalue need far more than the standalone default.
pub const DEFAULT_PIPELINE_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PolicySpec {
    Auto {
        #[serde(default = "default_floor")]
        min_floor: f64,
    },
    Manual {
        edge_q: f64,
        node_q: f64,
    },
    /// The platform's published threshold pair.
    Preset,
}

fn default_floor() -> f64 {
    dismantle::DEFAULT_MIN_FLOOR
}

impl PolicySpec {
    fn resolve(&self, platform: Option<&str>) -> Result<ThresholdPolicy> {
        match *self {
            PolicySpec::Auto { min_floor } => Ok(ThresholdPolicy::Auto { min_floor }),
            PolicySpec::Manual { edge_q, node_q } => Ok(ThresholdPolicy::Manual { edge_q, node_q }),
            PolicySpec::Preset => {
                let platform = platform
                    .ok_or_else(|| Error::Config("preset policy needs a platform".into()))?;
                let (edge_q, node_q) = dismantle::preset_for(platform)
                    .ok_or_else(|| Error::Config(format!("no preset for platform {platform:?}")))?;
                Ok(ThresholdPolicy::Manual { edge_q, node_q })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    /// Policy for the network of all same-platform pairs.
    pub intra: PolicySpec,
    pub cross: PolicySpec,
    /// Extra single-platform dismantlings of the intra network.
    pub platforms: BTreeMap<String, PolicySpec>,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            intra: PolicySpec::Auto {
                min_floor: dismantle::DEFAULT_MIN_FLOOR,
            },
            cross: PolicySpec::Auto {
                min_floor: DEFAULT_CROSS_MIN_FLOOR,
            },
            platforms: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub posts: Vec<PathBuf>,
    pub expansion_table: Option<PathBuf>,
    pub domain_table: Option<PathBuf>,
    pub state_affiliated: Option<PathBuf>,
    pub keywords: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// CSV `post_id,ai_score`; overrides scores carried in the posts.
    pub ai_scores: Option<PathBuf>,
    /// One word per line; replaces the built-in list.
    pub stopwords: Option<PathBuf>,
    pub min_unique_urls: usize,
    pub min_df: usize,
    pub max_df_quantile: f64,
    pub include_reposts: bool,
    pub edge_axis: Vec<f64>,
    pub node_axis: Vec<f64>,
    pub policy: PolicyConfig,
    pub centrality: CentralityConfig,
    pub tsn: TsnConfig,
    pub engagement_metric: EngagementMetric,
    pub ai_threshold: f64,
    pub out_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            posts: Vec::new(),
            expansion_table: None,
            domain_table: None,
            state_affiliated: None,
            keywords: None,
            embeddings: None,
            ai_scores: None,
            stopwords: None,
            min_unique_urls: corpus::DEFAULT_MIN_UNIQUE_URLS,
            min_df: vectorize::DEFAULT_MIN_DF,
            max_df_quantile: vectorize::DEFAULT_MAX_DF_QUANTILE,
            include_reposts: true,
            edge_axis: dismantle::default_axis(),
            node_axis: dismantle::default_axis(),
            policy: PolicyConfig::default(),
            centrality: CentralityConfig {
                max_iter: DEFAULT_PIPELINE_MAX_ITER,
                ..CentralityConfig::default()
            },
            tsn: TsnConfig::default(),
            engagement_metric: EngagementMetric::Total,
            ai_threshold: 0.5,
            out_dir: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization is infallible")
    }

    fn input_paths(&self) -> Vec<&PathBuf> {
        let optional = [
            &self.expansion_table,
            &self.domain_table,
            &self.state_affiliated,
            &self.keywords,
            &self.embeddings,
            &self.ai_scores,
            &self.stopwords,
        ];
        self.posts
            .iter()
            .chain(optional.into_iter().flatten())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.posts.is_empty() {
            return Err(Error::Config("no posts files configured".into()));
        }
        if self.min_unique_urls == 0 || self.min_df == 0 {
            return Err(Error::Config("min_unique_urls and min_df must be at least 1".into()));
        }
        if !(self.max_df_quantile > 0.0 && self.max_df_quantile <= 1.0) {
            return Err(Error::Config("max_df_quantile must lie in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.ai_threshold) {
            return Err(Error::Config("ai_threshold must lie in [0, 1]".into()));
        }
        self.tsn.validate()?;
        Ok(())
    }
}

/// A loaded config plus the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub base_dir: PathBuf,
}

/// Parsed inputs shared by every stage.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub posts: Vec<Post>,
    pub domains: DomainTable,
    pub state_affiliated: BTreeSet<String>,
    pub keywords: BTreeSet<String>,
    pub embeddings: Option<EmbeddingStore>,
    pub tsn: TsnConfig,
}

#[derive(Debug, Clone)]
pub struct CoUrl {
    pub active: BTreeSet<AccountKey>,
    pub matrix: UserUrlMatrix,
    pub tfidf: TfidfMatrix,
    pub intra: SimilarityGraph,
    pub cross: SimilarityGraph,
}

/// One dismantled network: its name, the graph, and the grid over it.
#[derive(Debug, Clone)]
pub struct Network {
    pub name: String,
    pub platform: Option<String>,
    pub policy: PolicySpec,
    pub graph: SimilarityGraph,
    pub surface: GridSurface,
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub results: Vec<(String, DismantleResult)>,
    pub merged: SimilarityGraph,
}

impl Detection {
    pub fn coordinated(&self) -> BTreeSet<AccountKey> {
        self.merged.nodes.iter().cloned().collect()
    }
}

#[derive(Debug, Clone)]
pub struct TsnOutcome {
    pub platform: String,
    pub graph: SimilarityGraph,
    pub coordinated: BTreeSet<AccountKey>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub cohorts: Vec<CohortStats>,
    /// Per platform, Jaccard overlap of co-URL and text-similarity cohorts.
    pub overlap: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ingest,
    Courl,
    Grid,
    Detect,
    Tsn,
    Analyze,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Courl => "courl",
            Command::Grid => "grid",
            Command::Detect => "detect",
            Command::Tsn => "tsn",
            Command::Analyze => "analyze",
            Command::Report => "report",
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    Ok(path)
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json serialization is infallible");
    s.push('\n');
    s
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Lowercase alphanumerics, `-` and `_` only, for use in file names.
fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}

fn parse_ai_scores(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.trim() == "post_id,ai_score" => {}
        _ => return Err(Error::Config("ai score CSV must start with header post_id,ai_score".into())),
    }
    let mut scores = BTreeMap::new();
    for (idx, line) in lines {
        let (id, score) = line
            .rsplit_once(',')
            .ok_or_else(|| Error::Config(format!("ai scores line {}: expected 2 fields", idx + 1)))?;
        let score: f64 = score
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("ai scores line {}: bad score {score:?}", idx + 1)))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::Config(format!("ai scores line {}: score outside [0, 1]", idx + 1)));
        }
        scores.insert(id.trim().to_string(), score);
    }
    Ok(scores)
}

impl Pipeline {
    pub fn new(config: PipelineConfig, base_dir: impl Into<PathBuf>) -> Self {
        Self {
            config,
            base_dir: base_dir.into(),
        }
    }

    /// Loads a config file; relative paths inside it resolve against its directory.
    pub fn from_config_file(path: &Path) -> Result<Self> {
        let config = PipelineConfig::from_json(&read_text(path)?)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self::new(config, base))
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn out_dir(&self, override_dir: Option<&Path>) -> Result<PathBuf> {
        match (override_dir, &self.config.out_dir) {
            (Some(dir), _) => Ok(dir.to_path_buf()),
            (None, Some(dir)) => Ok(self.resolve(dir)),
            (None, None) => Err(Error::Config("no output directory: set out_dir or pass --out".into())),
        }
    }

    fn read_input(&self, path: &Path) -> Result<String> {
        read_text(&self.resolve(path))
    }

    pub fn load(&self) -> Result<Inputs> {
        let cfg = &self.config;
        cfg.validate()?;
        for path in cfg.input_paths() {
            let full = self.resolve(path);
            if !full.is_file() {
                return Err(Error::Config(format!("input file not found: {}", full.display())));
            }
        }
        let table = match &cfg.expansion_table {
            Some(p) => UrlExpansionTable::from_csv(&self.read_input(p)?)?,
            None => UrlExpansionTable::new(),
        };
        let mut posts = Vec::new();
        for p in &cfg.posts {
            let full = self.resolve(p);
            let file = fs::File::open(&full).map_err(|e| Error::io(format!("opening {}", full.display()), e))?;
            let parsed = corpus::parse_posts_with(BufReader::new(file), &table)
                .map_err(|e| Error::context(full.display().to_string(), e))?;
            posts.extend(parsed);
        }
        if let Some(p) = &cfg.ai_scores {
            let scores = parse_ai_scores(&self.read_input(p)?)?;
            for post in &mut posts {
                if let Some(&s) = scores.get(&post.id) {
                    post.ai_score = Some(s);
                }
            }
        }
        let domains = match &cfg.domain_table {
            Some(p) => DomainTable::from_csv(&self.read_input(p)?)?,
            None => DomainTable::default(),
        };
        let state_affiliated = match &cfg.state_affiliated {
            Some(p) => analyze::parse_domain_list(&self.read_input(p)?),
            None => BTreeSet::new(),
        };
        let keywords = match &cfg.keywords {
            Some(p) => analyze::parse_keyword_list(&self.read_input(p)?),
            None => BTreeSet::new(),
        };
        let embeddings = match &cfg.embeddings {
            Some(p) => Some(EmbeddingStore::from_jsonl(self.read_input(p)?.as_bytes())?),
            None => None,
        };
        let mut tsn = cfg.tsn.clone();
        if let Some(p) = &cfg.stopwords {
            tsn.stopwords = self
                .read_input(p)?
                .lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect();
        }
        Ok(Inputs {
            posts,
            domains,
            state_affiliated,
            keywords,
            embeddings,
            tsn,
        })
    }

    pub fn ingest_summary(&self, inputs: &Inputs) -> Value {
        let mut per_platform: BTreeMap<&str, (usize, BTreeSet<&str>)> = BTreeMap::new();
        for p in &inputs.posts {
            let slot = per_platform.entry(&p.platform).or_default();
            slot.0 += 1;
            slot.1.insert(&p.user_id);
        }
        let platforms: BTreeMap<&str, Value> = per_platform
            .into_iter()
            .map(|(k, (n, users))| (k, json!({"posts": n, "accounts": users.len()})))
            .collect();
        json!({
            "posts": inputs.posts.len(),
            "accounts": inputs.posts.iter().map(Post::account).collect::<BTreeSet<_>>().len(),
            "posts_with_urls": inputs.posts.iter().filter(|p| !p.urls.is_empty()).count(),
            "platforms": platforms,
        })
    }

    pub fn courl(&self, inputs: &Inputs) -> Result<CoUrl> {
        let cfg = &self.config;
        let active = corpus::filter_active_users(&inputs.posts, cfg.min_unique_urls)?;
        let matrix = vectorize::build_user_url_matrix(&inputs.posts, &active, cfg.include_reposts)?;
        let matrix = vectorize::apply_df_filters(&matrix, cfg.min_df, cfg.max_df_quantile)?;
        let tfidf = vectorize::tfidf(&matrix)?;
        let intra = simgraph::cosine_pairs(&tfidf, PairMode::Intra)?;
        let cross = simgraph::cosine_pairs(&tfidf, PairMode::Cross)?;
        Ok(CoUrl {
            active,
            matrix,
            tfidf,
            intra,
            cross,
        })
    }

    pub fn networks(&self, courl: &CoUrl) -> Result<Vec<Network>> {
        let cfg = &self.config;
        let mut plan: Vec<(String, Option<String>, PolicySpec, SimilarityGraph)> = vec![
            ("intra".into(), None, cfg.policy.intra, courl.intra.clone()),
            ("cross".into(), None, cfg.policy.cross, courl.cross.clone()),
        ];
        for (platform, spec) in &cfg.policy.platforms {
            plan.push((
                format!("intra_{}", file_safe(platform)),
                Some(platform.clone()),
                *spec,
                courl.intra.restrict_platform(platform),
            ));
        }
        plan.into_iter()
            .map(|(name, platform, policy, graph)| {
                let surface = dismantle::grid_search(&graph, &cfg.edge_axis, &cfg.node_axis, cfg.centrality)
                    .map_err(|e| Error::context(format!("grid {name}"), e))?;
                Ok(Network {
                    name,
                    platform,
                    policy,
                    graph,
                    surface,
                })
            })
            .collect()
    }

    pub fn detect(&self, networks: &[Network]) -> Result<Detection> {
        let mut results = Vec::with_capacity(networks.len());
        for net in networks {
            let policy = net.policy.resolve(net.platform.as_deref())?;
            let (edge_q, node_q) = dismantle::select_thresholds(&net.surface, policy)
                .map_err(|e| Error::context(format!("detect {}", net.name), e))?;
            let result = dismantle::detect_coordinated(&net.graph, edge_q, node_q, self.config.centrality)
                .map_err(|e| Error::context(format!("detect {}", net.name), e))?;
            results.push((net.name.clone(), result));
        }
        let (cross, intra): (Vec<_>, Vec<_>) = results.iter().partition(|(name, _)| name == "cross");
        let intra: Vec<DismantleResult> = intra.into_iter().map(|(_, r)| r.clone()).collect();
        let merged = match cross.first() {
            Some((_, c)) => dismantle::merge_cross_platform(&intra, c),
            None => dismantle::merge_cross_platform(&intra, &empty_result()),
        };
        Ok(Detection { results, merged })
    }

    pub fn tsn(&self, inputs: &Inputs) -> Result<Vec<TsnOutcome>> {
        let emb = inputs
            .embeddings
            .as_ref()
            .ok_or_else(|| Error::Config("tsn needs an embeddings file".into()))?;
        let platforms: BTreeSet<&str> = inputs.posts.iter().map(|p| p.platform.as_str()).collect();
        let mut outcomes = Vec::new();
        for platform in platforms {
            let posts: Vec<Post> = inputs.posts.iter().filter(|p| p.platform == platform).cloned().collect();
            let graph = tsn::build_tsn(&posts, emb, &inputs.tsn)?;
            let coordinated = tsn::detect_tsn_coordinated(&graph, &inputs.tsn)?;
            outcomes.push(TsnOutcome {
                platform: platform.to_string(),
                graph,
                coordinated,
            });
        }
        Ok(outcomes)
    }

    pub fn analyze(&self, inputs: &Inputs, detection: &Detection, tsn: Option<&[TsnOutcome]>) -> Analysis {
        let analysis_inputs = AnalysisInputs {
            domains: inputs.domains.clone(),
            state_affiliated: inputs.state_affiliated.clone(),
            keywords: inputs.keywords.clone(),
            metric: Some(self.config.engagement_metric.clone()),
            ai_threshold: self.config.ai_threshold,
        };
        let courl_set = detection.coordinated();
        let tsn_set: BTreeSet<AccountKey> = tsn
            .into_iter()
            .flatten()
            .flat_map(|t| t.coordinated.iter().cloned())
            .collect();
        let everyone: BTreeSet<AccountKey> = inputs.posts.iter().map(Post::account).collect();
        let organic: BTreeSet<AccountKey> = everyone
            .iter()
            .filter(|k| !courl_set.contains(*k) && !tsn_set.contains(*k))
            .cloned()
            .collect();

        let mut cohorts = vec![analyze::cohort_stats("coordinated_courl", &inputs.posts, &courl_set, &analysis_inputs)];
        if tsn.is_some() {
            cohorts.push(analyze::cohort_stats("coordinated_tsn", &inputs.posts, &tsn_set, &analysis_inputs));
        }
        cohorts.push(analyze::cohort_stats("organic", &inputs.posts, &organic, &analysis_inputs));

        let mut overlap = BTreeMap::new();
        if let Some(tsn) = tsn {
            for t in tsn {
                let courl_here: BTreeSet<AccountKey> =
                    courl_set.iter().filter(|k| k.platform == t.platform).cloned().collect();
                overlap.insert(t.platform.clone(), analyze::cohort_overlap(&courl_here, &t.coordinated));
            }
        }
        Analysis { cohorts, overlap }
    }

    fn manifest(&self, command: Command) -> Result<Value> {
        let config_json = serde_json::to_string(&self.config).expect("config serialization is infallible");
        let mut inputs = Vec::new();
        for path in self.config.input_paths() {
            let full = self.resolve(path);
            let bytes = fs::read(&full).map_err(|e| Error::io(format!("reading {}", full.display()), e))?;
            inputs.push(json!({"path": path.display().to_string(), "sha256": sha256_hex(&bytes)}));
        }
        Ok(json!({
            "toolkit": "coia",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command.name(),
            "config_sha256": sha256_hex(config_json.as_bytes()),
            "inputs": inputs,
        }))
    }

    /// Runs `command` and its prerequisites, writing artifacts under `out`.
    /// Returns the artifact paths in write order.
    pub fn run(&self, command: Command, out: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(out).map_err(|e| Error::io(format!("creating {}", out.display()), e))?;
        let mut written = Vec::new();
        let inputs = self.load()?;
        let ingest = self.ingest_summary(&inputs);
        let mut report = serde_json::Map::new();
        report.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        report.insert("ingest".into(), ingest.clone());

        if command == Command::Ingest {
            let mut jsonl = String::new();
            for p in &inputs.posts {
                jsonl.push_str(&p.to_json_line());
                jsonl.push('\n');
            }
            written.push(write_text(out, "posts.normalized.jsonl", &jsonl)?);
            written.push(write_text(out, "ingest.json", &pretty(&ingest))?);
        }

        let wants = |c: &[Command]| c.contains(&command) || command == Command::Report;

        let mut detection = None;
        if wants(&[Command::Courl, Command::Grid, Command::Detect, Command::Analyze]) {
            let courl = self.courl(&inputs)?;
            let courl_summary = json!({
                "active_accounts": courl.active.len(),
                "users": courl.matrix.n_users(),
                "urls": courl.matrix.n_urls(),
                "intra_edges": courl.intra.n_edges(),
                "cross_edges": courl.cross.n_edges(),
            });
            report.insert("courl".into(), courl_summary.clone());
            if wants(&[Command::Courl]) {
                written.push(write_text(out, "matrix.csv", &courl.matrix.to_csv())?);
                written.push(write_text(out, "edges_intra.csv", &courl.intra.to_edge_csv())?);
                written.push(write_text(out, "edges_cross.csv", &courl.cross.to_edge_csv())?);
                written.push(write_text(out, "courl.json", &pretty(&courl_summary))?);
            }
            if wants(&[Command::Grid, Command::Detect, Command::Analyze]) {
                let networks = self.networks(&courl)?;
                if wants(&[Command::Grid]) {
                    for net in &networks {
                        written.push(write_text(out, &format!("grid_{}.csv", net.name), &net.surface.to_csv())?);
                    }
                }
                if wants(&[Command::Detect, Command::Analyze]) {
                    let det = self.detect(&networks)?;
                    let mut summary = serde_json::Map::new();
                    for (name, r) in &det.results {
                        if wants(&[Command::Detect]) {
                            written.push(write_text(out, &format!("detect_{name}.json"), &pretty(&r.to_json()))?);
                        }
                        summary.insert(
                            name.clone(),
                            json!({
                                "selected": {"edge_q": r.selected.0, "node_q": r.selected.1},
                                "coordinated": r.coordinated.len(),
                                "components": r.components.len(),
                                "min_density": r.min_density(),
                            }),
                        );
                    }
                    let merged_components = spectral::connected_components(&det.merged);
                    let merged = json!({
                        "nodes": det.merged.n_nodes(),
                        "edges": det.merged.n_edges(),
                        "components": merged_components.non_trivial().count(),
                        "accounts": det.merged.nodes.iter().map(|k| json!({"platform": k.platform, "user_id": k.user_id})).collect::<Vec<_>>(),
                    });
                    if wants(&[Command::Detect]) {
                        written.push(write_text(out, "edges_merged.csv", &det.merged.to_edge_csv())?);
                        written.push(write_text(out, "merged.json", &pretty(&merged))?);
                    }
                    report.insert("detect".into(), Value::Object(summary));
                    report.insert("merged".into(), merged);
                    detection = Some(det);
                }
            }
        }

        let mut tsn_outcomes = None;
        let tsn_available = inputs.embeddings.is_some();
        if command == Command::Tsn || (wants(&[Command::Analyze]) && tsn_available) {
            let outcomes = self.tsn(&inputs)?;
            let mut summary = serde_json::Map::new();
            for t in &outcomes {
                if wants(&[Command::Tsn]) {
                    written.push(write_text(
                        out,
                        &format!("tsn_edges_{}.csv", file_safe(&t.platform)),
                        &t.graph.to_edge_csv(),
                    )?);
                }
                summary.insert(
                    t.platform.clone(),
                    json!({
                        "eligible_accounts": t.graph.n_nodes(),
                        "edges": t.graph.n_edges(),
                        "accounts": t.coordinated.iter().map(|k| json!({"platform": k.platform, "user_id": k.user_id})).collect::<Vec<_>>(),
                    }),
                );
            }
            let summary = Value::Object(summary);
            if wants(&[Command::Tsn]) {
                written.push(write_text(out, "tsn.json", &pretty(&summary))?);
            }
            report.insert("tsn".into(), summary);
            tsn_outcomes = Some(outcomes);
        }

        if wants(&[Command::Analyze]) {
            let det = detection.as_ref().expect("detection runs before analysis");
            let analysis = self.analyze(&inputs, det, tsn_outcomes.as_deref());
            for stats in &analysis.cohorts {
                written.push(write_text(
                    out,
                    &format!("ecdf_{}.csv", stats.cohort),
                    &analyze::ecdf_to_csv(&stats.engagement_ecdf),
                )?);
            }
            let value = serde_json::to_value(&analysis).expect("analysis serialization is infallible");
            written.push(write_text(out, "analysis.json", &pretty(&value))?);
            report.insert("analysis".into(), value);
        }

        if command == Command::Report {
            written.push(write_text(out, "report.json", &pretty(&Value::Object(report)))?);
        }
        written.push(write_text(out, "manifest.json", &pretty(&self.manifest(command)?))?);
        Ok(written)
    }
}

fn empty_result() -> DismantleResult {
    DismantleResult {
        selected: (0.0, 0.0),
        graph: SimilarityGraph::empty(),
        coordinated: BTreeSet::new(),
        components: Vec::new(),
        densities: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_round_trip() {
        let cfg = PipelineConfig::default();
        let back = PipelineConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.edge_axis.len(), 21);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg = PipelineConfig::from_json(
            r#"{"posts": ["a.jsonl"], "policy": {"platforms": {"telegram": {"mode": "preset"}}}}"#,
        )
        .unwrap();
        assert_eq!(cfg.min_df, 5);
        assert_eq!(cfg.policy.cross, PolicySpec::Auto { min_floor: 0.5 });
        let policy = cfg.policy.platforms["telegram"].resolve(Some("telegram")).unwrap();
        assert_eq!(policy, ThresholdPolicy::Manual { edge_q: 0.99, node_q: 0.99 });
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(PipelineConfig::from_json(r#"{"postz": []}"#).is_err());
    }

    #[test]
    fn preset_without_table_entry_is_config_error() {
        assert!(matches!(PolicySpec::Preset.resolve(Some("myspace")), Err(Error::Config(_))));
        assert!(matches!(PolicySpec::Preset.resolve(None), Err(Error::Config(_))));
    }

    #[test]
    fn ai_scores_csv() {
        let s = parse_ai_scores("post_id,ai_score\np1,0.25\np2,1\n").unwrap();
        assert_eq!(s["p1"], 0.25);
        assert!(parse_ai_scores("id,score\n").is_err());
        assert!(parse_ai_scores("post_id,ai_score\np1,1.5\n").is_err());
    }

    #[test]
    fn file_names_are_sanitized() {
        assert_eq!(file_safe("Tele gram/x"), "tele_gram_x");
    }
}
