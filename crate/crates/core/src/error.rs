use thiserror::Error;

/// Errors raised while ingesting posts and URL tables.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorpusError {
    #[error("line {line}: malformed JSON: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("line {line}: missing field: {field}")]
    MissingField { line: usize, field: String },
    #[error("line {line}: invalid field {field}: {message}")]
    InvalidField {
        line: usize,
        field: String,
        message: String,
    },
    #[error("invalid url {url:?}: {message}")]
    InvalidUrl { url: String, message: String },
    #[error("expansion loop starting at {0:?}")]
    ExpansionLoop(String),
    #[error("expansion table line {line}: {message}")]
    ExpansionTable { line: usize, message: String },
    #[error("min_unique_urls must be at least 1")]
    InvalidThreshold,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VectorizeError {
    #[error("empty matrix")]
    EmptyMatrix,
    #[error("no URLs survive DF filters")]
    NoUrlsSurvive,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("degenerate graph: {0}")]
    Degenerate(String),
    #[error("quantile of empty input")]
    EmptyQuantile,
    #[error("quantile level {0} outside [0, 1]")]
    QuantileLevel(f64),
    #[error("edge list line {line}: {message}")]
    EdgeList { line: usize, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("density undefined for component of size {0}")]
    DensityUndefined(usize),
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("graph has no nodes")]
    EmptyGraph,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DismantleError {
    #[error("quantile {0} outside [0, 1]")]
    QuantileRange(f64),
    #[error("grid axis must be non-empty and strictly ascending within [0, 1]")]
    InvalidAxis,
    #[error("threshold ({0}, {1}) does not lie on the grid axes")]
    OffGrid(f64, f64),
    #[error("no transitional phase found")]
    NoTransition,
    #[error("surface has no cells")]
    DegenerateSurface,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TsnError {
    #[error("eligible post {0:?} has no embedding")]
    MissingEmbedding(String),
    #[error("embeddings line {line}: {message}")]
    Embeddings { line: usize, message: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyzeError {
    #[error("cohort has no posts")]
    EmptyCohort,
    #[error("no AI scores present")]
    NoAiScores,
    #[error("keyword set is empty")]
    NoKeywords,
    #[error("domain table line {line}: {message}")]
    DomainTable { line: usize, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
    #[error("infeasible overlap: pool {pool}, urls per member {per_member}")]
    InfeasibleOverlap { pool: usize, per_member: usize },
}

/// Top-level error; the variant prefix names the module that failed.
#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus: {0}")]
    Corpus(#[from] CorpusError),
    #[error("vectorize: {0}")]
    Vectorize(#[from] VectorizeError),
    #[error("simgraph: {0}")]
    Graph(#[from] GraphError),
    #[error("spectral: {0}")]
    Spectral(#[from] SpectralError),
    #[error("dismantle: {0}")]
    Dismantle(#[from] DismantleError),
    #[error("tsn: {0}")]
    Tsn(#[from] TsnError),
    #[error("analyze: {0}")]
    Analyze(#[from] AnalyzeError),
    #[error("synth: {0}")]
    Synth(#[from] SynthError),
    #[error("config: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn context(context: impl Into<String>, source: impl Into<Error>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(source.into()),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
