use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown phoneme symbol `{0}`")]
    Inventory(String),

    #[error("word `{0}` is not in the lexicon")]
    OutOfVocabulary(String),

    #[error("invalid noise spec: {0}")]
    Noise(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("symbol `{0}` is outside the model vocabulary")]
    Vocabulary(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("no candidate within {max_edits} edits of the input")]
    NoParse { max_edits: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("sequence of length {len} exceeds capacity of {slots} slots")]
    Capacity { len: usize, slots: usize },

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("retrieval error: {0}")]
    Retrieval(String),

    #[error("degenerate prior: {0}")]
    DegeneratePrior(String),

    #[error("unresolved placeholder `{{{0}}}`")]
    Adaptation(String),

    #[error("modality `{0}` is not supported")]
    UnsupportedModality(String),

    #[error("invalid case base: {0}")]
    CaseBase(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("report incomplete: {0}")]
    Completeness(String),

    #[error("cannot load {path}: {message}")]
    Startup { path: String, message: String },

    #[error("session is closed")]
    SessionClosed,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wrap an error with the pipeline stage that produced it.
    pub fn at(self, stage: &'static str) -> Error {
        match self {
            already @ Error::Stage { .. } => already,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }

    /// Innermost error, looking through stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// Stable machine-readable code for wire protocols.
    pub fn code(&self) -> &'static str {
        match self.root() {
            Error::Parse { .. } => "parse_error",
            Error::Inventory(_) => "unknown_phoneme",
            Error::OutOfVocabulary(_) => "out_of_vocabulary",
            Error::Noise(_) => "invalid_noise",
            Error::Training(_) => "training_error",
            Error::Vocabulary(_) => "vocabulary_error",
            Error::Usage(_) => "usage_error",
            Error::NoParse { .. } => "no_parse",
            Error::Dimension { .. } => "dimension_mismatch",
            Error::Capacity { .. } => "capacity_exceeded",
            Error::Divergence(_) => "divergence",
            Error::Schedule(_) => "invalid_schedule",
            Error::Retrieval(_) => "retrieval_error",
            Error::DegeneratePrior(_) => "degenerate_prior",
            Error::Adaptation(_) => "adaptation_error",
            Error::UnsupportedModality(_) => "unsupported_modality",
            Error::CaseBase(_) => "invalid_case_base",
            Error::Config(_) => "config_error",
            Error::Completeness(_) => "incomplete_report",
            Error::Startup { .. } => "startup_error",
            Error::SessionClosed => "session_closed",
            Error::Json(_) => "json_error",
            Error::Io(_) => "io_error",
            Error::Stage { .. } => unreachable!("root() strips stage tags"),
        }
    }
}
