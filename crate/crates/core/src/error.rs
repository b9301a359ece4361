use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("band schemas differ: [{}] vs [{}]", left.join(", "), right.join(", "))]
    SchemaMismatch { left: Vec<String>, right: Vec<String> },

    #[error("unknown band label `{0}`")]
    UnknownBand(String),

    #[error("case fatality rate undefined for {cohort} in band {band} (zero cases)")]
    UndefinedRate { cohort: String, band: String },

    #[error("invalid cohort {cohort}: {message}")]
    InvalidCohort { cohort: String, message: String },

    #[error("invalid band schema: {0}")]
    InvalidSchema(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation failed with {0} error(s)")]
    Validation(usize),

    #[error("unknown dataset `{name}` (available: {})", available.join(", "))]
    UnknownDataset { name: String, available: Vec<String> },

    #[error("unknown label `{label}`")]
    UnknownLabel { label: String, suggestions: Vec<String> },

    #[error("invalid structural causal model: {0}")]
    InvalidScm(String),

    #[error("input lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("correlation undefined: zero variance in input")]
    ZeroVariance,

    #[error("matrices do not share the same labels")]
    LabelMismatch,

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
