use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mode `{0}` is not in the register")]
    UnknownMode(String),

    #[error("duplicate mode label `{0}`")]
    DuplicateMode(String),

    #[error("registers overlap on mode `{0}`")]
    OverlappingModes(String),

    #[error("invalid cutoff {0}: must be between 1 and {max}", max = crate::fock::MAX_CUTOFF)]
    InvalidCutoff(usize),

    #[error("occupation {count} of mode `{mode}` exceeds cutoff {cutoff}")]
    OccupationOutOfRange { mode: String, count: usize, cutoff: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("null outcome: probability {0:e} is below the detection floor")]
    NullOutcome(f64),

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("dense dimension {0} is too large")]
    TooLarge(usize),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("sample {index} has likelihood {value:e} under every admissible step")]
    VanishingLikelihood { index: usize, value: f64 },

    #[error("missing projection settings: {}", .0.join(", "))]
    MissingSettings(Vec<String>),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing config keys: {}", .0.join(", "))]
    MissingKeys(Vec<String>),

    #[error("unknown config keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),

    #[error("config key `{key}`: {message}")]
    ConfigValue { key: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag, used in the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownMode(_) => "unknown_mode",
            Error::DuplicateMode(_) => "duplicate_mode",
            Error::OverlappingModes(_) => "overlapping_modes",
            Error::InvalidCutoff(_) => "invalid_cutoff",
            Error::OccupationOutOfRange { .. } => "occupation_out_of_range",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::ZeroNorm => "zero_norm",
            Error::NullOutcome(_) => "null_outcome",
            Error::NotHermitian(_) => "not_hermitian",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::InvalidDensity(_) => "invalid_density",
            Error::TooLarge(_) => "too_large",
            Error::GridTooCoarse(_) => "grid_too_coarse",
            Error::EmptyDataset => "empty_dataset",
            Error::InsufficientSamples { .. } => "insufficient_samples",
            Error::VanishingLikelihood { .. } => "vanishing_likelihood",
            Error::MissingSettings(_) => "missing_settings",
            Error::Parse { .. } => "parse",
            Error::MissingKeys(_) => "missing_keys",
            Error::UnknownKeys(_) => "unknown_keys",
            Error::ConfigValue { .. } => "config_value",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }

    /// Line number for file-format errors, when known.
    pub fn line(&self) -> Option<usize> {
        match self {
            Error::Parse { line, .. } => Some(*line),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
