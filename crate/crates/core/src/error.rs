use thiserror::Error;

/// Errors raised across the library.
///
/// Variants fall in two families, see [`Error::is_numerical`]: input that
/// fails validation, and numerical procedures that cannot produce a value.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),
    #[error("frequency {frequency} exceeds the Nyquist limit {limit}")]
    FrequencyAboveNyquist { frequency: f64, limit: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("series of length {len} is too short for embedding length {m}")]
    SeriesTooShort { len: usize, m: usize },
    #[error("sample entropy undefined: {matches_m} length-m matches, {matches_m1} length-(m+1) matches")]
    NoTemplateMatches { matches_m: u64, matches_m1: u64 },
    #[error("level {index}: {source}")]
    Level {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("base radius {radius} does not clear the signal minimum {min_sample}")]
    RadiusUnderflow { radius: f64, min_sample: f64 },
    #[error("invalid glyph proportions: {0}")]
    InvalidProportions(String),
    #[error("entropy does not increase strictly between level {lower} ({lower_entropy}) and level {upper} ({upper_entropy})")]
    NonMonotoneEntropy {
        lower: usize,
        upper: usize,
        lower_entropy: f64,
        upper_entropy: f64,
    },
    #[error("variance bounds are not set on this scale")]
    BoundsUnset,
    #[error("value {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("unknown format: {0}")]
    UnknownFormat(String),
    #[error("placement {index} at ({x}, {y}) lies outside the {width}x{height} canvas")]
    PlacementOutOfCanvas {
        index: usize,
        x: f64,
        y: f64,
        width: f64,
        height: f64,
    },
    #[error("invalid color map: {0}")]
    InvalidColorMap(String),
    #[error("comparison graph is disconnected: {0}")]
    DisconnectedGraph(String),
    #[error("Bradley-Terry fit did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NonConvergence { iterations: usize, gradient_norm: f64 },
    #[error("invalid comparison table: {0}")]
    InvalidTable(String),
    #[error("glyph {0} compared with itself")]
    SelfPair(String),
    #[error("design matrix is singular")]
    SingularDesign,
    #[error("condition has no trials: {0}")]
    EmptyCondition(&'static str),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("differences have zero variance (mean difference {mean_difference}); t is infinite")]
    InfiniteT { mean_difference: f64 },
    #[error("need at least two glyphs, got {0}")]
    TooFewGlyphs(usize),
    #[error("bucket {bucket} holds {got} assets, expected {expected}")]
    WrongBucketSize {
        bucket: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("result files are not mergeable: {0}")]
    MixedModes(String),
    #[error("participant {participant}: missing records for trials {indices:?}")]
    MissingRecords {
        participant: String,
        indices: Vec<usize>,
    },
    #[error("invalid trial results: {0}")]
    InvalidResults(String),
    #[error("unsupported schema version {0}")]
    SchemaVersion(u32),
    #[error("{0}")]
    Json(String),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NoTemplateMatches { .. }
            | Error::NonMonotoneEntropy { .. }
            | Error::NonConvergence { .. }
            | Error::SingularDesign
            | Error::InfiniteT { .. } => true,
            Error::Level { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
