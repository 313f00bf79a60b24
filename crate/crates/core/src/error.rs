use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    IoStream(#[from] std::io::Error),

    #[error("csv row {row}, column {column}: {message}")]
    Csv {
        /// 1-based data row (header excluded).
        row: usize,
        column: String,
        message: String,
    },

    #[error("csv header: {0}")]
    CsvHeader(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("sample {index} has no true label")]
    MissingTrueLabel { index: usize },

    #[error("soft label {value} of sample {index} is outside [0, 1]")]
    SoftLabelRange { index: usize, value: f64 },

    #[error("sample {index} has {found} features, expected {expected}")]
    FeatureDim {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error(
        "class prior pi = {pi} is infeasible: negative-class masses P(S=k/4 | Y=0) = \
         pi(4-k)/(5k(1-pi)) for k=1..4 sum to {mass:.6} > 1 (requires pi <= 15/28)"
    )]
    InfeasiblePrior { pi: f64, mass: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("no positive soft mass: sum of soft labels is 0")]
    NoPositiveMass,

    #[error("no negative soft mass: sum of (1 - soft label) is 0")]
    NoNegativeMass,

    #[error("class {class} has no samples")]
    EmptyClass { class: u8 },

    #[error("bound undefined: mean soft label is {mean}, need 0 < mean < 1")]
    DegenerateSoftLabels { mean: f64 },

    #[error("zero denominator in mixture coefficients: pi*s_p + (1-pi)*s_n = {0}")]
    ZeroDenominator(f64),

    #[error("invalid {field}: {message}")]
    InvalidConfig { field: String, message: String },

    #[error("rule failure ratio is 0; soft label undefined")]
    ZeroRuleRatio,

    #[error("prior inconsistent with record (n = {n}, k = {k}): zero marginal likelihood")]
    PriorInconsistent { n: u32, k: u32 },

    #[error("non-finite objective {value} at iteration {iteration}")]
    NonFiniteObjective { iteration: usize, value: f64 },

    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize, trace: Vec<f64> },

    #[error("score {value} of sample {index} is not strictly inside (0, 1)")]
    ScoreRange { index: usize, value: f64 },

    #[error("problem has {cells} cells, enumeration supports at most {max}")]
    TooManyCells { cells: usize, max: usize },

    #[error("eta_s is not strictly increasing in eta between cells {first} and {second}")]
    NotMonotone { first: usize, second: usize },

    #[error("split '{split}' has {size} samples, need at least {min}")]
    SplitTooSmall {
        split: &'static str,
        size: usize,
        min: usize,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            message: message.into(),
        }
    }
}
