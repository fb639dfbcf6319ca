use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report.
///
/// Variants fall in two families that the command-line surface maps to
/// distinct exit codes: input errors (bad files, bad shapes, bad arguments)
/// and numerical failures (degenerate data, non-convergence).
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed manifest: {0}")]
    MalformedManifest(String),

    #[error("manifest invariant violated: {0}")]
    InvariantViolation(String),

    #[error("file {} too short: need {needed} bytes, found {found}", path.display())]
    ShortFile { path: PathBuf, needed: u64, found: u64 },

    #[error("non-finite value in layer {layer} at row {row}, column {col}")]
    NonFiniteValue { layer: usize, row: usize, col: usize },

    #[error("layer index {0} out of range")]
    LayerOutOfRange(usize),

    #[error("sample limit {limit} exceeds sample count {available}")]
    SampleLimitTooLarge { limit: usize, available: usize },

    #[error("dump has no linear head")]
    HeadAbsent,

    #[error("dump has no labels file")]
    LabelsAbsent,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: u32, classes: usize },

    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("requested {requested} eigenpairs but at most {max} are available")]
    RankRequestTooLarge { requested: usize, max: usize },

    #[error("randomized eigensolver residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    ConvergenceFailure { residual: f64, tolerance: f64 },

    #[error("spectrum is partial: eigenvalues sum to {captured} of total variance {total}")]
    PartialSpectrum { captured: f64, total: f64 },

    #[error("dimension must be strictly positive, got {0}")]
    NonPositiveDimension(f64),

    #[error("need at least 2 layers, got {0}")]
    TooFewLayers(usize),

    #[error("layers disagree on sample count: layer {layer} has {rows} rows, expected {expected}")]
    MixedSampleCounts { layer: usize, rows: usize, expected: usize },

    #[error("endpoint layer {0} has zero variance")]
    DegenerateEndpoint(usize),

    #[error("input has zero variance")]
    DegenerateInput,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("constant input: correlation undefined")]
    ConstantInput,

    #[error("constant regressor: least-squares fit undefined")]
    ConstantRegressor,

    #[error("need at least {needed} records, got {got}")]
    InsufficientRecords { needed: usize, got: usize },

    #[error("malformed CSV: {0}")]
    MalformedCsv(String),

    #[error("unknown column: {0}")]
    UnknownColumn(String),

    #[error("no epoch is shared by every model")]
    NoCommonEpochs,

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MissingFile(_) => "MissingFile",
            Error::Io { .. } => "IoError",
            Error::MalformedManifest(_) => "MalformedManifest",
            Error::InvariantViolation(_) => "InvariantViolation",
            Error::ShortFile { .. } => "ShortFile",
            Error::NonFiniteValue { .. } => "NonFiniteValue",
            Error::LayerOutOfRange(_) => "LayerOutOfRange",
            Error::SampleLimitTooLarge { .. } => "SampleLimitTooLarge",
            Error::HeadAbsent => "HeadAbsent",
            Error::LabelsAbsent => "LabelsAbsent",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::LabelOutOfRange { .. } => "LabelOutOfRange",
            Error::TooFewSamples(_) => "TooFewSamples",
            Error::RankRequestTooLarge { .. } => "RankRequestTooLarge",
            Error::ConvergenceFailure { .. } => "ConvergenceFailure",
            Error::PartialSpectrum { .. } => "PartialSpectrum",
            Error::NonPositiveDimension(_) => "NonPositiveDimension",
            Error::TooFewLayers(_) => "TooFewLayers",
            Error::MixedSampleCounts { .. } => "MixedSampleCounts",
            Error::DegenerateEndpoint(_) => "DegenerateEndpoint",
            Error::DegenerateInput => "DegenerateInput",
            Error::LengthMismatch(..) => "LengthMismatch",
            Error::ConstantInput => "ConstantInput",
            Error::ConstantRegressor => "ConstantRegressor",
            Error::InsufficientRecords { .. } => "InsufficientRecords",
            Error::MalformedCsv(_) => "MalformedCsv",
            Error::UnknownColumn(_) => "UnknownColumn",
            Error::NoCommonEpochs => "NoCommonEpochs",
            Error::TooFewPoints { .. } => "TooFewPoints",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }

    /// True for failures caused by the data's numerics rather than by
    /// malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteValue { .. }
                | Error::ConvergenceFailure { .. }
                | Error::PartialSpectrum { .. }
                | Error::DegenerateEndpoint(_)
                | Error::DegenerateInput
                | Error::ConstantInput
                | Error::ConstantRegressor
        )
    }

    /// Process exit code: 2 for input errors, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            3
        } else {
            2
        }
    }
}
