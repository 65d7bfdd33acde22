use thiserror::Error;

/// Errors raised across the analysis pipeline.
///
/// Variants are split between usage problems (bad arguments, unknown names)
/// and data problems (malformed scenario files, degenerate inputs). The CLI
/// maps the former to exit code 1 and the latter to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    // metadata
    #[error("metadata file has no 'outcome' column")]
    MissingOutcome,
    #[error("metadata file has no 'feature_' columns")]
    NoFeatures,
    #[error("duplicate instance id {0:?}")]
    DuplicateId(String),
    #[error("non-numeric feature cell {value:?} at row {row}, column {column}")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("unrecognised outcome value {0:?} (expected safe/unsafe or 0/1)")]
    BadOutcome(String),
    #[error("metadata file contains zero data rows")]
    ZeroRows,

    // extraction
    #[error("timestep key {0:?} is not of the form TimeStep<k>")]
    UnsortableTimestep(String),
    #[error("timestep {0} is missing Ego_Position")]
    MissingEgoPosition(String),
    #[error("scenario document is not a JSON object")]
    NotAnObject,
    #[error("scenario has no timesteps")]
    EmptyTimeline,
    #[error("unknown category string {value:?} for {field}")]
    UnknownCategory { field: String, value: String },
    #[error("road has fewer than 2 points")]
    TooFewPoints,
    #[error("malformed road point at index {0}")]
    MalformedPoint(usize),
    #[error("road test outcome {0:?} is neither FAIL nor PASS")]
    BadRoadOutcome(String),

    // preprocess / selection
    #[error("column {0:?} is entirely missing")]
    AllMissing(String),
    #[error("all features were pruned; nothing left to analyse")]
    NothingLeft,
    #[error("all pairwise dissimilarities are zero; features are identical")]
    AllIdentical,
    #[error("a class has too few instances ({0}) for stratified folds")]
    TooFewPerClass(usize),

    // pilot
    #[error("optimizer diverged: no restart produced a finite objective")]
    OptimizerDiverged,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    // geometry
    #[error("{0} selected features exceed the 2^n enumeration cap of 20; select fewer features")]
    TooManyFeatures(usize),
    #[error("points are collinear; convex hull is degenerate")]
    DegenerateHull,
    #[error("polygon is self-intersecting")]
    NotSimple,
    #[error("boundary polygon has zero area")]
    DegenerateBoundary,

    // prediction
    #[error("class {0:?} has too few instances for a stratified split")]
    ClassTooSmall(String),
    #[error("training labels contain a single class")]
    OneClass,
    #[error("feature pool ({pool}) is smaller than the selected cardinality ({want})")]
    PoolTooSmall { pool: usize, want: usize },
    #[error("non-finite value in prediction input")]
    NonFiniteInput,

    // cli
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that stem from how the tool was invoked rather than
    /// from the data itself.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Usage(_) | Error::UnknownFeature(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
