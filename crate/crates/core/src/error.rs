use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("invalid trial: {0}")]
    InvalidTrial(String),
    #[error("window of {window} s is longer than the {duration} s trial")]
    WindowTooLong { window: f64, duration: f64 },
    #[error("segmentation produced {actual} windows, expected {expected}")]
    SegmentCountMismatch { expected: usize, actual: usize },
    #[error("too few samples: {found} retained, at least {required} required")]
    TooFewSamples { found: usize, required: usize },
    #[error("normal matrix is singular at omega = {omega} rad/s (condition estimate {condition:e})")]
    SingularNormalMatrix { omega: f64, condition: f64 },
    #[error("every frequency of the grid produced a singular normal matrix")]
    AllFrequenciesSingular,
    #[error("invalid fraction {0}")]
    InvalidFraction(f64),
    #[error("band [{low}, {high}] Hz covers no valid grid frequency")]
    EmptyBand { low: f64, high: f64 },
    #[error("non-positive power at feature index {index}")]
    NonPositivePower { index: usize },
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training data contains a single class")]
    SingleClassData,
    #[error("invalid class label {0}")]
    InvalidLabel(i64),
    #[error("empty input")]
    EmptyInput,
    #[error("trial {trial} has no valid windows")]
    TrialWithNoValidWindows { trial: usize },
    #[error("no counterpart row for {0}")]
    MissingCounterpart(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("subject {subject}, sessions {train}->{test}, p = {p}: {source}")]
    Cell {
        subject: u32,
        train: u32,
        test: u32,
        p: f64,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}
