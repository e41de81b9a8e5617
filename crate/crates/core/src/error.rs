use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("waypoint index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("target coincides with anchor at waypoint {0}")]
    CoincidentAnchor(usize),

    #[error("no measurement for waypoint {0}")]
    MissingMeasurement(usize),

    #[error("anchor set needs at least 3 unique indices, got {0}")]
    TooFewAnchors(usize),

    #[error("duplicate anchor index {0}")]
    DuplicateAnchor(usize),

    #[error("reference index {0} is not a member of the anchor set")]
    ReferenceNotInSet(usize),

    #[error("not yet localizable at N~={n_tilde} (needs N~ >= {required})")]
    NotLocalizable { n_tilde: usize, required: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed data: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user-supplied configuration.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidArgument(_))
    }
}
