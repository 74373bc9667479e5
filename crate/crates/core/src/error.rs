use crate::taxonomy::LabelSpace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot parse profile code {0:?}")]
    ParseProfile(String),
    #[error("profile {profile} is not part of label space {space:?}")]
    SubsetMismatch { profile: String, space: LabelSpace },
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("unknown text template {0:?}")]
    UnknownTemplate(String),
    #[error("I/O failure: {0}")]
    IoFailure(#[from] std::io::Error),
    #[error("malformed data: {0}")]
    Format(String),
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("balance target {target} is smaller than a single game's {windows} windows")]
    TargetTooSmall { target: usize, windows: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("feature schema mismatch: checkpoint has {checkpoint}, features have {features}")]
    SchemaMismatch { checkpoint: u32, features: u32 },
    #[error("non-finite loss at optimizer step {step}")]
    NonFiniteLoss { step: u64 },
    #[error("empty {0} split")]
    EmptySplit(&'static str),
    #[error("zero frequency for class {0}")]
    ZeroFrequency(usize),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("empty test set")]
    EmptyTestSet,
    #[error("label space mismatch: model has {model:?}, experiment wants {spec:?}")]
    SpaceMismatch { model: LabelSpace, spec: LabelSpace },
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
