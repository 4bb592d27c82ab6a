use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("grid size must be an even integer >= 4, got {0}")]
    InvalidGridSize(usize),
    #[error("domain length must be positive and finite, got {0}")]
    InvalidLength(f64),
    #[error("size mismatch: expected {expected} values, got {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("fields are defined on different grids")]
    GridMismatch,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("time {time} is not an integer multiple of the step {dt}")]
    NotStepMultiple { time: f64, dt: f64 },
    #[error("mode ({0}, {1}) lies outside the retained band")]
    ModeOutOfBand(i64, i64),
    #[error("state became non-finite at step {step}")]
    NonFinite { step: usize },
    #[error("observation for step {found} cannot follow filter step {current}")]
    StepMismatch { current: usize, found: usize },
    #[error("field invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
