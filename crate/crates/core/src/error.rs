use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A required text field is empty after trimming.
    EmptyField { id: String, field: &'static str },
    DuplicateId(String),
    /// An operation that needs at least one element got none.
    EmptyInput(&'static str),
    ZeroVector,
    NonFiniteVector,
    DimensionMismatch { expected: usize, found: usize },
    InvalidK(usize),
    MissingLogprobs,
    InvalidLogprob(f64),
    InvalidBeta(f64),
    InvalidNoiseRate(f64),
    /// Two datasets that must be disjoint share an id.
    IdCollision(String),
    IncompatibleNoiseModel { model: &'static str, task: &'static str },
    /// Noise injection could not find any label different from the truth.
    NoDistractor(String),
    /// Noise injection requires `ground_truth == label` on the input.
    AlreadyNoisy(String),
    TaskKindMismatch,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyField { id, field } => write!(f, "sample {id}: field `{field}` is empty"),
            Error::DuplicateId(id) => write!(f, "duplicate sample id `{id}`"),
            Error::EmptyInput(what) => write!(f, "{what} must not be empty"),
            Error::ZeroVector => f.write_str("embedding vector has zero norm"),
            Error::NonFiniteVector => f.write_str("embedding vector contains a non-finite value"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidK(k) => write!(f, "k must be at least 1, got {k}"),
            Error::MissingLogprobs => f.write_str("prediction carries no token logprobs"),
            Error::InvalidLogprob(lp) => write!(f, "invalid token logprob {lp}"),
            Error::InvalidBeta(b) => write!(f, "beta must lie in (0, 1], got {b}"),
            Error::InvalidNoiseRate(r) => write!(f, "noise rate must lie in [0, 1], got {r}"),
            Error::IdCollision(id) => write!(f, "sample id `{id}` present in both datasets"),
            Error::IncompatibleNoiseModel { model, task } => {
                write!(f, "noise model `{model}` cannot be applied to a {task} dataset")
            }
            Error::NoDistractor(id) => {
                write!(f, "no label different from the ground truth is available for `{id}`")
            }
            Error::AlreadyNoisy(id) => {
                write!(f, "sample `{id}` has a label that differs from its ground truth")
            }
            Error::TaskKindMismatch => f.write_str("datasets have different task kinds"),
        }
    }
}

impl core::error::Error for Error {}
