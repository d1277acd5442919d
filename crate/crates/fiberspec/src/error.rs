use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero denominator at channel {channel}: |white - dark| < 1e-12")]
    ZeroDenominator { channel: usize },

    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: String,
        expected: String,
        got: String,
    },

    #[error("zero variance: spectrum standard deviation below 1e-12")]
    ZeroVariance,

    #[error("empty output: {lines}x{samples} plane holds no complete {block}x{block} tile")]
    EmptyOutput {
        lines: usize,
        samples: usize,
        block: usize,
    },

    #[error("invalid window: {reason}")]
    InvalidWindow { reason: String },

    #[error("spectrum too short: length {len} < window {window}")]
    TooShort { len: usize, window: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("index {index} out of range for size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("invalid synthetic spec: {0}")]
    SpecInvalid(String),

    #[error("too few samples: {0}")]
    TooFewSamples(String),

    #[error("object {0} has no spectra")]
    EmptyObject(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },

    #[error("unknown object id {0}")]
    UnknownObject(String),

    #[error("header mismatch: {0}")]
    HeaderMismatch(String),

    #[error("truncated payload: {0}")]
    TruncatedPayload(String),

    #[error("invalid UTF-8 in {0}")]
    BadUtf8(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn shape(context: impl Into<String>, expected: impl ToString, got: impl ToString) -> Self {
        Error::ShapeMismatch {
            context: context.into(),
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    /// Process exit code for the CLI: validation problems map to 1, I/O to 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Csv(_) => 2,
            _ => 1,
        }
    }
}
