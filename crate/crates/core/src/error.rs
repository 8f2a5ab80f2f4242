//! Error type shared by every module in the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
///
/// Variants carry enough context to point at the offending attribute, value,
/// or pipeline stage; the CLI prints them verbatim.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Structurally malformed CSV input (bad field count, invalid UTF-8).
    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    /// Input that parsed but violates a contract (missing column, bad flag
    /// combination, out-of-range parameter).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Missing-value repair could not recover an attribute (for example a
    /// column that is entirely absent under a median/mode policy).
    #[error("attribute {attr} cannot be recovered: {reason}")]
    Unrecoverable { attr: String, reason: String },

    /// A value fell outside every configured band for its attribute.
    #[error("discretization failed for {attr}: value {value} is outside the configured bands")]
    OutOfBands { attr: String, value: f64 },

    /// A band specification is malformed (unsorted cuts, empty range, ...).
    #[error("invalid banding for {attr}: {msg}")]
    InvalidBanding { attr: String, msg: String },

    /// A continuous attribute is constant where a positive variance is
    /// required; callers should drop it before clustering.
    #[error("attribute {0} has zero variance; drop it before computing distances")]
    ZeroVariance(String),

    /// Clustering could not proceed (empty cluster where one is forbidden,
    /// missing values in a clustering feature, k out of range).
    #[error("clustering error: {0}")]
    Cluster(String),

    /// Two clusterings cannot be compared (different row sets).
    #[error("clusterings are not comparable: {0}")]
    Mismatch(String),

    /// Rule mining or tree induction failed.
    #[error("model error: {0}")]
    Model(String),

    /// Evaluation failed (length mismatch, probability out of range, curve
    /// undefined because the target value never occurs).
    #[error("evaluation error: {0}")]
    Eval(String),

    /// Bad pipeline or mixture configuration.
    #[error("config error: {0}")]
    Config(String),

    /// A pipeline stage failed; the message carries the underlying cause.
    ///
    /// Display is self-contained (no separate `source()` chain), so wrapping
    /// in anyhow and printing the chain never repeats the cause.
    #[error("stage {stage} failed: {cause}")]
    Stage { stage: String, cause: Box<Error> },

    #[error("io error: {0}")]
    Io(std::io::Error),

    #[error("csv error: {0}")]
    Csv(csv::Error),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Error {
        Error::Io(e)
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Error {
        Error::Csv(e)
    }
}

impl Error {
    /// Wraps any error in a stage marker so callers can tell which pipeline
    /// step died.
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            cause: Box::new(self),
        }
    }

    /// Names the failed stage, if this is a stage error.
    pub fn stage(&self) -> Option<&str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}
