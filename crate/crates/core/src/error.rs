use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient data for {what}: need at least {needed} observations, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("series has zero variance")]
    DegenerateVariance,

    #[error("design matrix is rank deficient ({0})")]
    RankDeficient(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("seasonal alignment error: {0}")]
    Alignment(String),

    #[error("all joint-state densities vanished at t = {t}")]
    NumericalDegeneracy { t: usize },

    #[error("regime {regime} is absorbing (p_jj = 1); expected duration is infinite")]
    InfiniteDuration { regime: usize },

    #[error("transition matrix is reducible; no unique ergodic distribution")]
    ReducibleChain,

    #[error("estimation failed: {0}")]
    EstimationFailed(String),

    #[error("exact enumeration over {paths} paths exceeds the limit of {limit}")]
    EnumerationTooLarge { paths: u128, limit: u128 },

    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures that arise while fitting a model rather than while
    /// reading or validating input data.
    pub fn is_estimation_failure(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient(_)
                | Error::NumericalDegeneracy { .. }
                | Error::EstimationFailed(_)
                | Error::InsufficientData { .. }
        )
    }
}
