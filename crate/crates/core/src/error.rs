use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad numeric input: non-finite values, out-of-range parameters, wrong lengths.
    #[error("validation: {0}")]
    Validation(String),

    /// Curves living on different grids were combined.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Inconsistent filter or simulation configuration.
    #[error("config: {0}")]
    Config(String),

    /// No empirical eigenvalue reaches the threshold, so the regularized inverse is zero.
    #[error("threshold exceeds spectrum: c_n = {cn} but largest eigenvalue is {top}")]
    ThresholdExceedsSpectrum { cn: f64, top: f64 },

    /// The residual variance needs n > d_n.
    #[error("degrees of freedom exhausted: n = {n}, d_n = {d_n}")]
    DegreesOfFreedom { n: usize, d_n: usize },

    /// t-hat vanished: the point lies outside the retained eigenspace.
    #[error("degenerate interval: normalizer is zero")]
    DegenerateNormalizer,

    #[error("eigensolver: {0}")]
    Eigen(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag for the failure class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::Config(_) => "config",
            Error::ThresholdExceedsSpectrum { .. } => "threshold_exceeds_spectrum",
            Error::DegreesOfFreedom { .. } => "degrees_of_freedom",
            Error::DegenerateNormalizer => "degenerate_normalizer",
            Error::Eigen(_) => "eigensolver",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    /// True for failures caused by the mathematics of the fit rather than bad input.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::ThresholdExceedsSpectrum { .. }
                | Error::DegreesOfFreedom { .. }
                | Error::DegenerateNormalizer
                | Error::Eigen(_)
        )
    }
}

pub(crate) fn validation<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
