use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("covariance matrix is not symmetric (max asymmetry {max_asymmetry:.3e})")]
    NonSymmetric { max_asymmetry: f64 },

    #[error("propagation time must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error("coupling g = 0 leaves no output mode correlated with the mechanics")]
    NoCoupling,

    #[error("measured quadrature variance {variance:.3e} is below the degeneracy threshold")]
    DegenerateMeasurement { variance: f64 },

    #[error("quadrature did not converge: relative change {rel_change:.3e} at 2x refinement")]
    QuadratureNotConverged { rel_change: f64 },

    #[error("mode profile: {0}")]
    InvalidMode(String),

    #[error("config: {0}")]
    Config(String),

    #[error("at n_bar = {nbar:e}: {source}")]
    AtPoint {
        nbar: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::NonSymmetric { .. } => "non_symmetric",
            Error::NegativeTime(_) => "negative_time",
            Error::NoCoupling => "no_coupling",
            Error::DegenerateMeasurement { .. } => "degenerate_measurement",
            Error::QuadratureNotConverged { .. } => "quadrature_not_converged",
            Error::InvalidMode(_) => "invalid_mode",
            Error::Config(_) => "config",
            Error::AtPoint { .. } => "at_point",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
