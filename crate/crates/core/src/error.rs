use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("closed-form concurrence outside its domain: (1 + 4 Mzz)^2 - 4 Mz^2 = {discriminant}")]
    ClosedFormDomain { discriminant: f64 },

    #[error("concurrence routes disagree: wootters {wootters}, closed form {closed_form}")]
    RouteDisagreement { wootters: f64, closed_form: f64 },

    #[error("step size underflow at t = {t} (h = {h})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t}")]
    StepBudget { t: f64, max_steps: usize },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("eigensolver failed to converge: {0}")]
    Eigensolver(String),

    #[error("config: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field: field.into(), reason: reason.into() }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io { path: path.display().to_string(), source }
    }

    /// Short machine-readable tag, used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::InvalidState(_) => "invalid_state",
            Error::ClosedFormDomain { .. } => "closed_form_domain",
            Error::RouteDisagreement { .. } => "route_disagreement",
            Error::StepSizeUnderflow { .. } => "step_size_underflow",
            Error::NonFiniteState { .. } => "non_finite_state",
            Error::StepBudget { .. } => "step_budget",
            Error::Singular(_) => "singular",
            Error::Eigensolver(_) => "eigensolver",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
