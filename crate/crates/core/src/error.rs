//! Error type shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CohError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CohError {
    /// A label does not satisfy the constraints of its space.
    #[error("invalid point: {constraint}")]
    InvalidPoint { constraint: String },

    /// The distance radicand is strongly negative, so the kernel is not
    /// positive semidefinite near the given points.
    #[error("coherence violation: radicand {radicand:e} below -{threshold:e}")]
    CoherenceViolation { radicand: f64, threshold: f64 },

    #[error("kernel is not positive semidefinite: min eigenvalue {min_eigenvalue:e} (tolerance {tolerance:e})")]
    KernelNotPsd { min_eigenvalue: f64, tolerance: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("label {index} of the state is not a basis point (rebuild the basis including it)")]
    OutOfSpan { index: usize },

    #[error("image leaves the sampled span: residual {residual:e} exceeds {tol:e} at basis point {index}")]
    SpanEscape { residual: f64, tol: f64, index: usize },

    #[error("step-size error: {0}")]
    StepSize(String),

    #[error("integration stalled at t = {t}: step {step:e} underflowed ({remedy})")]
    Stiffness { t: f64, step: f64, remedy: String },

    #[error("degenerate metric: null directions {null_directions:?}")]
    DegenerateMetric { null_directions: Vec<Vec<[f64; 2]>> },

    #[error("integrator failure: {0}")]
    IntegratorFailure(String),

    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("state is not normalized: {0}")]
    Normalization(String),

    #[error("model degeneracy: m and k both vanish at E = {energy}")]
    ModelDegeneracy { energy: f64 },

    #[error("algebra does not close: {0}")]
    NonClosing(String),

    #[error("state positivity violated: {0}")]
    StatePositivity(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A verification command ran to completion and its check failed.
    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CohError {
    /// Short machine-readable tag, used for JSON error reports and FFI codes.
    pub fn kind(&self) -> &'static str {
        match self {
            CohError::InvalidPoint { .. } => "invalid-point",
            CohError::CoherenceViolation { .. } => "coherence-violation",
            CohError::KernelNotPsd { .. } => "kernel-not-psd",
            CohError::Numerical(_) => "numerical",
            CohError::OutOfSpan { .. } => "out-of-span",
            CohError::SpanEscape { .. } => "span-escape",
            CohError::StepSize(_) => "step-size",
            CohError::Stiffness { .. } => "stiffness",
            CohError::DegenerateMetric { .. } => "degenerate-metric",
            CohError::IntegratorFailure(_) => "integrator-failure",
            CohError::Truncation(_) => "truncation",
            CohError::Normalization(_) => "normalization",
            CohError::ModelDegeneracy { .. } => "model-degeneracy",
            CohError::NonClosing(_) => "non-closing-algebra",
            CohError::StatePositivity(_) => "state-positivity",
            CohError::Precondition(_) => "precondition",
            CohError::Domain(_) => "domain",
            CohError::Dimension(_) => "dimension",
            CohError::CheckFailed(_) => "check-failed",
            CohError::Config(_) => "config",
            CohError::Io(_) => "io",
        }
    }

    pub(crate) fn invalid(constraint: impl Into<String>) -> Self {
        CohError::InvalidPoint {
            constraint: constraint.into(),
        }
    }
}

impl From<std::io::Error> for CohError {
    fn from(e: std::io::Error) -> Self {
        CohError::Io(e.to_string())
    }
}
