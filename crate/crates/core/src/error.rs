use thiserror::Error;

use crate::graph::{FormVariant, LaplacianKind};

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("density model `{density}` is not defined on manifold `{manifold}`")]
    IncompatibleDensity { manifold: &'static str, density: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("disconnected graph: sample {index} has zero degree (increase epsilon)")]
    DisconnectedGraph { index: usize },

    #[error("the unnormalized Laplacian needs a uniform sampling density")]
    NonUniformUnnormalized,

    #[error("form variant {variant:?} is not available for a {kind:?} operator")]
    VariantMismatch { variant: FormVariant, kind: LaplacianKind },

    #[error("Lanczos did not converge in {iterations} iterations (residuals {residuals:?})")]
    NotConverged { iterations: usize, residuals: Vec<f64> },

    #[error(
        "multiplicity block {block_start}..={block_end} straddles k_max = {k_max}; \
         use k_max = {suggested}"
    )]
    BlockStraddle { block_start: usize, block_end: usize, k_max: usize, suggested: usize },

    #[error("zero denominator: {0}")]
    ZeroDenominator(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("all {0} sweep cells failed")]
    AllCellsFailed(usize),

    #[error("validation checks failed: {0}")]
    ChecksFailed(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(String),

    #[error("JSON error: {0}")]
    Json(String),
}

impl LabError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        LabError::Io { path: path.as_ref().display().to_string(), source }
    }

    /// True for errors caused by user configuration rather than by a
    /// numerical failure at run time.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            LabError::Config(_)
                | LabError::InvalidArgument(_)
                | LabError::IncompatibleDensity { .. }
                | LabError::NonUniformUnnormalized
                | LabError::BlockStraddle { .. }
        )
    }
}
