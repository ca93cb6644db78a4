use longfact_core::{BackendError, CorpusError, EngineError, MetricError, RetrievalError, ScoreError};
use serde::Serialize;
use thiserror::Error;

/// Fatal command failure, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, flags or input files. Exit code 1.
    #[error("{0}")]
    Validation(String),
    /// The scoring backend could not be reached or answered badly. Exit code 2.
    #[error("{message}")]
    Backend { message: String, endpoint: Option<String> },
    /// A bug or an output that could not be written. Exit code 3.
    #[error("{0}")]
    Internal(String),
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'static str,
    exit_code: u8,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    endpoint: Option<&'a str>,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Validation(_) => 1,
            Self::Backend { .. } => 2,
            Self::Internal(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Validation(_) => "validation",
            Self::Backend { .. } => "backend",
            Self::Internal(_) => "internal",
        }
    }

    /// One-line JSON object for stderr.
    pub fn to_json(&self) -> String {
        let endpoint = match self {
            Self::Backend { endpoint, .. } => endpoint.as_deref(),
            _ => None,
        };
        serde_json::to_string(&ErrorReport {
            error: ErrorBody {
                kind: self.kind(),
                exit_code: self.exit_code(),
                message: self.to_string(),
                endpoint,
            },
        })
        .expect("error report serializes")
    }

    pub(crate) fn internal(e: impl std::fmt::Display) -> Self {
        Self::Internal(e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        Self::Validation(format!("cannot compute metrics: {e}"))
    }
}

fn backend_endpoint(e: &BackendError) -> Option<String> {
    match e {
        BackendError::Transport { endpoint, .. } | BackendError::Protocol { endpoint, .. } => Some(endpoint.clone()),
        BackendError::Config(_) | BackendError::Other(_) => None,
    }
}

fn from_score_error(context: String, e: &ScoreError) -> CliError {
    match e {
        ScoreError::Backend(b) => CliError::Backend {
            message: format!("{context}: {b}"),
            endpoint: backend_endpoint(b),
        },
        ScoreError::PremiseTooLong { .. } => CliError::Validation(format!("{context}: {e}")),
        ScoreError::NonFinite { .. } | ScoreError::ProbabilityOutOfRange(_) => CliError::Backend {
            message: format!("{context}: {e}"),
            endpoint: None,
        },
        ScoreError::EmptyInput(_) => CliError::Internal(format!("{context}: {e}")),
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        from_score_error("scoring failed".into(), &e)
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match &e {
            EngineError::ChunksFailed {
                claim_id,
                failures,
                partial,
            } => {
                let context = format!(
                    "claim {claim_id:?}: {} of {} chunks failed",
                    failures.len(),
                    failures.len() + partial.len()
                );
                from_score_error(context, &failures[0].1)
            }
            EngineError::ChunkTooLarge { .. } => Self::Validation(format!("{e}; lower the chunk budget")),
            EngineError::DocumentMismatch { .. } | EngineError::EmptyPlan { .. } => Self::Internal(e.to_string()),
        }
    }
}

impl From<RetrievalError> for CliError {
    fn from(e: RetrievalError) -> Self {
        match &e {
            RetrievalError::Scoring {
                claim_id,
                error,
                partial,
            } => {
                let context = format!(
                    "claim {claim_id:?}: retrieval failed after {} level(s)",
                    partial.levels.len()
                );
                from_score_error(context, error)
            }
            RetrievalError::InvalidBranching(_) | RetrievalError::EmptyRelevantSet => Self::Validation(e.to_string()),
            RetrievalError::EmptyDocument(_) => Self::Internal(e.to_string()),
        }
    }
}
