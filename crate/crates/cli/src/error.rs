use thiserror::Error;

/// Anything wrong with the data or the requested computation over it.
/// Usage errors (bad flags, unknown config keys) are a separate path in
/// the CLI and exit with a different code.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}:{line}: {message}")]
    Malformed { path: String, line: usize, message: String },
    #[error("duplicate model id {0:?}")]
    DuplicateModel(String),
    #[error("unknown model id {0:?}")]
    UnknownModel(String),
    #[error("duplicate measurement: model {model_id:?} step {step} benchmark {benchmark:?} subtask {subtask:?} metric {metric:?}")]
    DuplicateMeasurement {
        model_id: String,
        step: u64,
        benchmark: String,
        subtask: Option<String>,
        metric: String,
    },
    #[error("duplicate instance {instance_id:?}: model {model_id:?} step {step} benchmark {benchmark:?}")]
    DuplicateInstance { model_id: String, step: u64, benchmark: String, instance_id: String },
    #[error("benchmark {0:?} has no subtask rows")]
    NoSubtasks(String),
    #[error("no instance records for benchmark {0:?}")]
    NoInstances(String),
    #[error("group mismatch between scales: {0}")]
    GroupMismatch(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Kernel(#[from] evalsnr_core::Error),
}

impl DataError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        DataError::Io { path: path.display().to_string(), source }
    }
}
