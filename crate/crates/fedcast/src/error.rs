use std::path::PathBuf;

use fedcast_core::Error as CoreError;

/// Failures of the std layer, grouped by the exit code they map to.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: header must be exactly TIME,UUID,VALUE")]
    BadHeader { path: PathBuf },
    #[error("{path}: duplicate reading for ({time}, {uuid})")]
    DuplicateKey { path: PathBuf, time: String, uuid: String },
    #[error("{path}:{line}: {reason}")]
    MalformedRow { path: PathBuf, line: u64, reason: String },
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: CoreError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Data(String),
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    pub fn core(context: impl Into<String>, source: CoreError) -> Self {
        AppError::Core { context: context.into(), source }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    /// 2 for configuration problems, 3 for bad data, 4 for divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Core { source, .. } => match source.root() {
                CoreError::Diverged { .. } | CoreError::NonFinite => 4,
                CoreError::UnknownChannel(_)
                | CoreError::InvalidQuantile(_)
                | CoreError::NotTrainable
                | CoreError::UpsampleUnsupported { .. } => 2,
                _ => 3,
            },
            _ => 3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(AppError::Config("x".into()).exit_code(), 2);
        assert_eq!(AppError::Data("x".into()).exit_code(), 3);
        let diverged = CoreError::InRound { round: 3, source: Box::new(CoreError::Diverged { epoch: 0, batch: 1 }) };
        assert_eq!(AppError::core("federated", diverged).exit_code(), 4);
        assert_eq!(AppError::core("windows", CoreError::NotAligned).exit_code(), 3);
    }
}
