use maxslope_core::mms_driver::MmsFailure;
use maxslope_core::solver::SolveError;
use maxslope_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("scenario schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("cannot write report {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: CoreError,
    },

    #[error(transparent)]
    Mms(#[from] MmsFailure),
}

impl From<CoreError> for CliError {
    fn from(source: CoreError) -> Self {
        Self::Core { context: "model".into(), source }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Schema { .. } | Self::Io { .. } => 2,
            Self::Core { source, .. } => core_exit_code(source),
            Self::Mms(f) => core_exit_code(&f.source),
        }
    }
}

/// Bad inputs are configuration errors, broken contracts are failures and
/// everything else is a solver failure.
fn core_exit_code(e: &CoreError) -> i32 {
    match e {
        CoreError::DimensionMismatch { .. } | CoreError::InvalidParameter(_) | CoreError::OutsideDomain(_) => 2,
        CoreError::Solve(SolveError::Config(_)) => 2,
        CoreError::Solve(SolveError::OracleMismatch { .. }) | CoreError::Trace(_) => 1,
        _ => 3,
    }
}

pub(crate) trait Context<T> {
    fn context(self, what: impl Into<String>) -> Result<T, CliError>;
}

impl<T> Context<T> for Result<T, CoreError> {
    fn context(self, what: impl Into<String>) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core { context: what.into(), source })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_kind() {
        let mismatch = SolveError::OracleMismatch { solver: vec![], solver_value: 0.0, oracle: vec![], oracle_value: 1.0 };
        assert_eq!(CliError::from(CoreError::Solve(mismatch)).exit_code(), 1);
        assert_eq!(CliError::from(CoreError::NonCoercive).exit_code(), 3);
        assert_eq!(CliError::from(CoreError::Infeasible { certificate: 1.0 }).exit_code(), 3);
        assert_eq!(CliError::from(CoreError::InvalidParameter("x".into())).exit_code(), 2);
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
    }
}
