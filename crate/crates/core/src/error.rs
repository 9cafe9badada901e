use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("{what} did not converge within {iterations} iterations")]
    Convergence { what: &'static str, iterations: usize },

    #[error("degenerate arm: {0}")]
    DegenerateArm(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("trial {trial} aborted at round {round}: {source}")]
    Trial {
        trial: u64,
        round: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by the experiment description rather than by
    /// the computation itself.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidArgument(_) | Error::Json(_))
    }
}
