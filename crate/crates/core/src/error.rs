use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{criterion} criterion has no interior maximum for beta = {beta}")]
    NoMaximum { criterion: &'static str, beta: f64 },

    #[error("degenerate posterior: every particle weight underflowed{}", epoch_suffix(.epoch))]
    DegeneratePosterior { epoch: Option<usize> },

    #[error("uncertainty never dropped to {target:e} s")]
    NotReached { target: f64 },

    #[error("replay log exhausted after {consumed} measurements")]
    ReplayExhausted { consumed: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

fn epoch_suffix(epoch: &Option<usize>) -> String {
    match epoch {
        Some(e) => format!(" at epoch {e}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
