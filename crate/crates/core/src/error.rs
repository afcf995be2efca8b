use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}:{line}: {message}", path.display())]
    Invalid {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("descriptor dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty proposal set: {0}")]
    EmptyProposals(String),

    #[error("video {video}: key frame {frame} has no feature record")]
    MissingKeyFrame { video: String, frame: usize },

    #[error("no neighbor frames given")]
    NoNeighbors,

    #[error("collection contains no videos")]
    EmptyCollection,

    #[error("unknown video {0:?}")]
    UnknownVideo(String),

    #[error("annotated video {0:?} has no predicted tube")]
    MissingPrediction(String),

    #[error("oracle guard exceeded: {0}")]
    OracleGuard(String),

    #[error("infeasible synthetic spec: {0}")]
    Synth(String),
}

impl Error {
    pub(crate) fn invalid(
        path: impl Into<PathBuf>,
        line: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Invalid {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
