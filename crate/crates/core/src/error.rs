use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("{context} references undeclared bus {bus}")]
    DanglingBus { context: String, bus: u32 },

    #[error("branch {from}-{to} has zero series reactance")]
    ZeroReactance { from: u32, to: u32 },

    #[error("network has no slack bus")]
    NoSlack,

    #[error("network is not a single island: {0}")]
    MultiIsland(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid demand: {0}")]
    InvalidDemand(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("missing multipliers: {0}")]
    MissingMultipliers(String),

    #[error("{0}")]
    Contract(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Format { path: String, msg: String },

    #[error("study directory {dir} is missing: {}", files.join(", "))]
    MissingFiles { dir: String, files: Vec<String> },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn format(path: impl AsRef<std::path::Path>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.as_ref().display().to_string(),
            msg: msg.into(),
        }
    }
}
