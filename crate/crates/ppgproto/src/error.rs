use std::path::Path;

use ppgproto_synth::SynthError;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("insufficient data: {0}")]
    Insufficient(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Insufficient(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    /// Prefixes the message with `context`, keeping the kind.
    pub fn context(self, context: &str) -> Self {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{context}: {m}")),
            CliError::Insufficient(m) => CliError::Insufficient(format!("{context}: {m}")),
            CliError::Io(m) => CliError::Io(format!("{context}: {m}")),
        }
    }
}

impl From<ppgproto_core::Error> for CliError {
    fn from(e: ppgproto_core::Error) -> Self {
        use ppgproto_core::Error as E;
        match e {
            E::InsufficientEvents(_)
            | E::EmptyResult(_)
            | E::Undeterminable(_)
            | E::RankDeficient(_) => CliError::Insufficient(e.to_string()),
            E::InvalidInput(_) | E::OutOfRange { .. } | E::InvalidOrder { .. } => {
                CliError::Usage(e.to_string())
            }
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Core(inner) => inner.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}
