use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("template search exhausted: {0}")]
    Exhausted(String),
    #[error(transparent)]
    Core(#[from] ppgproto_core::Error),
}

pub type Result<T, E = SynthError> = core::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> SynthError {
    SynthError::InvalidSpec(msg.into())
}
