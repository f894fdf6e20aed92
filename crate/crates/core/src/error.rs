use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "interval [{start}, {end}) outside the series support [{support_start}, {support_end}]"
    )]
    OutOfRange {
        start: f64,
        end: f64,
        support_start: f64,
        support_end: f64,
    },

    #[error("insufficient events: {0}")]
    InsufficientEvents(String),

    #[error("empty result: {0}")]
    EmptyResult(String),

    #[error("undeterminable: {0}")]
    Undeterminable(String),

    #[error("harmonic order {order} too large for a grid of {grid_size} samples")]
    InvalidOrder { order: usize, grid_size: usize },

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn insufficient(msg: impl Into<String>) -> Self {
        Error::InsufficientEvents(msg.into())
    }

    pub(crate) fn undeterminable(msg: impl Into<String>) -> Self {
        Error::Undeterminable(msg.into())
    }
}
