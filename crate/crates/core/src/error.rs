use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid game configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid strategy profile: {0}")]
    InvalidProfile(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("player index {index} out of range for {len} players")]
    IndexOutOfRange { index: usize, len: usize },

    /// The vigilante is silent (a = 0), so her throughput carries no information.
    #[error("greedy-rate estimate undefined: vigilante access probability is zero")]
    UndefinedEstimate,

    /// Clearance factor is zero; the greedy utility no longer depends on g through throughput.
    #[error("degenerate channel: clearance factor is zero")]
    DegenerateChannel,

    #[error("vigilante is indifferent: g = 0 and rho = 0 make her utility constant in a")]
    IndifferentVigilante,

    #[error("{0} requires exactly one greedy and one vigilante player")]
    Unsupported(&'static str),

    #[error("Newton iteration failed to converge from every seed")]
    NewtonFailed,

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
