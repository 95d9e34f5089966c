use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("state annihilated by projector (survival probability {probability:e})")]
    StateAnnihilated { probability: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("beam splitter transform is not unitary (deviation {deviation:e})")]
    NonUnitary { deviation: f64 },

    #[error("fringe fit failed: {0}")]
    FitFailed(String),

    #[error("degenerate correlation estimate: {0}")]
    Degenerate(String),

    #[error("tomography design matrix is singular")]
    SingularDesign,

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
