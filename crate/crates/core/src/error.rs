use thiserror::Error;

use crate::network::LinkId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("no detector sample for monitored link {0}")]
    MissingSample(LinkId),

    #[error("occupancy {0} outside [0, 100]")]
    OccupancyOutOfRange(f64),

    #[error("empty region: no monitored links")]
    EmptyRegion,

    #[error("controller is not active")]
    Inactive,

    #[error("least-squares regressors are rank deficient")]
    RankDeficient,

    #[error("empty NFD scatter")]
    EmptyScatter,

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
