use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-side precondition was not met.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("kernel integral does not converge: {0}")]
    DivergingKernel(String),

    #[error("kernel has infinite p-variation: {0}")]
    InfiniteVariation(String),

    #[error("moment not available: {0}")]
    UnsupportedMoment(String),

    /// Stability coefficient at or above one without an explicit override.
    #[error("unstable configuration: {what} = {value} >= 1")]
    Unstable { what: &'static str, value: f64 },

    #[error("runaway intensity: {0}")]
    RunawayIntensity(String),

    #[error("log-domain fit needs positive values: {0}")]
    LogDomain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
