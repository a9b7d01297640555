use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("negative {kind} rate {value} at trait {trait_value}")]
    NegativeRate {
        kind: &'static str,
        value: f64,
        trait_value: f64,
    },

    #[error("event ceiling of {ceiling} events exceeded at t = {time}")]
    EventCeiling { ceiling: u64, time: f64 },

    #[error("trajectory has no event log; record it with `record_events`")]
    MissingEventLog,

    #[error("test function `{0}` is not compactly supported, required for alpha <= 1")]
    NotCompactlySupported(String),

    #[error("PDE blow-up at t = {time}: mass {mass} exceeds {limit}")]
    BlowUp { time: f64, mass: f64, limit: f64 },

    #[error("time step {dt} exceeds stability limit {limit}")]
    Unstable { dt: f64, limit: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
