use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error type shared across the model, solver, calibration and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Speed collapses to zero or below at the requested fleet size.
    #[error("infeasible fleet: traffic speed {speed_mph} mph at N = {n_drivers} drivers")]
    InfeasibleFleet { n_drivers: f64, speed_mph: f64 },

    /// No idle supply: every vehicle is occupied and pickup times diverge.
    #[error("wild goose chase: idle fleet {n_idle} is not positive")]
    WildGooseChase { n_idle: f64 },

    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A root-finder bracket was empty or did not contain a sign change.
    #[error("bracket violation: {0}")]
    Bracket(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    /// Revenue target outside what the charge scheme can collect.
    #[error(
        "tax revenue target {target} $/hr unreachable; maximum achievable {max_achievable} $/hr"
    )]
    RevenueRange { target: f64, max_achievable: f64 },

    /// A sweep table does not span the regime boundary being searched for.
    #[error("threshold not found: {0}")]
    ThresholdNotFound(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
