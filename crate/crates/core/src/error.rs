use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A 3D link shorter than the flight altitude cannot exist.
    #[error("link distance {distance} m is below the UAV altitude {altitude} m")]
    BelowAltitude { distance: f64, altitude: f64 },

    #[error("QoE target unreachable: {0}")]
    UnreachableQoe(String),

    #[error("no feasible start found (residual violation {violation:e})")]
    InfeasibleStart { violation: f64 },

    #[error("user {user} receives no packets in interval {interval}")]
    NoArrivals { user: usize, interval: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
