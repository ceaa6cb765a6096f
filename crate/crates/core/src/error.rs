use std::path::PathBuf;

use crate::net_model::EdgeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("edge {0} is not a rail edge of this network")]
    UnknownEdge(EdgeId),

    #[error("unknown node {0}")]
    UnknownNode(u32),

    #[error("edge {edge}: frequency {requested} exceeds the cap of {cap}")]
    FrequencyOverflow { edge: EdgeId, requested: u32, cap: u32 },

    #[error("edge {0} is already connected and cannot be built again")]
    RebuildExisting(EdgeId),

    #[error("edge {0}: frequency assigned to an unconnected edge")]
    BigMViolation(EdgeId),

    #[error("invalid demand bounds for {trip_type}: lower {lower} > upper {upper}")]
    InvalidBounds { trip_type: &'static str, lower: u32, upper: u32 },

    #[error("no path from node {from} to node {to}")]
    Unreachable { from: u32, to: u32 },

    #[error("instance too large for exact search: {0}")]
    TooLarge(String),

    #[error("return on co-investment is undefined: nothing was co-invested")]
    ZeroCoinvestment,

    #[error("no agreement: pooled payoff does not exceed the disagreement point")]
    NoAgreement,

    #[error("road edge {0} has zero capacity")]
    ZeroRoadCapacity(EdgeId),

    #[error("user equilibrium infeasible: {0}")]
    Infeasible(String),

    #[error("invalid network: {}", .0.join("; "))]
    InvalidNetwork(Vec<String>),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
