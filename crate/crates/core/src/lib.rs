//! Two-region rail network expansion under non-cooperative investment,
//! optional co-investment and Nash-bargained surplus sharing.

pub mod assign;
pub mod cli;
pub mod game;
pub mod bargain;
pub mod config;
pub mod demand;
pub mod error;
pub mod fixtures;
pub mod metrics;
pub mod net_model;
pub mod netfile;
pub mod optimizer;
pub mod params;
pub mod report;
pub mod scenario;
pub mod ue_oracle;

pub use error::{Error, Result};
pub use net_model::{build_sioux_falls, DesignAction, EdgeId, MobilityGraph, NetworkState, Region};
pub use params::{ServiceParams, Weights};
