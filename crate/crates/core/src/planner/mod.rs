//! Protocol-design mathematics: estimation-theoretic bounds and the threshold
//! SNR, isometry Monte Carlo for sizing the number of compressive
//! measurements, the link budget and sounding overhead arithmetic, and
//! inter-cell reuse analysis for beacon interference.

mod bounds;
mod isometry;
mod link;
mod reuse;

pub use bounds::{crb_freq, q_function, threshold_snr, zzb_freq, BoundQuery};
pub use isometry::{isometry_check_tx, IsometryBand};
pub use link::{
    comm_snr, dbm_to_watt, min_sounding_time, overhead, sounding_bandwidth, sounding_rate,
    transmit_power, watt_to_dbm, LinkParams, ProtocolParams, TransmitPower,
};
pub use reuse::{
    dilogarithm, noise_limited_gate_db, reuse_sir, smallest_reuse_factor, system_bandwidth,
    ReuseQuery,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlannerError {
    #[error("array side must be at least 2 for frequency estimation bounds")]
    ArraySideTooSmall,
    #[error("SNR must be positive")]
    NonPositiveSnr,
    #[error("dilogarithm argument must lie in [0, 1]")]
    DilogDomain,
    #[error("invalid protocol parameters: {0}")]
    InvalidProtocol(&'static str),
    #[error("invalid reuse query: {0}")]
    InvalidReuse(&'static str),
}
