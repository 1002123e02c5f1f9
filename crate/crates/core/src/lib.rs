//! Compressive estimation and tracking of sparse mm-wave spatial channels.
//!
//! The library covers the full downlink loop of a picocellular deployment
//! that steers large phase-only arrays from compressive measurements:
//!
//! - [`geometry`]: steering vectors, direction <-> spatial-frequency maps,
//!   and image-method ray tracing of an urban canyon.
//! - [`channel`]: the physical MIMO channel assembled from traced paths,
//!   propagation gains, beamformed impulse responses.
//! - [`sounding`]: pseudorandom QPSK beaconing, the measured virtual channel,
//!   and uplink feedback payloads (full or SVD-truncated).
//! - [`estimator`]: sequential maximum-likelihood estimation of the transmit
//!   spatial frequencies (FFT grid detection plus Newton refinement), with
//!   warm-started tracking across sounding rounds.
//! - [`planner`]: the protocol-design calculators — CRB/ZZB threshold SNR,
//!   isometry Monte Carlo for sizing measurement counts, the link budget,
//!   sounding time/bandwidth/rate/overhead, and inter-cell reuse SIR.
//! - [`harness`]: scenario simulation driving all of the above, with CSV and
//!   JSON outputs.
//!
//! Numeric code is generic over the floating-point type through [`Scalar`];
//! the `*64` aliases below pin the common `f64` instantiations.

pub mod channel;
mod fft;
pub mod geometry;
pub mod linalg;
pub mod planner;
pub mod scalar;
pub mod estimator;
pub mod sounding;

pub use num_complex::Complex;
pub use scalar::Scalar;

pub type ArrayConfig64 = geometry::ArrayConfig<f64>;
pub type SpatialFrequency64 = geometry::SpatialFrequency<f64>;
pub type CanyonScene64 = geometry::CanyonScene<f64>;
pub type MobileState64 = geometry::MobileState<f64>;
pub type Path64 = channel::Path<f64>;
pub type ChannelMatrix64 = channel::ChannelMatrix<f64>;
pub type WeightMatrix64 = sounding::WeightMatrix<f64>;
pub type VirtualChannel64 = sounding::VirtualChannel<f64>;
