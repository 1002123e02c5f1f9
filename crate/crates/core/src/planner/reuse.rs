//! Inter-cell beacon reuse: the dilogarithm-closed-form interference sum
//! from a regular line of co-channel basestations, the resulting effective
//! SIR, and the system-level sounding bandwidth.

use super::PlannerError;
use crate::scalar::{lit, Scalar};

/// `Li_2(z) = sum_{k>=1} z^k / k^2` on `[0, 1]`, to ~1e-12 absolute.
///
/// The series is summed directly for `z <= 0.5`; closer to 1 the Euler
/// reflection `Li_2(z) = pi^2/6 - ln(z) ln(1-z) - Li_2(1-z)` keeps the
/// truncation short.
pub fn dilogarithm<T: Scalar>(z: T) -> Result<T, PlannerError> {
    if z < T::zero() || z > T::one() || !z.is_finite() {
        return Err(PlannerError::DilogDomain);
    }
    let pi2_over_6 = T::PI() * T::PI() / lit(6.0);
    if z == T::one() {
        return Ok(pi2_over_6);
    }
    if z > lit(0.5) {
        let w = T::one() - z;
        return Ok(pi2_over_6 - z.ln() * w.ln() - series(w));
    }
    Ok(series(z))
}

fn series<T: Scalar>(z: T) -> T {
    // z <= 1/2: term_k = z^k / k^2 decays at least as 2^-k
    let mut total = T::zero();
    let mut power = T::one();
    for k in 1..=60u32 {
        power = power * z;
        let term = power / T::from_u32(k * k).unwrap();
        total = total + term;
        if term < lit(1e-16) {
            break;
        }
    }
    total
}

/// Inputs of the reuse analysis: inter-basestation spacing, reuse factor,
/// measurement counts and absorption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReuseQuery<T> {
    /// Spacing between adjacent basestations along the street (metres).
    pub spacing_m: T,
    /// Every `reuse_factor`-th basestation shares a sounding band.
    pub reuse_factor: u32,
    /// Transmit beacons per round.
    pub m: usize,
    /// Receive measurements per beacon.
    pub l: usize,
    /// Absorption (dB per metre).
    pub mu_db_per_m: T,
}

/// Effective signal-to-interference ratio (dB) of channel sounding for a
/// worst-case user one basestation spacing away, with co-channel
/// interferers at every multiple of `reuse_factor * spacing` on both sides
/// contributing four paths each:
///
/// `SIR = m*l*R_f^2 * exp(-nu*S) / (8 * Li_2(exp(-nu*R_f*S)))`,
/// `nu = (mu/10) * ln(10)`.
pub fn reuse_sir<T: Scalar>(q: &ReuseQuery<T>) -> Result<T, PlannerError> {
    if !(q.spacing_m > T::zero()) {
        return Err(PlannerError::InvalidReuse("spacing must be positive"));
    }
    if q.reuse_factor < 1 {
        return Err(PlannerError::InvalidReuse("reuse factor must be at least 1"));
    }
    if q.m < 1 || q.l < 1 {
        return Err(PlannerError::InvalidReuse("m and l must be at least 1"));
    }
    if q.mu_db_per_m < T::zero() {
        return Err(PlannerError::InvalidReuse("absorption must be nonnegative"));
    }
    let nu = q.mu_db_per_m / lit::<T>(10.0) * lit::<T>(10.0).ln();
    let rf = T::from_u32(q.reuse_factor).unwrap();
    let ml = T::from_usize(q.m * q.l).unwrap();
    let li = dilogarithm((-nu * rf * q.spacing_m).exp())?;
    let sir = ml * rf * rf * (-nu * q.spacing_m).exp() / (lit::<T>(8.0) * li);
    Ok(lit::<T>(10.0) * sir.log10())
}

/// Interference is ignorable when `1/SIR < 0.1 * (1/SNR_th)`, i.e. the gate
/// is `SNR_th + 10` dB.
pub fn noise_limited_gate_db<T: Scalar>(threshold_snr_db: T) -> T {
    threshold_snr_db + lit(10.0)
}

/// Smallest reuse factor whose SIR exceeds `gate_db`, scanning up to
/// `max_rf`.
pub fn smallest_reuse_factor<T: Scalar>(
    m: usize,
    l: usize,
    spacing_m: T,
    mu_db_per_m: T,
    gate_db: T,
    max_rf: u32,
) -> Option<u32> {
    (1..=max_rf).find(|&rf| {
        let q = ReuseQuery { spacing_m, reuse_factor: rf, m, l, mu_db_per_m };
        reuse_sir(&q).map(|sir| sir > gate_db).unwrap_or(false)
    })
}

/// Total spectrum consumed by sounding across the deployment.
pub fn system_bandwidth<T: Scalar>(w_s_hz: T, reuse_factor: u32) -> T {
    w_s_hz * T::from_u32(reuse_factor).unwrap()
}
