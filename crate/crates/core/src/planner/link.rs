//! Link budget and sounding-protocol arithmetic: transmit power under an
//! EIRP cap, per-symbol communication SNR, the minimum sounding time (range
//! cancels against the communication design point), sounding bandwidth, rate
//! and overhead.

use serde::{Deserialize, Serialize};

use super::PlannerError;
use crate::channel::path_gain_db;
use crate::scalar::{lit, Scalar};

/// Deployment-level link parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkParams<T> {
    pub eirp_dbm: T,
    /// Basestation array side.
    pub n_t_1d: usize,
    /// Mobile array side.
    pub n_r_1d: usize,
    /// Receiver noise figure (dB); the thermal floor is -174 dBm/Hz + NF.
    pub noise_figure_db: T,
    /// Communication bandwidth `W_c` (Hz).
    pub comm_bandwidth_hz: T,
    /// Link margin for communication (dB).
    pub comm_margin_db: T,
    /// Link margin for estimation (dB); larger than the communication margin
    /// to absorb the power variability of the random sounding weights.
    pub est_margin_db: T,
    /// Per-symbol SNR the communication link is designed to deliver (dB).
    /// The sounding-time requirement guarantees estimation wherever the
    /// communication SNR meets this target, which is what removes the range
    /// dependence.
    pub comm_snr_target_db: T,
    /// Atmospheric absorption (dB per metre).
    pub mu_db_per_m: T,
    pub wavelength_m: T,
}

impl<T: Scalar> LinkParams<T> {
    /// 60 GHz urban picocell defaults: 40 dBm EIRP, 4x4 handset array,
    /// NF 6 dB, 2 GHz communication bandwidth, 10/16 dB margins, 7 dB
    /// design SNR, 0.016 dB/m oxygen absorption.
    pub fn default_60ghz(n_t_1d: usize) -> Self {
        Self { n_t_1d, ..Self::default() }
    }

    /// Thermal noise floor in dBm/Hz.
    pub fn noise_floor_dbm_per_hz(&self) -> T {
        lit::<T>(-174.0) + self.noise_figure_db
    }
}

impl<T: Scalar> Default for LinkParams<T> {
    fn default() -> Self {
        Self {
            eirp_dbm: lit(40.0),
            n_t_1d: 8,
            n_r_1d: 4,
            noise_figure_db: lit(6.0),
            comm_bandwidth_hz: lit(2e9),
            comm_margin_db: lit(10.0),
            est_margin_db: lit(16.0),
            comm_snr_target_db: lit(7.0),
            mu_db_per_m: lit(0.016),
            wavelength_m: lit(5e-3),
        }
    }
}

/// Total and per-element transmit power under an EIRP constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmitPower<T> {
    pub total_dbm: T,
    pub per_element_dbm: T,
}

/// `P = EIRP - 20*log10(n_t)` and `P_e = P - 20*log10(n_t)`: beamforming
/// gain comes out of the EIRP budget, and the power splits evenly over the
/// `n_t^2` elements.
pub fn transmit_power<T: Scalar>(eirp_dbm: T, n_t_1d: usize) -> TransmitPower<T> {
    let gain = lit::<T>(20.0) * T::from_usize(n_t_1d).unwrap().log10();
    let total_dbm = eirp_dbm - gain;
    TransmitPower { total_dbm, per_element_dbm: total_dbm - gain }
}

pub fn dbm_to_watt<T: Scalar>(dbm: T) -> T {
    lit::<T>(10.0).powf(dbm / lit(10.0)) / lit(1000.0)
}

pub fn watt_to_dbm<T: Scalar>(watt: T) -> T {
    lit::<T>(10.0) * (watt * lit::<T>(1000.0)).log10()
}

/// Per-symbol communication SNR at range `r`:
/// `EIRP + G_dB(r) + 20*log10(n_r) - 10*log10(N0 * W_c) - margin`.
pub fn comm_snr<T: Scalar>(link: &LinkParams<T>, r: T) -> T {
    let g = path_gain_db(r, link.mu_db_per_m, link.wavelength_m).expect("positive range");
    let rx_gain = lit::<T>(20.0) * T::from_usize(link.n_r_1d).unwrap().log10();
    let noise_dbm = link.noise_floor_dbm_per_hz() + lit::<T>(10.0) * link.comm_bandwidth_hz.log10();
    link.eirp_dbm + g + rx_gain - noise_dbm - link.comm_margin_db
}

/// Minimum time a sounding round must occupy (`M*L / W_s`, in seconds) for
/// the effective sounding SNR to reach `threshold_db` plus margin wherever
/// the communication link meets its design SNR. Combining the sounding-SNR
/// requirement with the communication budget cancels both the range and the
/// noise floor:
///
/// `10*log10(ML/W_s) >= threshold + est_margin - comm_margin - snr_c
///                      + 20*log10(n_t) + 20*log10(n_r) - 10*log10(W_c)`.
pub fn min_sounding_time<T: Scalar>(
    link: &LinkParams<T>,
    n_t_1d: usize,
    threshold_db: T,
    est_margin_db: T,
) -> T {
    let ten = lit::<T>(10.0);
    let rhs_db = threshold_db + est_margin_db - link.comm_margin_db - link.comm_snr_target_db
        + lit::<T>(20.0) * T::from_usize(n_t_1d).unwrap().log10()
        + lit::<T>(20.0) * T::from_usize(link.n_r_1d).unwrap().log10()
        - ten * link.comm_bandwidth_hz.log10();
    ten.powf(rhs_db / ten)
}

/// The sounding bandwidth that realizes the minimum sounding time:
/// `W_s = m*l / min_time`.
pub fn sounding_bandwidth<T: Scalar>(m: usize, l: usize, min_time_s: T) -> T {
    T::from_usize(m * l).unwrap() / min_time_s
}

/// Re-sounding rate keeping beamforming loss under 3 dB for users no closer
/// than `r_min` moving at up to `v_max`:
/// `f_B >= 2 * d * v_max * n_t / (r_min * lambda)`.
pub fn sounding_rate<T: Scalar>(
    spacing_m: T,
    wavelength_m: T,
    v_max_m_per_s: T,
    r_min_m: T,
    n_t_1d: usize,
) -> T {
    lit::<T>(2.0) * spacing_m * v_max_m_per_s * T::from_usize(n_t_1d).unwrap()
        / (r_min_m * wavelength_m)
}

/// The four numbers that specify a sounding protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams<T> {
    /// Transmit beacons per round.
    pub m: usize,
    /// Receive measurements per beacon.
    pub l: usize,
    /// Sounding bandwidth (Hz).
    pub w_s_hz: T,
    /// Sounding rate (rounds per second).
    pub f_b_hz: T,
}

impl<T: Scalar> ProtocolParams<T> {
    pub fn validate(&self) -> Result<(), PlannerError> {
        if self.m < 1 || self.l < 1 {
            return Err(PlannerError::InvalidProtocol("m and l must be at least 1"));
        }
        if !(self.w_s_hz > T::zero()) || !(self.f_b_hz > T::zero()) {
            return Err(PlannerError::InvalidProtocol("bandwidth and rate must be positive"));
        }
        let frac = overhead(self);
        if !(frac > T::zero()) || frac >= T::one() {
            return Err(PlannerError::InvalidProtocol("overhead must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Seconds one sounding round occupies.
    pub fn round_time_s(&self) -> T {
        T::from_usize(self.m * self.l).unwrap() / self.w_s_hz
    }
}

/// Fraction of air time spent sounding: `m * l * f_B / W_s`.
pub fn overhead<T: Scalar>(p: &ProtocolParams<T>) -> T {
    T::from_usize(p.m * p.l).unwrap() * p.f_b_hz / p.w_s_hz
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transmit_power_matches_deployment_figures() {
        // 40 dBm EIRP: 8x8 array radiates ~22 dBm total / ~4 dBm per element,
        // 32x32 ~10 dBm / ~-20 dBm
        let p8 = transmit_power(40.0_f64, 8);
        assert!((p8.total_dbm - (40.0 - 20.0 * 8f64.log10())).abs() < 1e-12);
        assert_eq!(p8.total_dbm.round(), 22.0);
        assert_eq!(p8.per_element_dbm.round(), 4.0);
        let p32 = transmit_power(40.0_f64, 32);
        assert_eq!(p32.total_dbm.round(), 10.0);
        assert_eq!(p32.per_element_dbm.round(), -20.0);
        // single element: no array gain
        let p1 = transmit_power(40.0, 1);
        assert_eq!(p1.total_dbm, 40.0);
        assert_eq!(p1.per_element_dbm, 40.0);
    }

    #[test]
    fn comm_snr_at_hundred_meters() {
        let link = LinkParams::<f64>::default_60ghz(8);
        // exact arithmetic of the budget puts the rounded 7 dB figure at
        // 7.43 dB
        let snr = comm_snr(&link, 100.0);
        assert!((snr - 7.4261).abs() < 0.01, "snr {snr}");
        assert_eq!(snr.round(), 7.0);
        // margin moves the SNR one-for-one
        let mut tighter = link;
        tighter.comm_margin_db += 2.5;
        assert!((comm_snr(&tighter, 100.0) - (snr - 2.5)).abs() < 1e-12);
    }

    #[test]
    fn min_sounding_time_goldens() {
        let link = LinkParams::<f64>::default_60ghz(8);
        let t8 = min_sounding_time(&link, 8, 16.04, link.est_margin_db);
        assert!((t8 - 16.34e-6).abs() / 16.34e-6 < 0.01, "t8 = {t8}");
        let t32 = min_sounding_time(&link, 32, 16.13, link.est_margin_db);
        assert!((t32 - 0.2669e-3).abs() / 0.2669e-3 < 0.01, "t32 = {t32}");
        // no range argument exists: the API is range-free by construction
    }

    #[test]
    fn min_sounding_time_degenerate_identity() {
        // est margin equal to the comm margin and 1x1 arrays: the time
        // collapses to threshold-over-SNR scaling across one symbol
        let mut link = LinkParams::<f64>::default_60ghz(1);
        link.n_r_1d = 1;
        let t = min_sounding_time(&link, 1, 16.0, link.comm_margin_db);
        let want = 10f64.powf((16.0 - link.comm_snr_target_db) / 10.0) / link.comm_bandwidth_hz;
        assert!((t - want).abs() / want < 1e-12);
    }

    #[test]
    fn sounding_bandwidth_goldens() {
        let link = LinkParams::<f64>::default_60ghz(8);
        let t8 = min_sounding_time(&link, 8, 16.04, 16.0);
        let ws8 = sounding_bandwidth(24, 6, t8);
        assert!((ws8 - 8.8124e6).abs() / 8.8124e6 < 1e-3, "ws8 = {ws8}");
        let t32 = min_sounding_time(&link, 32, 16.13, 16.0);
        let ws32 = sounding_bandwidth(30, 6, t32);
        assert!((ws32 - 674.34e3).abs() / 674.34e3 < 1e-3, "ws32 = {ws32}");
        // doubling the measurement count doubles the bandwidth
        assert!((sounding_bandwidth(48, 6, t8) / ws8 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sounding_rate_cases() {
        // half-wavelength spacing, 20 m/s, 20 m minimum range
        let f8: f64 = sounding_rate(2.5e-3, 5e-3, 20.0, 20.0, 8);
        assert!((f8 - 8.0).abs() < 1e-12);
        let f32_: f64 = sounding_rate(2.5e-3, 5e-3, 20.0, 20.0, 32);
        assert!((f32_ - 32.0).abs() < 1e-12);
        let static_users: f64 = sounding_rate(2.5e-3, 5e-3, 0.0, 20.0, 8);
        assert_eq!(static_users, 0.0);
    }

    #[test]
    fn overhead_goldens() {
        let link = LinkParams::<f64>::default_60ghz(8);
        let t8 = min_sounding_time(&link, 8, 16.04, 16.0);
        let p8 = ProtocolParams { m: 24, l: 6, w_s_hz: sounding_bandwidth(24, 6, t8), f_b_hz: 8.0 };
        p8.validate().unwrap();
        let oh8 = overhead(&p8) * 100.0;
        assert!((oh8 - 0.0131).abs() < 0.001, "overhead {oh8}%");
        let t32 = min_sounding_time(&link, 32, 16.13, 16.0);
        let p32 =
            ProtocolParams { m: 30, l: 6, w_s_hz: sounding_bandwidth(30, 6, t32), f_b_hz: 32.0 };
        let oh32 = overhead(&p32) * 100.0;
        assert!((oh32 - 0.8542).abs() < 0.001, "overhead {oh32}%");
        // rate of zero costs nothing
        let idle = ProtocolParams { f_b_hz: 0.0, ..p8 };
        assert_eq!(overhead(&idle), 0.0);
        assert!(idle.validate().is_err());
    }

    #[test]
    fn power_unit_round_trip() {
        for dbm in [-20.0, 0.0, 4.0, 22.0, 40.0] {
            let w: f64 = dbm_to_watt(dbm);
            assert!((watt_to_dbm(w) - dbm).abs() < 1e-12);
        }
        assert!((dbm_to_watt(30.0_f64) - 1.0).abs() < 1e-15);
    }
}
