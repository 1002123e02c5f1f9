//! Physical MIMO channel: propagation gain, the channel matrix built from a
//! set of paths, and beamformed impulse responses.

use num_complex::Complex;
use thiserror::Error;

use crate::geometry::{steering_vector, ArrayConfig, SpatialFrequency, SPEED_OF_LIGHT};
use crate::linalg::CMatrix;
use crate::scalar::{lit, Scalar};

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("range must be positive")]
    NonPositiveRange,
    #[error("bandwidth must be positive")]
    NonPositiveBandwidth,
    #[error("spatial frequency outside the array's admissible square")]
    InadmissibleFrequency,
    #[error("weight vector length {got} does not match array size {want}")]
    WeightLength { got: usize, want: usize },
}

/// One propagation ray between the basestation and a mobile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path<T> {
    /// Complex voltage gain, absorption/reflection losses and phase included.
    pub gain: Complex<T>,
    /// Spatial frequency of the departure direction at the transmit array.
    pub omega_t: SpatialFrequency<T>,
    /// Spatial frequency of the arrival direction at the receive array.
    pub omega_r: SpatialFrequency<T>,
    /// Path length in metres; the excess delay is `length / c`.
    pub length: T,
}

impl<T: Scalar> Path<T> {
    pub fn delay(&self) -> T {
        self.length / lit(SPEED_OF_LIGHT)
    }
}

/// The `n_t^2 x n_r^2` channel matrix between two square arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix<T> {
    entries: CMatrix<T>,
    n_t_1d: usize,
    n_r_1d: usize,
}

impl<T: Scalar> ChannelMatrix<T> {
    pub fn entries(&self) -> &CMatrix<T> {
        &self.entries
    }

    pub fn n_t_1d(&self) -> usize {
        self.n_t_1d
    }

    pub fn n_r_1d(&self) -> usize {
        self.n_r_1d
    }

    pub fn frobenius_sq(&self) -> T {
        self.entries.frobenius_sq()
    }
}

/// Omnidirectional power gain in dB at range `r`:
/// `-mu*r + 20*log10(lambda / (4*pi*r))`, free space plus absorption.
pub fn path_gain_db<T: Scalar>(r: T, mu_db_per_m: T, wavelength: T) -> Result<T, ChannelError> {
    if !(r > T::zero()) {
        return Err(ChannelError::NonPositiveRange);
    }
    let spreading = lit::<T>(20.0) * (wavelength / (lit::<T>(4.0) * T::PI() * r)).log10();
    Ok(-mu_db_per_m * r + spreading)
}

/// Assemble `H = sum_l g_l * x_t(omega_t_l) * x_r(omega_r_l)^T` (transpose,
/// not conjugate). An empty path list yields the zero matrix.
pub fn assemble_channel<T: Scalar>(
    paths: &[Path<T>],
    tx: &ArrayConfig<T>,
    rx: &ArrayConfig<T>,
) -> Result<ChannelMatrix<T>, ChannelError> {
    let limit_t = tx.omega_limit() * (T::one() + lit(1e-9));
    let limit_r = rx.omega_limit() * (T::one() + lit(1e-9));
    for p in paths {
        if p.omega_t.omega_x.abs() > limit_t
            || p.omega_t.omega_z.abs() > limit_t
            || p.omega_r.omega_x.abs() > limit_r
            || p.omega_r.omega_z.abs() > limit_r
        {
            return Err(ChannelError::InadmissibleFrequency);
        }
    }
    let (nt, nr) = (tx.n_elements(), rx.n_elements());
    let mut h = CMatrix::zeros(nt, nr);
    for p in paths {
        let xt = steering_vector(tx.n_1d(), p.omega_t);
        let xr = steering_vector(rx.n_1d(), p.omega_r);
        for (i, xti) in xt.iter().enumerate() {
            let gi = p.gain * *xti;
            for (j, xrj) in xr.iter().enumerate() {
                h.set(i, j, h.get(i, j) + gi * *xrj);
            }
        }
    }
    Ok(ChannelMatrix { entries: h, n_t_1d: tx.n_1d(), n_r_1d: rx.n_1d() })
}

/// Beamformed impulse response: per path, the complex amplitude
/// `g_l * (w_t^T x_t) * (w_r^T x_r)` lands in the tap nearest to its delay at
/// sample spacing `1 / bandwidth`. Returns tap magnitudes from delay zero.
pub fn impulse_response<T: Scalar>(
    paths: &[Path<T>],
    tx_weights: &[Complex<T>],
    rx_weights: &[Complex<T>],
    bandwidth_hz: T,
) -> Result<Vec<T>, ChannelError> {
    if !(bandwidth_hz > T::zero()) {
        return Err(ChannelError::NonPositiveBandwidth);
    }
    let n_t_1d = side_from_len(tx_weights.len())?;
    let n_r_1d = side_from_len(rx_weights.len())?;

    let mut tap_amps: Vec<(usize, Complex<T>)> = Vec::with_capacity(paths.len());
    let mut max_bin = 0usize;
    for p in paths {
        let xt = steering_vector(n_t_1d, p.omega_t);
        let xr = steering_vector(n_r_1d, p.omega_r);
        let at = dot_unconjugated(tx_weights, &xt);
        let ar = dot_unconjugated(rx_weights, &xr);
        let amp = p.gain * at * ar;
        let bin_f = (p.delay() * bandwidth_hz).round();
        let bin = bin_f.to_usize().unwrap_or(0);
        max_bin = max_bin.max(bin);
        tap_amps.push((bin, amp));
    }
    let mut taps = vec![Complex::new(T::zero(), T::zero()); max_bin + 1];
    for (bin, amp) in tap_amps {
        taps[bin] += amp;
    }
    Ok(taps.into_iter().map(|z| z.norm()).collect())
}

fn side_from_len(len: usize) -> Result<usize, ChannelError> {
    let side = (len as f64).sqrt().round() as usize;
    if side * side != len {
        return Err(ChannelError::WeightLength { got: len, want: side * side });
    }
    Ok(side)
}

fn dot_unconjugated<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Complex::new(T::zero(), T::zero());
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eig;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn half_wave(n: usize) -> ArrayConfig<f64> {
        ArrayConfig::half_wavelength(n, 5e-3).unwrap()
    }

    fn rand_freq(rng: &mut ChaCha8Rng) -> SpatialFrequency<f64> {
        SpatialFrequency::new(
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        )
    }

    fn rand_path(rng: &mut ChaCha8Rng, gain: Complex64) -> Path<f64> {
        Path { gain, omega_t: rand_freq(rng), omega_r: rand_freq(rng), length: rng.random_range(10.0..200.0) }
    }

    #[test]
    fn path_gain_friis_spacing_law() {
        // mu = 0: doubling range costs exactly 20*log10(2)
        let g1: f64 = path_gain_db(50.0, 0.0, 5e-3).unwrap();
        let g2 = path_gain_db(100.0, 0.0, 5e-3).unwrap();
        assert!((g1 - g2 - 20.0 * 2.0_f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn path_gain_absorption_and_golden() {
        // absorption contributes exactly -mu*r
        let g_abs: f64 = path_gain_db(100.0, 0.016, 5e-3).unwrap();
        let g_free = path_gain_db(100.0, 0.0, 5e-3).unwrap();
        assert!((g_free - g_abs - 1.6).abs() < 1e-12);
        // 5 mm carrier at 100 m: 20*log10(lambda/(4*pi*r)) - 1.6 = -109.6048 dB
        assert!((g_abs - (-109.60479719372154)).abs() < 1e-9);
    }

    #[test]
    fn path_gain_monotone_and_errors() {
        let mut prev = f64::INFINITY;
        for r in [1.0, 5.0, 20.0, 100.0, 400.0] {
            let g: f64 = path_gain_db(r, 0.016, 5e-3).unwrap();
            assert!(g < prev);
            prev = g;
        }
        let heavy: f64 = path_gain_db(100.0, 0.02, 5e-3).unwrap();
        assert!(heavy < path_gain_db(100.0, 0.01, 5e-3).unwrap());
        assert_eq!(path_gain_db(0.0_f64, 0.016, 5e-3), Err(ChannelError::NonPositiveRange));
        assert_eq!(path_gain_db(-3.0_f64, 0.016, 5e-3), Err(ChannelError::NonPositiveRange));
    }

    #[test]
    fn single_path_rank_one_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (tx, rx) = (half_wave(4), half_wave(2));
        let p = rand_path(&mut rng, Complex64::new(1.0, 0.0));
        let h = assemble_channel(&[p], &tx, &rx).unwrap();
        let f2 = h.frobenius_sq();
        assert!((f2 - (16.0 * 4.0)).abs() < 1e-9);
        let (vals, _) = hermitian_eig(&h.entries().gram());
        assert!(vals[0] > 1e-9 && vals[1].abs() < 1e-9, "rank one: {vals:?}");
    }

    #[test]
    fn entries_match_double_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (tx, rx) = (half_wave(3), half_wave(2));
        let paths = [
            rand_path(&mut rng, Complex64::new(0.8, -0.3)),
            rand_path(&mut rng, Complex64::new(-0.2, 0.5)),
        ];
        let h = assemble_channel(&paths, &tx, &rx).unwrap();
        for nt in 0..3usize {
            for mt in 0..3usize {
                for nr in 0..2usize {
                    for mr in 0..2usize {
                        let i = nt * 3 + mt;
                        let j = nr * 2 + mr;
                        let mut want = Complex64::new(0.0, 0.0);
                        for p in &paths {
                            let pt = p.omega_t.omega_x * mt as f64 + p.omega_t.omega_z * nt as f64;
                            let pr = p.omega_r.omega_x * mr as f64 + p.omega_r.omega_z * nr as f64;
                            want += p.gain * Complex64::from_polar(1.0, pt + pr);
                        }
                        assert!((h.entries().get(i, j) - want).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn four_paths_give_rank_four() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (tx, rx) = (half_wave(8), half_wave(4));
        let paths: Vec<_> = (0..4).map(|_| rand_path(&mut rng, Complex64::new(1.0, 0.2))).collect();
        let h = assemble_channel(&paths, &tx, &rx).unwrap();
        let (vals, _) = hermitian_eig(&h.entries().gram());
        let scale = vals[0];
        assert!(vals[3] > 1e-9 * scale, "fourth eigenvalue {} vs {}", vals[3], scale);
        if vals.len() > 4 {
            assert!(vals[4] < 1e-9 * scale, "rank must not exceed 4");
        }
    }

    #[test]
    fn linearity_over_path_concatenation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (tx, rx) = (half_wave(4), half_wave(3));
        let a: Vec<_> = (0..2).map(|_| rand_path(&mut rng, Complex64::new(0.3, 0.9))).collect();
        let b: Vec<_> = (0..2).map(|_| rand_path(&mut rng, Complex64::new(-0.7, 0.1))).collect();
        let mut all = a.clone();
        all.extend_from_slice(&b);
        let h_all = assemble_channel(&all, &tx, &rx).unwrap();
        let h_a = assemble_channel(&a, &tx, &rx).unwrap();
        let h_b = assemble_channel(&b, &tx, &rx).unwrap();
        for i in 0..tx.n_elements() {
            for j in 0..rx.n_elements() {
                let sum = h_a.entries().get(i, j) + h_b.entries().get(i, j);
                let rel = (h_all.entries().get(i, j) - sum).norm() / sum.norm().max(1e-30);
                assert!(rel < 1e-12);
            }
        }
    }

    #[test]
    fn frobenius_identity_on_dft_grid() {
        // orthogonal steering vectors: on-grid DFT frequencies
        let (tx, rx) = (half_wave(4), half_wave(4));
        let step = 2.0 * std::f64::consts::PI / 4.0;
        let gains = [Complex64::new(1.0, 0.0), Complex64::new(0.0, -2.0), Complex64::new(0.5, 0.5)];
        let paths: Vec<Path<f64>> = (0..3)
            .map(|l| Path {
                gain: gains[l],
                omega_t: SpatialFrequency::new(step * l as f64, step),
                omega_r: SpatialFrequency::new(step, step * l as f64),
                length: 30.0,
            })
            .collect();
        let h = assemble_channel(&paths, &tx, &rx).unwrap();
        let want: f64 = gains.iter().map(|g| g.norm_sqr() * 16.0 * 16.0).sum();
        assert!((h.frobenius_sq() - want).abs() / want < 1e-12);
    }

    #[test]
    fn empty_paths_zero_matrix() {
        let h = assemble_channel(&[], &half_wave(2), &half_wave(2)).unwrap();
        assert_eq!(h.frobenius_sq(), 0.0);
    }

    #[test]
    fn inadmissible_frequency_rejected() {
        let p = Path {
            gain: Complex64::new(1.0, 0.0),
            omega_t: SpatialFrequency::new(4.0, 0.0), // > pi for half-wavelength spacing
            omega_r: SpatialFrequency::zero(),
            length: 10.0,
        };
        assert_eq!(
            assemble_channel(&[p], &half_wave(4), &half_wave(4)),
            Err(ChannelError::InadmissibleFrequency)
        );
    }

    #[test]
    fn impulse_response_matched_single_path() {
        let p = Path {
            gain: Complex64::new(0.7, 0.0),
            omega_t: SpatialFrequency::new(0.4, -0.9),
            omega_r: SpatialFrequency::new(0.1, 0.2),
            length: 45.0,
        };
        let n_t = 8;
        let n_r = 4;
        let wt: Vec<Complex64> = steering_vector(n_t, p.omega_t).iter().map(|z| z.conj()).collect();
        let wr: Vec<Complex64> = steering_vector(n_r, p.omega_r).iter().map(|z| z.conj()).collect();
        let taps = impulse_response(&[p], &wt, &wr, 2e9).unwrap();
        let peak = taps.iter().cloned().fold(0.0, f64::max);
        // matched beamforming: |g| * n_t^2 * n_r^2
        let want = 0.7 * 64.0 * 16.0;
        assert!((peak - want).abs() / want < 1e-12);
        // energy bookkeeping with a single tap
        let energy: f64 = taps.iter().map(|t| t * t).sum();
        assert!((energy - want * want).abs() / (want * want) < 1e-12);
    }

    #[test]
    fn impulse_response_resolvable_delays() {
        let mk = |len: f64| Path {
            gain: Complex64::new(1.0, 0.0),
            omega_t: SpatialFrequency::zero(),
            omega_r: SpatialFrequency::zero(),
            length: len,
        };
        // 2 GHz sampling: 0.15 m per tap; separate by ~3 m
        let paths = [mk(30.0), mk(33.0)];
        let w_t = vec![Complex64::new(1.0, 0.0); 4];
        let w_r = vec![Complex64::new(1.0, 0.0); 4];
        let taps = impulse_response(&paths, &w_t, &w_r, 2e9).unwrap();
        let nonzero: Vec<usize> =
            taps.iter().enumerate().filter(|(_, &t)| t > 1e-9).map(|(i, _)| i).collect();
        assert_eq!(nonzero.len(), 2);
        assert!(nonzero[1] - nonzero[0] >= 19);
        assert_eq!(impulse_response(&paths, &w_t, &w_r, 0.0), Err(ChannelError::NonPositiveBandwidth));
    }
}
