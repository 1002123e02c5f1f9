//! Monte Carlo isometry check for the compressive transmit weights: how well
//! `||A X u||^2 / (M ||X u||^2)` concentrates around 1 over random sparse
//! combinations `u` of steering vectors on an oversampled grid. The observed
//! band justifies the number of beacons `M`.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::fft::{grid_frequency, GridFft};
use crate::scalar::{lit, Scalar};
use crate::sounding::WeightMatrix;

/// Extremes of the energy-preservation ratio observed over the trials
/// (linear scale).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsometryBand<T> {
    pub min_ratio: T,
    pub max_ratio: T,
}

impl<T: Scalar> IsometryBand<T> {
    pub fn to_db(self) -> (T, T) {
        let ten = lit::<T>(10.0);
        (ten * self.min_ratio.log10(), ten * self.max_ratio.log10())
    }
}

/// Draw one random QPSK `A` (`m x n_t^2`) from `seed`, then measure the
/// min/max of `||A X u||^2 / (m ||X u||^2)` over `trials` random
/// `sparsity`-sparse `u` supported on the `(grid_oversampling * n_t)^2`
/// DFT grid with i.i.d. circular Gaussian coefficients.
pub fn isometry_check_tx<T: Scalar>(
    n_t_1d: usize,
    m: usize,
    sparsity: usize,
    grid_oversampling: usize,
    trials: usize,
    seed: u64,
) -> IsometryBand<T> {
    let t = grid_oversampling.max(1) * n_t_1d;
    let grid_len = t * t;
    assert!(sparsity >= 1 && sparsity <= grid_len);
    assert!(trials >= 1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: WeightMatrix<T> = WeightMatrix::generate(m, n_t_1d * n_t_1d, &mut rng);

    // precompute A x(omega) for every grid point: m FFT grids, stored
    // point-major so one trial touches `sparsity` contiguous m-vectors
    let mut fft = GridFft::new(t);
    let mut table = vec![Complex::new(T::zero(), T::zero()); grid_len * m];
    for i in 0..m {
        let grid = fft.row_projection(a.entries().row(i), n_t_1d);
        for (g, v) in grid.iter().enumerate() {
            table[g * m + i] = *v;
        }
    }

    let m_t = T::from_usize(m).unwrap();
    let mut support = vec![0usize; sparsity];
    let mut coeffs = vec![Complex::new(T::zero(), T::zero()); sparsity];
    let mut acc = vec![Complex::new(T::zero(), T::zero()); m];
    let mut min_ratio = T::infinity();
    let mut max_ratio = T::neg_infinity();

    for _ in 0..trials {
        // distinct grid indices
        let mut filled = 0;
        while filled < sparsity {
            let idx = rng.random_range(0..grid_len);
            if !support[..filled].contains(&idx) {
                support[filled] = idx;
                filled += 1;
            }
        }
        for c in coeffs.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *c = Complex::new(lit(re), lit(im));
        }

        // numerator: || sum_j c_j * (A x_j) ||^2
        for v in acc.iter_mut() {
            *v = Complex::new(T::zero(), T::zero());
        }
        for (j, &g) in support.iter().enumerate() {
            let col = &table[g * m..(g + 1) * m];
            let c = coeffs[j];
            for (accv, tv) in acc.iter_mut().zip(col) {
                *accv += c * *tv;
            }
        }
        let num: T = acc.iter().map(|z| z.norm_sqr()).sum();

        // denominator via the closed-form Gram of steering vectors
        let mut den = T::zero();
        for j in 0..sparsity {
            for k in 0..sparsity {
                let inner = steering_inner(n_t_1d, t, support[j], support[k]);
                den += (coeffs[j].conj() * coeffs[k] * inner).re;
            }
        }

        let ratio = num / (m_t * den);
        min_ratio = min_ratio.min(ratio);
        max_ratio = max_ratio.max(ratio);
    }
    IsometryBand { min_ratio, max_ratio }
}

/// `<x(omega_j), x(omega_k)>` for two on-grid frequencies, via the product
/// of per-axis geometric sums.
fn steering_inner<T: Scalar>(n_1d: usize, t: usize, j: usize, k: usize) -> Complex<T> {
    let (jx, jz) = grid_frequency::<T>(j, t);
    let (kx, kz) = grid_frequency::<T>(k, t);
    axis_sum(n_1d, kx - jx) * axis_sum(n_1d, kz - jz)
}

/// `sum_{q=0}^{n-1} exp(i * delta * q)`.
fn axis_sum<T: Scalar>(n: usize, delta: T) -> Complex<T> {
    let half = delta / lit(2.0);
    let s = half.sin();
    if s.abs() < lit(1e-12) {
        return Complex::new(T::from_usize(n).unwrap(), T::zero());
    }
    let nf = T::from_usize(n).unwrap();
    let mag = (nf * half).sin() / s;
    let phase = half * (nf - T::one());
    Complex::from_polar(mag, phase)
}
