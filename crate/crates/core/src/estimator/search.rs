//! Grid detection: the matched-energy surface over an oversampled frequency
//! grid, evaluated with zero-padded 2D FFTs of the adjoint-combined data.

use num_complex::Complex;

use crate::fft::{grid_frequency, GridFft};
use crate::geometry::SpatialFrequency;
use crate::linalg::CMatrix;
use crate::scalar::Scalar;

/// The detection operator for one sounding round: the transmit weights `A`,
/// the oversampled grid, and the precomputed per-grid-point norms
/// `||A x_t(omega)||^2`.
pub(crate) struct Sensing<T: Scalar> {
    a: CMatrix<T>,
    n_1d: usize,
    t: usize,
    fft: GridFft<T>,
    norm_grid: Vec<T>,
}

impl<T: Scalar> Sensing<T> {
    pub fn new(a: &CMatrix<T>, oversampling: usize) -> Self {
        let n_1d = (a.cols() as f64).sqrt().round() as usize;
        assert_eq!(n_1d * n_1d, a.cols(), "transmit weights must cover a square array");
        let t = oversampling.max(1) * n_1d;
        let mut fft = GridFft::new(t);
        let mut norm_grid = vec![T::zero(); t * t];
        for i in 0..a.rows() {
            let proj = fft.row_projection(a.row(i), n_1d);
            for (acc, v) in norm_grid.iter_mut().zip(&proj) {
                *acc += v.norm_sqr();
            }
        }
        Self { a: a.clone(), n_1d, t, fft, norm_grid }
    }

    pub fn a(&self) -> &CMatrix<T> {
        &self.a
    }

    pub fn n_1d(&self) -> usize {
        self.n_1d
    }

    pub fn grid_side(&self) -> usize {
        self.t
    }

    /// Matched-energy score at every grid point:
    /// `sum_k |<A x_t(omega), y_k>|^2 / ||A x_t(omega)||^2`.
    pub fn score_grid(&mut self, cols: &[Vec<Complex<T>>]) -> Vec<T> {
        let mut scores = vec![T::zero(); self.t * self.t];
        for y in cols {
            let c = self.a.matvec_adjoint(y);
            let corr = self.fft.adjoint_correlation(&c, self.n_1d);
            for (s, v) in scores.iter_mut().zip(&corr) {
                *s += v.norm_sqr();
            }
        }
        for (s, n) in scores.iter_mut().zip(&self.norm_grid) {
            *s = *s / *n;
        }
        scores
    }

    /// Grid frequency (wrapped into `(-pi, pi]`) of the peak score.
    pub fn detect_peak(&mut self, cols: &[Vec<Complex<T>>]) -> SpatialFrequency<T> {
        let scores = self.score_grid(cols);
        let mut best = 0usize;
        let mut best_score = T::neg_infinity();
        for (idx, &s) in scores.iter().enumerate() {
            if s > best_score {
                best_score = s;
                best = idx;
            }
        }
        let (wx, wz) = grid_frequency::<T>(best, self.t);
        SpatialFrequency::new(wx, wz).wrapped()
    }
}
