//! Zero-padded 2D DFT evaluation of array responses on oversampled frequency
//! grids.
//!
//! Grid convention used everywhere: a `t x t` grid indexed by `q * t + p`
//! holds frequency `omega = (2*pi*p/t, 2*pi*q/t)`, with `p` along the x axis
//! (fast element index `m`) and `q` along the z axis (slow element index `n`).

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::scalar::Scalar;

pub(crate) struct GridFft<T: Scalar> {
    t: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Scalar> GridFft<T> {
    pub fn new(t: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft(t, FftDirection::Forward);
        let inverse = planner.plan_fft(t, FftDirection::Inverse);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            t,
            forward,
            inverse,
            scratch: vec![Complex::new(T::zero(), T::zero()); scratch_len],
        }
    }

    pub fn grid_len(&self) -> usize {
        self.t * self.t
    }

    fn fft2d(&mut self, data: &mut [Complex<T>], direction: FftDirection) {
        let t = self.t;
        debug_assert_eq!(data.len(), t * t);
        let plan = match direction {
            FftDirection::Forward => &self.forward,
            FftDirection::Inverse => &self.inverse,
        };
        for row in data.chunks_exact_mut(t) {
            plan.process_with_scratch(row, &mut self.scratch);
        }
        transpose_square(data, t);
        for row in data.chunks_exact_mut(t) {
            plan.process_with_scratch(row, &mut self.scratch);
        }
        transpose_square(data, t);
    }

    /// Evaluate `w^T x(omega)` on the full grid, where `w` is a length
    /// `n_1d^2` weight vector (element order: m fast, n slow) and `x` the 2D
    /// array response. Entry `q*t+p` of the result is
    /// `sum_{m,n} w[n*n_1d+m] * exp(+j*2*pi*(p*m + q*n)/t)`.
    pub fn row_projection(&mut self, w: &[Complex<T>], n_1d: usize) -> Vec<Complex<T>> {
        debug_assert_eq!(w.len(), n_1d * n_1d);
        let t = self.t;
        let mut buf = vec![Complex::new(T::zero(), T::zero()); t * t];
        for n in 0..n_1d {
            buf[n * t..n * t + n_1d].copy_from_slice(&w[n * n_1d..(n + 1) * n_1d]);
        }
        self.fft2d(&mut buf, FftDirection::Inverse);
        buf
    }

    /// Evaluate `<x(omega), y>` (conjugate-linear in `x`) on the full grid
    /// from the adjoint-combined data `c` of length `n_1d^2`. Entry `q*t+p`
    /// is `sum_{m,n} c[n*n_1d+m] * exp(-j*2*pi*(p*m + q*n)/t)`.
    pub fn adjoint_correlation(&mut self, c: &[Complex<T>], n_1d: usize) -> Vec<Complex<T>> {
        debug_assert_eq!(c.len(), n_1d * n_1d);
        let t = self.t;
        let mut buf = vec![Complex::new(T::zero(), T::zero()); t * t];
        for n in 0..n_1d {
            buf[n * t..n * t + n_1d].copy_from_slice(&c[n * n_1d..(n + 1) * n_1d]);
        }
        self.fft2d(&mut buf, FftDirection::Forward);
        buf
    }
}

fn transpose_square<T: Copy>(data: &mut [T], t: usize) {
    for i in 0..t {
        for j in (i + 1)..t {
            data.swap(i * t + j, j * t + i);
        }
    }
}

/// Frequency at grid index `q*t+p`, as `(omega_x, omega_z)`.
pub(crate) fn grid_frequency<T: Scalar>(idx: usize, t: usize) -> (T, T) {
    let p = idx % t;
    let q = idx / t;
    let step = T::TAU() / T::from_usize(t).unwrap();
    (step * T::from_usize(p).unwrap(), step * T::from_usize(q).unwrap())
}
