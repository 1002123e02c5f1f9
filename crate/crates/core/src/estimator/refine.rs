//! Local refinement of a single path against a set of measurement columns.
//!
//! Detection leaves the frequency on a discrete grid; refinement drives it to
//! the continuous ML estimate. The Newton iteration runs on the
//! gain-eliminated matched-energy objective
//! `J(omega) = sum_k |<x(omega), y_k>|^2 / ||x(omega)||^2`
//! (the same surface the grid search samples), whose curvature accounts for
//! the least-squares gain update that follows every frequency step. At LS
//! gains the gradient of `J` coincides with the gradient of the fixed-gain
//! residual cost `C(omega) = sum_k ||y_k - h_k x(omega)||^2`, so both
//! derivative sets are exposed and checkable against finite differences.

use num_complex::Complex;

use crate::geometry::SpatialFrequency;
use crate::linalg::{inner, norm_sq, CMatrix};
use crate::scalar::{lit, Scalar};

/// `x(omega) = A * x_t(omega)` together with its first and second partials
/// in `omega = (omega_x, omega_z)`.
pub(crate) struct SensedDerivatives<T> {
    pub x: Vec<Complex<T>>,
    pub d: [Vec<Complex<T>>; 2],
    pub dd: [[Vec<Complex<T>>; 2]; 2],
}

/// Apply `A` to the steering vector at `omega`.
pub(crate) fn sensed_steering<T: Scalar>(
    a: &CMatrix<T>,
    n_1d: usize,
    omega: SpatialFrequency<T>,
) -> Vec<Complex<T>> {
    let xt = crate::geometry::steering_vector(n_1d, omega);
    a.matvec(&xt)
}

pub(crate) fn sensed_derivatives<T: Scalar>(
    a: &CMatrix<T>,
    n_1d: usize,
    omega: SpatialFrequency<T>,
) -> SensedDerivatives<T> {
    let n2 = n_1d * n_1d;
    let xt = crate::geometry::steering_vector(n_1d, omega);
    let mut dx = Vec::with_capacity(n2);
    let mut dz = Vec::with_capacity(n2);
    let mut dxx = Vec::with_capacity(n2);
    let mut dxz = Vec::with_capacity(n2);
    let mut dzz = Vec::with_capacity(n2);
    for n in 0..n_1d {
        let fn_ = T::from_usize(n).unwrap();
        for m in 0..n_1d {
            let fm = T::from_usize(m).unwrap();
            let base = xt[n * n_1d + m];
            let jm = Complex::new(T::zero(), fm);
            let jn = Complex::new(T::zero(), fn_);
            dx.push(jm * base);
            dz.push(jn * base);
            dxx.push(Complex::new(-fm * fm, T::zero()) * base);
            dxz.push(Complex::new(-fm * fn_, T::zero()) * base);
            dzz.push(Complex::new(-fn_ * fn_, T::zero()) * base);
        }
    }
    SensedDerivatives {
        x: a.matvec(&xt),
        d: [a.matvec(&dx), a.matvec(&dz)],
        dd: [
            [a.matvec(&dxx), a.matvec(&dxz)],
            [a.matvec(&dxz), a.matvec(&dzz)],
        ],
    }
}

/// Fixed-gain residual cost `C(omega) = sum_k ||y_k - h_k x(omega)||^2` with
/// its analytic gradient and Hessian in `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostTerms<T> {
    pub cost: T,
    pub gradient: [T; 2],
    pub hessian: [[T; 2]; 2],
}

/// Evaluate [`CostTerms`] for measurement columns `y` (one column per
/// snapshot), sensing weights `a` and fixed gains `h_k`.
pub fn cost_terms<T: Scalar>(
    y: &CMatrix<T>,
    a: &CMatrix<T>,
    n_1d: usize,
    omega: SpatialFrequency<T>,
    gains: &[Complex<T>],
) -> CostTerms<T> {
    assert_eq!(y.cols(), gains.len(), "one gain per measurement column");
    let sd = sensed_derivatives(a, n_1d, omega);
    let two = lit::<T>(2.0);
    let mut cost = T::zero();
    let mut grad = [T::zero(); 2];
    let mut hess = [[T::zero(); 2]; 2];
    for (k, &hk) in gains.iter().enumerate() {
        let yk = y.col(k);
        let r: Vec<Complex<T>> =
            yk.iter().zip(&sd.x).map(|(yv, xv)| *yv - hk * *xv).collect();
        cost += norm_sq(&r);
        for i in 0..2 {
            grad[i] -= two * (inner(&r, &sd.d[i]) * hk).re;
            for j in 0..2 {
                let a1 = (inner(&r, &sd.dd[i][j]) * hk).re;
                let a2 = hk.norm_sqr() * inner(&sd.d[i], &sd.d[j]).re;
                hess[i][j] -= two * (a1 - a2);
            }
        }
    }
    CostTerms { cost, gradient: grad, hessian: hess }
}

/// Matched-energy objective `J(omega)` with derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms<T> {
    pub value: T,
    pub gradient: [T; 2],
    pub hessian: [[T; 2]; 2],
}

pub(crate) fn objective_value<T: Scalar>(cols: &[Vec<Complex<T>>], x: &[Complex<T>]) -> T {
    let n = norm_sq(x);
    let mut s = T::zero();
    for y in cols {
        s += inner(x, y).norm_sqr();
    }
    s / n
}

/// Evaluate `J(omega)` and its analytic gradient/Hessian.
pub fn objective_terms<T: Scalar>(
    y: &CMatrix<T>,
    a: &CMatrix<T>,
    n_1d: usize,
    omega: SpatialFrequency<T>,
) -> ObjectiveTerms<T> {
    let cols: Vec<Vec<Complex<T>>> = (0..y.cols()).map(|k| y.col(k)).collect();
    objective_terms_cols(&cols, a, n_1d, omega)
}

pub(crate) fn objective_terms_cols<T: Scalar>(
    cols: &[Vec<Complex<T>>],
    a: &CMatrix<T>,
    n_1d: usize,
    omega: SpatialFrequency<T>,
) -> ObjectiveTerms<T> {
    let sd = sensed_derivatives(a, n_1d, omega);
    let two = lit::<T>(2.0);

    let n = norm_sq(&sd.x);
    let mut ni = [T::zero(); 2];
    let mut nij = [[T::zero(); 2]; 2];
    for i in 0..2 {
        ni[i] = two * inner(&sd.d[i], &sd.x).re;
        for j in 0..2 {
            nij[i][j] = two * (inner(&sd.dd[i][j], &sd.x).re + inner(&sd.d[i], &sd.d[j]).re);
        }
    }

    let mut s = T::zero();
    let mut si = [T::zero(); 2];
    let mut sij = [[T::zero(); 2]; 2];
    for y in cols {
        let c = inner(&sd.x, y);
        let ci = [inner(&sd.d[0], y), inner(&sd.d[1], y)];
        s += c.norm_sqr();
        for i in 0..2 {
            si[i] += two * (c.conj() * ci[i]).re;
            for j in 0..2 {
                let cij = inner(&sd.dd[i][j], y);
                sij[i][j] += two * ((ci[j].conj() * ci[i]).re + (c.conj() * cij).re);
            }
        }
    }

    let value = s / n;
    let n2 = n * n;
    let mut gradient = [T::zero(); 2];
    let mut hessian = [[T::zero(); 2]; 2];
    for i in 0..2 {
        gradient[i] = si[i] / n - s * ni[i] / n2;
        for j in 0..2 {
            hessian[i][j] = sij[i][j] / n - (si[i] * ni[j] + si[j] * ni[i]) / n2
                - s * nij[i][j] / n2
                + two * s * ni[i] * ni[j] / (n2 * n);
        }
    }
    ObjectiveTerms { value, gradient, hessian }
}

/// Least-squares gains at `omega`: `h_k = <x, y_k> / ||x||^2`.
pub(crate) fn ls_gains<T: Scalar>(cols: &[Vec<Complex<T>>], x: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = norm_sq(x);
    cols.iter().map(|y| inner(x, y) / n).collect()
}

/// Newton-refine `omega` against the given measurement columns. Each
/// iteration takes one frequency step (Newton when the Hessian is negative
/// definite on the matched-energy surface, otherwise a backtracked gradient
/// step) and never decreases `J`. Returns the refined frequency.
pub(crate) fn refine_omega<T: Scalar>(
    cols: &[Vec<Complex<T>>],
    a: &CMatrix<T>,
    n_1d: usize,
    mut omega: SpatialFrequency<T>,
    iters: usize,
) -> SpatialFrequency<T> {
    let grid_cell = T::TAU() / T::from_usize(n_1d).unwrap();
    let step_floor = lit::<T>(1e-13);
    for _ in 0..iters {
        let terms = objective_terms_cols(cols, a, n_1d, omega);
        let g = terms.gradient;
        let h = terms.hessian;
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let negative_definite = h[0][0] < T::zero() && det > T::zero();
        let (mut sx, mut sz) = if negative_definite {
            // full Newton step: omega - H^{-1} g
            let inv_det = T::one() / det;
            (
                -(h[1][1] * g[0] - h[0][1] * g[1]) * inv_det,
                -(h[0][0] * g[1] - h[1][0] * g[0]) * inv_det,
            )
        } else {
            // ascent along the gradient, scaled to a fraction of a grid cell
            let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
            if gn == T::zero() {
                break;
            }
            let scale = grid_cell * lit::<T>(0.25) / gn;
            (g[0] * scale, g[1] * scale)
        };
        if (sx * sx + sz * sz).sqrt() < step_floor {
            break;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let cand = SpatialFrequency::new(omega.omega_x + sx, omega.omega_z + sz);
            let x = sensed_steering(a, n_1d, cand);
            if objective_value(cols, &x) >= terms.value {
                omega = cand;
                accepted = true;
                break;
            }
            sx = sx / lit(2.0);
            sz = sz / lit(2.0);
        }
        if !accepted {
            break;
        }
    }
    omega
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::steering_vector;
    use crate::sounding::WeightMatrix;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn synth_cols(
        a: &CMatrix<f64>,
        n: usize,
        omega: SpatialFrequency<f64>,
        gains: &[Complex64],
    ) -> Vec<Vec<Complex64>> {
        let x = a.matvec(&steering_vector(n, omega));
        gains.iter().map(|h| x.iter().map(|v| v * h).collect()).collect()
    }

    fn cols_matrix(cols: &[Vec<Complex64>]) -> CMatrix<f64> {
        CMatrix::from_fn(cols[0].len(), cols.len(), |i, k| cols[k][i])
    }

    #[test]
    fn cost_gradient_hessian_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 8;
        let a = WeightMatrix::<f64>::from_seed(24, 64, 77).entries().clone();
        for _ in 0..5 {
            let omega_true = SpatialFrequency::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            );
            let gains: Vec<Complex64> = (0..6)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let cols = synth_cols(&a, n, omega_true, &gains);
            let y = cols_matrix(&cols);
            let omega = SpatialFrequency::new(
                omega_true.omega_x + rng.random_range(-0.05..0.05),
                omega_true.omega_z + rng.random_range(-0.05..0.05),
            );
            let terms = cost_terms(&y, &a, n, omega, &gains);

            let eps = 1e-6;
            let c_at = |wx: f64, wz: f64| {
                cost_terms(&y, &a, n, SpatialFrequency::new(wx, wz), &gains).cost
            };
            let (wx, wz) = (omega.omega_x, omega.omega_z);
            let g_fd = [
                (c_at(wx + eps, wz) - c_at(wx - eps, wz)) / (2.0 * eps),
                (c_at(wx, wz + eps) - c_at(wx, wz - eps)) / (2.0 * eps),
            ];
            for i in 0..2 {
                let rel = (terms.gradient[i] - g_fd[i]).abs() / g_fd[i].abs().max(1e-9);
                assert!(rel < 1e-5, "gradient[{i}] {} vs fd {}", terms.gradient[i], g_fd[i]);
            }
            let h_fd = [
                [
                    (c_at(wx + eps, wz) - 2.0 * c_at(wx, wz) + c_at(wx - eps, wz)) / (eps * eps),
                    (c_at(wx + eps, wz + eps) - c_at(wx + eps, wz - eps) - c_at(wx - eps, wz + eps)
                        + c_at(wx - eps, wz - eps))
                        / (4.0 * eps * eps),
                ],
                [
                    (c_at(wx + eps, wz + eps) - c_at(wx + eps, wz - eps) - c_at(wx - eps, wz + eps)
                        + c_at(wx - eps, wz - eps))
                        / (4.0 * eps * eps),
                    (c_at(wx, wz + eps) - 2.0 * c_at(wx, wz) + c_at(wx, wz - eps)) / (eps * eps),
                ],
            ];
            for i in 0..2 {
                for j in 0..2 {
                    let rel = (terms.hessian[i][j] - h_fd[i][j]).abs() / h_fd[i][j].abs().max(1e-9);
                    assert!(rel < 1e-4, "hessian[{i}][{j}] rel err {rel}");
                }
            }
        }
    }

    #[test]
    fn objective_gradient_hessian_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let n = 8;
        let a = WeightMatrix::<f64>::from_seed(24, 64, 78).entries().clone();
        let omega_true = SpatialFrequency::new(0.9, -0.4);
        let gains: Vec<Complex64> =
            (0..6).map(|_| Complex64::new(rng.random::<f64>() - 0.5, 0.3)).collect();
        let cols = synth_cols(&a, n, omega_true, &gains);
        let y = cols_matrix(&cols);
        let omega = SpatialFrequency::new(0.93, -0.45);
        let terms = objective_terms(&y, &a, n, omega);
        let eps = 1e-6;
        let j_at = |wx: f64, wz: f64| objective_terms(&y, &a, n, SpatialFrequency::new(wx, wz)).value;
        let (wx, wz) = (omega.omega_x, omega.omega_z);
        let g_fd = [
            (j_at(wx + eps, wz) - j_at(wx - eps, wz)) / (2.0 * eps),
            (j_at(wx, wz + eps) - j_at(wx, wz - eps)) / (2.0 * eps),
        ];
        for i in 0..2 {
            let rel = (terms.gradient[i] - g_fd[i]).abs() / g_fd[i].abs().max(1e-9);
            assert!(rel < 1e-5, "objective gradient[{i}] rel {rel}");
        }
        let hxx_fd = (j_at(wx + eps, wz) - 2.0 * j_at(wx, wz) + j_at(wx - eps, wz)) / (eps * eps);
        let rel = (terms.hessian[0][0] - hxx_fd).abs() / hxx_fd.abs().max(1e-9);
        assert!(rel < 1e-4, "objective hessian[0][0] rel {rel}");
    }

    #[test]
    fn stationary_at_truth() {
        // started at the true omega on noiseless data: gradient ~ 0, no move
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let n = 8;
        let a = WeightMatrix::<f64>::from_seed(24, 64, 79).entries().clone();
        let omega = SpatialFrequency::new(1.1, 0.6);
        let gains: Vec<Complex64> =
            (0..6).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>())).collect();
        let cols = synth_cols(&a, n, omega, &gains);
        let y = cols_matrix(&cols);
        let ct = cost_terms(&y, &a, n, omega, &ls_gains(&cols, &a.matvec(&steering_vector(n, omega))));
        let scale = ct.hessian[0][0].abs().max(ct.hessian[1][1].abs());
        assert!(ct.gradient[0].abs() < 1e-9 * scale);
        assert!(ct.gradient[1].abs() < 1e-9 * scale);
        let refined = refine_omega(&cols, &a, n, omega, 5);
        assert!(refined.linf_dist(omega) < 1e-9);
    }

    #[test]
    fn off_grid_refinement_converges() {
        // starts within half a detection cell, reaches < 1e-6 rad in <= 10 iters
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let n = 8;
        let a = WeightMatrix::<f64>::from_seed(24, 64, 80).entries().clone();
        let cell = 2.0 * std::f64::consts::PI / (4.0 * n as f64);
        for trial in 0..50 {
            let omega = SpatialFrequency::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            );
            let gains: Vec<Complex64> = (0..6)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let cols = synth_cols(&a, n, omega, &gains);
            let start = SpatialFrequency::new(
                omega.omega_x + rng.random_range(-0.5..0.5) * cell,
                omega.omega_z + rng.random_range(-0.5..0.5) * cell,
            );
            let refined = refine_omega(&cols, &a, n, start, 10);
            assert!(
                refined.linf_dist(omega) < 1e-6,
                "trial {trial}: err {}",
                refined.linf_dist(omega)
            );
        }
    }

    #[test]
    fn ls_gains_satisfy_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let n = 8;
        let a = WeightMatrix::<f64>::from_seed(24, 64, 81).entries().clone();
        let omega = SpatialFrequency::new(-0.7, 2.1);
        let x = a.matvec(&steering_vector(n, omega));
        let cols: Vec<Vec<Complex64>> = (0..4)
            .map(|_| {
                (0..24)
                    .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                    .collect()
            })
            .collect();
        let gains = ls_gains(&cols, &x);
        for (y, h) in cols.iter().zip(&gains) {
            let r: Vec<Complex64> = y.iter().zip(&x).map(|(yv, xv)| yv - h * xv).collect();
            assert!(inner(&x, &r).norm() < 1e-10 * norm_sq(y).sqrt());
        }
    }
}
