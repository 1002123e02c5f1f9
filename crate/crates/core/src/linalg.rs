//! Dense complex matrices and the two small factorizations the library needs:
//! a cyclic-Jacobi Hermitian eigensolver (for rank-truncated feedback of the
//! measurement matrix) and a Cholesky solve (for joint gain re-initialization
//! when tracking). Matrices here are tiny (at most a few thousand entries), so
//! a self-contained row-major implementation beats pulling in a linear-algebra
//! stack.

use num_complex::Complex;

use crate::scalar::{lit, Scalar};

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<Complex<T>>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn frobenius_sq(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `self * other`
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch in mul");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.norm_sqr() == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// `self * other^T` (plain transpose, no conjugation).
    pub fn mul_transpose(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "shape mismatch in mul_transpose");
        Self::from_fn(self.rows, other.rows, |i, j| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in 0..self.cols {
                acc += self.get(i, k) * other.get(j, k);
            }
            acc
        })
    }

    /// `self^H * other`.
    pub fn adjoint_mul(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "shape mismatch in adjoint_mul");
        Self::from_fn(self.cols, other.cols, |i, j| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in 0..self.rows {
                acc += self.get(k, i).conj() * other.get(k, j);
            }
            acc
        })
    }

    /// `self^H * self` (Gram matrix), Hermitian by construction.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for j in 0..n {
            for k in j..n {
                let mut acc = Complex::new(T::zero(), T::zero());
                for i in 0..self.rows {
                    acc += self.get(i, j).conj() * self.get(i, k);
                }
                g.set(j, k, acc);
                g.set(k, j, acc.conj());
            }
        }
        g
    }

    /// `self * v` for a column vector `v`.
    pub fn matvec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.cols, v.len(), "shape mismatch in matvec");
        (0..self.rows)
            .map(|i| {
                let mut acc = Complex::new(T::zero(), T::zero());
                for (a, x) in self.row(i).iter().zip(v) {
                    acc += *a * *x;
                }
                acc
            })
            .collect()
    }

    /// `self^H * v` for a column vector `v` of length `rows`.
    pub fn matvec_adjoint(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.rows, v.len(), "shape mismatch in matvec_adjoint");
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * vi;
            }
        }
        out
    }
}

/// `x^H y`
pub fn inner<T: Scalar>(x: &[Complex<T>], y: &[Complex<T>]) -> Complex<T> {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = Complex::new(T::zero(), T::zero());
    for (a, b) in x.iter().zip(y) {
        acc += a.conj() * *b;
    }
    acc
}

pub fn norm_sq<T: Scalar>(x: &[Complex<T>]) -> T {
    x.iter().map(|z| z.norm_sqr()).sum()
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` sorted by non-increasing eigenvalue;
/// eigenvectors are the columns of the returned matrix.
pub fn hermitian_eig<T: Scalar>(a: &CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    assert_eq!(a.rows(), a.cols(), "hermitian_eig needs a square matrix");
    let n = a.rows();
    let mut m = a.clone();
    let mut v = CMatrix::from_fn(n, n, |i, j| {
        Complex::new(if i == j { T::one() } else { T::zero() }, T::zero())
    });
    let scale = m.frobenius_sq().sqrt().max(T::min_positive_value());
    let tol = scale * lit::<T>(1e-14).max(T::epsilon() * lit(16.0));

    for _sweep in 0..40 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + m.get(p, q).norm();
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let beta = m.get(p, q);
                let b = beta.norm();
                if b <= tol * lit(1e-2) {
                    continue;
                }
                let phase = beta / Complex::new(b, T::zero()); // e^{i phi}
                let alpha = m.get(p, p).re;
                let gamma = m.get(q, q).re;
                let tau = (gamma - alpha) / (lit::<T>(2.0) * b);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                // Unitary U restricted to (p,q):
                //   u_pp = c,            u_pq = s
                //   u_qp = -s e^{-iphi}, u_qq = c e^{-iphi}
                let e = phase.conj();
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = m.get(k, p);
                    let akq = m.get(k, q);
                    let np = akp * c - akq * e * s;
                    let nq = akp * s + akq * e * c;
                    m.set(k, p, np);
                    m.set(p, k, np.conj());
                    m.set(k, q, nq);
                    m.set(q, k, nq.conj());
                }
                let zero = Complex::new(T::zero(), T::zero());
                m.set(p, p, Complex::new(alpha - t * b, T::zero()));
                m.set(q, q, Complex::new(gamma + t * b, T::zero()));
                m.set(p, q, zero);
                m.set(q, p, zero);
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp * c - vkq * e * s);
                    v.set(k, q, vkp * s + vkq * e * c);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m.get(j, j)
            .re
            .partial_cmp(&m.get(i, i).re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigvals = order.iter().map(|&i| m.get(i, i).re).collect();
    let eigvecs = CMatrix::from_fn(n, n, |i, j| v.get(i, order[j]));
    (eigvals, eigvecs)
}

/// Solve `A X = B` for Hermitian positive-definite `A` via Cholesky.
///
/// Returns `None` when the factorization breaks down (non-PD input); callers
/// retry with a diagonal ridge.
pub fn cholesky_solve<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> Option<CMatrix<T>> {
    assert_eq!(a.rows(), a.cols());
    assert_eq!(a.rows(), b.rows());
    let n = a.rows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j).re;
        for k in 0..j {
            d = d - l.get(j, k).norm_sqr();
        }
        if d <= T::zero() || !d.is_finite() {
            return None;
        }
        let dj = d.sqrt();
        l.set(j, j, Complex::new(dj, T::zero()));
        for i in (j + 1)..n {
            let mut acc = a.get(i, j);
            for k in 0..j {
                acc -= l.get(i, k) * l.get(j, k).conj();
            }
            l.set(i, j, acc / dj);
        }
    }
    // L y = b (forward), L^H x = y (backward), per right-hand-side column.
    let mut x = b.clone();
    for col in 0..b.cols() {
        for i in 0..n {
            let mut acc = x.get(i, col);
            for k in 0..i {
                acc -= l.get(i, k) * x.get(k, col);
            }
            x.set(i, col, acc / l.get(i, i).re);
        }
        for i in (0..n).rev() {
            let mut acc = x.get(i, col);
            for k in (i + 1)..n {
                acc -= l.get(k, i).conj() * x.get(k, col);
            }
            x.set(i, col, acc / l.get(i, i).re);
        }
    }
    Some(x)
}

impl<T: Scalar> std::ops::Div<T> for CMatrix<T> {
    type Output = CMatrix<T>;
    fn div(mut self, rhs: T) -> Self {
        for z in &mut self.data {
            *z = Complex::new(z.re / rhs, z.im / rhs);
        }
        self
    }
}
