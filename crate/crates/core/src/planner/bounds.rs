//! Frequency-estimation bounds for a 2D sinusoid in noise, and the threshold
//! SNR at which the Ziv-Zakai bound collapses onto the Cramer-Rao bound.

use super::PlannerError;
use crate::scalar::{lit, Scalar};

/// Inputs for the bound evaluations: array side `n_1d` and the total
/// signal-to-noise ratio `||x||^2 / sigma^2` (linear).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundQuery<T> {
    pub n_1d: usize,
    pub snr: T,
}

impl<T: Scalar> BoundQuery<T> {
    fn validate(&self) -> Result<(), PlannerError> {
        if self.n_1d < 2 {
            return Err(PlannerError::ArraySideTooSmall);
        }
        if !(self.snr > T::zero()) {
            return Err(PlannerError::NonPositiveSnr);
        }
        Ok(())
    }
}

/// Gaussian tail probability `Q(x)`, evaluated in double precision through
/// the complementary error function.
pub fn q_function<T: Scalar>(x: T) -> T {
    let v = 0.5 * libm::erfc(x.to_f64().unwrap() / std::f64::consts::SQRT_2);
    lit(v)
}

/// Cramer-Rao bound on the variance of one spatial-frequency component:
/// `6 / (snr * (n^2 - 1))`.
pub fn crb_freq<T: Scalar>(q: &BoundQuery<T>) -> Result<T, PlannerError> {
    q.validate()?;
    let n2 = T::from_usize(q.n_1d * q.n_1d).unwrap();
    Ok(lit::<T>(6.0) / (q.snr * (n2 - T::one())))
}

/// Ziv-Zakai bound with periodic distortion, uniform prior over `[0, 2*pi)`:
/// `Z = int_0^pi Q(sqrt(snr * (1 - |D_n(h)|))) * h dh`, where `D_n` is the
/// normalized Dirichlet kernel `sin(n*h/2) / (n*sin(h/2))`.
///
/// The integral is evaluated by adaptive Simpson quadrature on subintervals
/// split at the kernel's zeros (relative tolerance ~1e-8; the `h -> 0` limit
/// of the kernel is 1, so the integrand has no singularity). Use `f64` for
/// bound evaluations; `f32` cannot resolve the quadrature tolerances.
pub fn zzb_freq<T: Scalar>(q: &BoundQuery<T>) -> Result<T, PlannerError> {
    q.validate()?;
    let n = q.n_1d;
    let snr = q.snr;
    let integrand = |h: T| -> T {
        let d = dirichlet_magnitude(n, h);
        q_function((snr * (T::one() - d)).max(T::zero()).sqrt()) * h
    };

    // split [0, pi] at the Dirichlet zeros h = 2*pi*k/n
    let mut points: Vec<T> = vec![T::zero()];
    let mut k = 1usize;
    loop {
        let z = T::TAU() * T::from_usize(k).unwrap() / T::from_usize(n).unwrap();
        if z >= T::PI() - lit(1e-12) {
            break;
        }
        points.push(z);
        k += 1;
    }
    points.push(T::PI());

    // coarse pass fixes the absolute tolerance budget per subinterval; the
    // CRB floors the scale because at high SNR all the mass sits in a spike
    // near h = 0 that the three-point pass cannot see
    let crb = lit::<T>(6.0) / (snr * (T::from_usize(n * n).unwrap() - T::one()));
    let mut coarse = T::zero();
    for w in points.windows(2) {
        coarse = coarse + simpson(&integrand, w[0], w[1]);
    }
    let eps_total = coarse.abs().max(crb) * lit(1e-8);
    let eps_each = eps_total / T::from_usize(points.len() - 1).unwrap();

    let mut total = T::zero();
    for w in points.windows(2) {
        total = total + adaptive_simpson(&integrand, w[0], w[1], eps_each, 28);
    }
    Ok(total)
}

fn dirichlet_magnitude<T: Scalar>(n: usize, h: T) -> T {
    let s = (h / lit(2.0)).sin();
    if s.abs() < lit(1e-14) {
        return T::one();
    }
    let nf = T::from_usize(n).unwrap();
    ((nf * h / lit(2.0)).sin() / (nf * s)).abs()
}

fn simpson<T: Scalar>(f: &impl Fn(T) -> T, a: T, b: T) -> T {
    let m = (a + b) / lit(2.0);
    (b - a) / lit::<T>(6.0) * (f(a) + lit::<T>(4.0) * f(m) + f(b))
}

fn adaptive_simpson<T: Scalar>(f: &impl Fn(T) -> T, a: T, b: T, eps: T, depth: usize) -> T {
    let whole = simpson(f, a, b);
    adaptive_step(f, a, b, whole, eps, depth)
}

fn adaptive_step<T: Scalar>(
    f: &impl Fn(T) -> T,
    a: T,
    b: T,
    whole: T,
    eps: T,
    depth: usize,
) -> T {
    let m = (a + b) / lit(2.0);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= lit::<T>(15.0) * eps {
        return left + right + diff / lit(15.0);
    }
    let half = eps / lit(2.0);
    adaptive_step(f, a, m, left, half, depth - 1) + adaptive_step(f, m, b, right, half, depth - 1)
}

/// Smallest SNR (dB, resolved to 0.01 dB) at which the ZZB sits within
/// 0.1 dB of the CRB — the gate above which frequency estimation is
/// reliable. The search sweeps 0.5 dB steps from the high side to bracket
/// the last crossing, then bisects.
pub fn threshold_snr<T: Scalar>(n_1d: usize) -> Result<T, PlannerError> {
    if n_1d < 2 {
        return Err(PlannerError::ArraySideTooSmall);
    }
    let ratio_db = |snr_db: T| -> T {
        let snr = lit::<T>(10.0).powf(snr_db / lit(10.0));
        let q = BoundQuery { n_1d, snr };
        let z = zzb_freq(&q).expect("validated");
        let c = crb_freq(&q).expect("validated");
        lit::<T>(10.0) * (z / c).log10()
    };
    let gate = lit::<T>(0.1);
    // coarse sweep: the ratio exceeds the gate in the threshold region and
    // decays toward zero afterwards; find the last violation
    let mut last_above: Option<T> = None;
    let mut snr_db = T::zero();
    while snr_db <= lit(30.0) {
        if ratio_db(snr_db) > gate {
            last_above = Some(snr_db);
        }
        snr_db = snr_db + lit(0.5);
    }
    let mut lo = last_above.expect("threshold must lie in (0, 30) dB");
    let mut hi = lo + lit(0.5);
    while hi - lo > lit(0.005) {
        let mid = (lo + hi) / lit(2.0);
        if ratio_db(mid) > gate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crb_arithmetic_and_scaling() {
        // n = 2 has n^2 - 1 = 3: C = 6 / (1 * 3) = 2
        let c: f64 = crb_freq(&BoundQuery { n_1d: 2, snr: 1.0 }).unwrap();
        assert!((c - 2.0).abs() < 1e-15);
        // doubling the SNR halves the bound exactly
        let c1: f64 = crb_freq(&BoundQuery { n_1d: 8, snr: 3.0 }).unwrap();
        let c2 = crb_freq(&BoundQuery { n_1d: 8, snr: 6.0 }).unwrap();
        assert!((c1 / c2 - 2.0).abs() < 1e-14);
        assert_eq!(
            crb_freq(&BoundQuery { n_1d: 1, snr: 1.0 }),
            Err(PlannerError::ArraySideTooSmall)
        );
        assert_eq!(
            crb_freq(&BoundQuery { n_1d: 4, snr: 0.0 }),
            Err(PlannerError::NonPositiveSnr)
        );
    }

    #[test]
    fn q_function_values() {
        assert!((q_function(0.0_f64) - 0.5).abs() < 1e-15);
        // Q(1.6448536269514722) = 0.05
        assert!((q_function(1.6448536269514722_f64) - 0.05).abs() < 1e-12);
        assert!(q_function(8.0_f64) < 1e-15);
    }

    #[test]
    fn zzb_low_snr_limit_is_prior_variance() {
        // snr -> 0: Q(.) -> 1/2 and Z -> pi^2 / 4
        let z = zzb_freq(&BoundQuery { n_1d: 8, snr: 1e-12 }).unwrap();
        let want = std::f64::consts::PI.powi(2) / 4.0;
        assert!((z - want).abs() / want < 1e-6, "{z} vs {want}");
    }

    #[test]
    fn zzb_quadrature_golden() {
        // frozen from an independent high-accuracy quadrature of the same
        // integral (scipy.integrate.quad, split at the kernel zeros)
        let z: f64 = zzb_freq(&BoundQuery { n_1d: 8, snr: 1.0 }).unwrap();
        assert!((z - 0.8658648074967745).abs() / 0.8658648074967745 < 1e-6, "{z}");
    }

    #[test]
    fn zzb_dominates_crb_and_decreases() {
        let mut prev = f64::INFINITY;
        for snr_db in [-10.0, 0.0, 6.0, 10.0, 13.0, 16.0, 20.0, 25.0] {
            let snr = 10f64.powf(snr_db / 10.0);
            let q = BoundQuery { n_1d: 8, snr };
            let z = zzb_freq(&q).unwrap();
            let c = crb_freq(&q).unwrap();
            assert!(z >= c * (1.0 - 1e-9), "snr {snr_db} dB: z = {z}, c = {c}");
            assert!(z <= prev * (1.0 + 1e-12), "must be non-increasing in SNR");
            prev = z;
        }
        // far above threshold the two coincide
        let snr = 10f64.powf(2.5);
        let q = BoundQuery { n_1d: 8, snr };
        let ratio = zzb_freq(&q).unwrap() / crb_freq(&q).unwrap();
        assert!(ratio > 1.0 - 1e-9 && ratio < 1.01, "ratio {ratio}");
    }

    #[test]
    fn threshold_snr_eight_by_eight() {
        let th: f64 = threshold_snr(8).unwrap();
        assert!((th - 16.04).abs() < 0.15, "threshold {th}");
    }
}
