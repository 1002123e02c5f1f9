//! Compressive channel sounding: pseudorandom QPSK weight matrices, the
//! measured virtual channel, feedback payloads, and receive-weight selection.
//!
//! Protocol contract: the transmitter never learns the receive weights `B`
//! and the receiver never learns the transmit weights `A`; estimation
//! downstream consumes only the fed-back measurements and `A`.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::channel::ChannelMatrix;
use crate::fft::GridFft;
use crate::linalg::{hermitian_eig, CMatrix};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Error, PartialEq)]
pub enum SoundingError {
    #[error("weight matrix shape {got} does not match array elements {want}")]
    ShapeMismatch { got: usize, want: usize },
    #[error("SVD feedback rank {q} exceeds the number of measurement columns {l}")]
    RankTooLarge { q: usize, l: usize },
}

/// Compressive sounding weights: every entry is one of `{+1, -1, +j, -j}`.
/// Rows are virtual antennas, columns are physical array elements.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix<T> {
    entries: CMatrix<T>,
}

impl<T: Scalar> WeightMatrix<T> {
    /// Draw entries i.i.d. uniform over the four QPSK phases.
    pub fn generate(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        assert!(rows >= 1 && cols >= 1);
        let entries = CMatrix::from_fn(rows, cols, |_, _| qpsk_symbol(rng.random_range(0..4u8)));
        Self { entries }
    }

    /// Deterministic construction from a seed (ChaCha8 keyed by `seed`).
    pub fn from_seed(rows: usize, cols: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::generate(rows, cols, &mut rng)
    }

    pub fn entries(&self) -> &CMatrix<T> {
        &self.entries
    }

    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    pub fn cols(&self) -> usize {
        self.entries.cols()
    }
}

fn qpsk_symbol<T: Scalar>(idx: u8) -> Complex<T> {
    match idx & 3 {
        0 => Complex::new(T::one(), T::zero()),
        1 => Complex::new(T::zero(), T::one()),
        2 => Complex::new(-T::one(), T::zero()),
        _ => Complex::new(T::zero(), -T::one()),
    }
}

/// The measured virtual channel `Y` together with the measurement model
/// parameters it was produced under.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualChannel<T> {
    y: CMatrix<T>,
    per_element_power: T,
    noise_var: T,
}

impl<T: Scalar> VirtualChannel<T> {
    pub fn y(&self) -> &CMatrix<T> {
        &self.y
    }

    pub fn per_element_power(&self) -> T {
        self.per_element_power
    }

    pub fn noise_var(&self) -> T {
        self.noise_var
    }
}

/// Feedback strategy selected by the mobile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackMode {
    /// Send the whole `M x L` measurement matrix.
    Full,
    /// Send the strongest `Q` left singular vectors scaled by their singular
    /// values (an `M x Q` matrix).
    SvdTruncated(usize),
}

/// What the mobile sends back on the uplink.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackPayload<T> {
    pub mode: FeedbackMode,
    data: CMatrix<T>,
}

impl<T: Scalar> FeedbackPayload<T> {
    /// The fed-back snapshot matrix (`M x L` or `M x Q`).
    pub fn data(&self) -> &CMatrix<T> {
        &self.data
    }
}

/// Noiseless virtual channel `V = A * H * B^T`.
pub fn virtual_response<T: Scalar>(
    h: &ChannelMatrix<T>,
    a: &WeightMatrix<T>,
    b: &WeightMatrix<T>,
) -> Result<CMatrix<T>, SoundingError> {
    let nt = h.entries().rows();
    let nr = h.entries().cols();
    if a.cols() != nt {
        return Err(SoundingError::ShapeMismatch { got: a.cols(), want: nt });
    }
    if b.cols() != nr {
        return Err(SoundingError::ShapeMismatch { got: b.cols(), want: nr });
    }
    Ok(a.entries().mul(h.entries()).mul_transpose(b.entries()))
}

/// Measured virtual channel `Y = sqrt(P_e) * V + Z`, `Z` i.i.d. circular
/// complex Gaussian with per-entry variance `sigma2`.
pub fn measure<T: Scalar>(
    h: &ChannelMatrix<T>,
    a: &WeightMatrix<T>,
    b: &WeightMatrix<T>,
    pe_watts: T,
    sigma2_watts: T,
    rng: &mut impl Rng,
) -> Result<VirtualChannel<T>, SoundingError> {
    assert!(pe_watts >= T::zero() && sigma2_watts >= T::zero());
    let v = virtual_response(h, a, b)?;
    let amp = pe_watts.sqrt();
    let noise_amp = (sigma2_watts / lit(2.0)).sqrt();
    let y = CMatrix::from_fn(v.rows(), v.cols(), |i, j| {
        let z = Complex::new(
            noise_amp * lit::<T>(StandardNormal.sample(rng)),
            noise_amp * lit::<T>(StandardNormal.sample(rng)),
        );
        v.get(i, j) * amp + z
    });
    Ok(VirtualChannel { y, per_element_power: pe_watts, noise_var: sigma2_watts })
}

/// Build the uplink payload from the measured virtual channel.
///
/// `Full` passes `Y` through unchanged. `SvdTruncated(q)` returns
/// `D = [s_1 u_1 ... s_q u_q]`, computed as `Y v_i` from the top eigenvectors
/// `v_i` of the Gram matrix `Y^H Y` (so columns are orthogonal with norms
/// equal to the singular values, largest first).
pub fn make_feedback<T: Scalar>(
    v: &VirtualChannel<T>,
    mode: FeedbackMode,
) -> Result<FeedbackPayload<T>, SoundingError> {
    let y = v.y();
    match mode {
        FeedbackMode::Full => Ok(FeedbackPayload { mode, data: y.clone() }),
        FeedbackMode::SvdTruncated(q) => {
            let l = y.cols();
            if q > l || q == 0 {
                return Err(SoundingError::RankTooLarge { q, l });
            }
            let (_, vecs) = hermitian_eig(&y.gram());
            let data = CMatrix::from_fn(y.rows(), q, |i, j| {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in 0..l {
                    acc += y.get(i, k) * vecs.get(k, j);
                }
                acc
            });
            Ok(FeedbackPayload { mode, data })
        }
    }
}

/// Worst-case receive-isometry ratio of a candidate `B` over an oversampled
/// frequency grid: `min_omega ||B x_r(omega)||^2 / (L * n_r^2)`.
pub fn min_rx_grid_ratio<T: Scalar>(
    b: &WeightMatrix<T>,
    n_r_1d: usize,
    grid_oversampling: usize,
) -> T {
    assert_eq!(b.cols(), n_r_1d * n_r_1d);
    let t = grid_oversampling.max(1) * n_r_1d;
    let mut fft = GridFft::new(t);
    let mut energy = vec![T::zero(); fft.grid_len()];
    for i in 0..b.rows() {
        let grid = fft.row_projection(b.entries().row(i), n_r_1d);
        for (e, g) in energy.iter_mut().zip(&grid) {
            *e += g.norm_sqr();
        }
    }
    let nominal = T::from_usize(b.rows() * n_r_1d * n_r_1d).unwrap();
    energy
        .into_iter()
        .fold(T::infinity(), T::min)
        / nominal
}

/// Pick, among `candidates` random QPSK matrices, the `L x n_r^2` receive
/// weight matrix whose worst-case grid ratio is largest. Returns the winner
/// and its ratio.
pub fn select_rx_weights<T: Scalar>(
    n_r_1d: usize,
    l: usize,
    candidates: usize,
    grid_oversampling: usize,
    rng: &mut impl Rng,
) -> (WeightMatrix<T>, T) {
    assert!(l >= 1 && candidates >= 1);
    let mut best: Option<(WeightMatrix<T>, T)> = None;
    for _ in 0..candidates {
        let b = WeightMatrix::generate(l, n_r_1d * n_r_1d, rng);
        let ratio = min_rx_grid_ratio(&b, n_r_1d, grid_oversampling);
        if best.as_ref().map_or(true, |(_, r)| ratio > *r) {
            best = Some((b, ratio));
        }
    }
    best.expect("candidates >= 1")
}
