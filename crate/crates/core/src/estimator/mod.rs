//! Sequential maximum-likelihood estimation of transmit spatial frequencies
//! from compressive measurements.
//!
//! One call processes one sounding round: detect the strongest remaining
//! sinusoid on an oversampled FFT grid, Newton-refine it, re-refine every
//! estimated path round-robin, and keep adding paths while each addition
//! buys a residual-energy reduction above the stopping threshold
//! `tau = coeff * sigma^2 * log(20 * n_t)`. Tracking sounding rounds reuses
//! the previous round's frequencies: gains are re-initialized by a joint
//! least-squares solve, every path is refined, stale paths are deleted by the
//! same threshold test, and only then does the search for new paths resume.
//!
//! The estimator sees only the fed-back snapshot matrix (`Y` or its
//! SVD-truncated form) and the transmit weights `A`; receive weights never
//! appear here.

mod refine;
mod search;

pub use refine::{cost_terms, objective_terms, CostTerms, ObjectiveTerms};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::fft::grid_frequency;
use crate::geometry::SpatialFrequency;
use crate::linalg::{cholesky_solve, norm_sq, CMatrix};
use crate::scalar::{lit, Scalar};
use crate::sounding::WeightMatrix;

use refine::{ls_gains, refine_omega, sensed_steering};
use search::Sensing;

/// One estimated path: its transmit spatial frequency and the per-column
/// composite gains.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEstimate<T> {
    pub omega: SpatialFrequency<T>,
    pub gains: Vec<Complex<T>>,
}

impl<T: Scalar> PathEstimate<T> {
    /// Total gain energy `sum_k |h_k|^2`.
    pub fn energy(&self) -> T {
        self.gains.iter().map(|h| h.norm_sqr()).sum()
    }
}

/// Estimated path power `|g|^2 = sum_k |h_k|^2 / (l * n_r^2 * P_e)`.
pub fn path_power<T: Scalar>(est: &PathEstimate<T>, pe: T, n_r_1d: usize, l: usize) -> T {
    let denom = T::from_usize(l * n_r_1d * n_r_1d).unwrap() * pe;
    est.energy() / denom
}

/// The estimator's working set of paths, ordered by detection.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EstimateSet<T> {
    paths: Vec<PathEstimate<T>>,
}

impl<T: Scalar> EstimateSet<T> {
    pub fn new(paths: Vec<PathEstimate<T>>) -> Self {
        Self { paths }
    }

    pub fn paths(&self) -> &[PathEstimate<T>] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn frequencies(&self) -> Vec<SpatialFrequency<T>> {
        self.paths.iter().map(|p| p.omega).collect()
    }

    /// The path with the largest gain energy, if any.
    pub fn strongest(&self) -> Option<&PathEstimate<T>> {
        self.paths.iter().max_by(|a, b| {
            a.energy().partial_cmp(&b.energy()).unwrap_or(std::cmp::Ordering::Equal)
        })
    }
}

/// Logarithm base used in the stopping threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Natural,
    Base10,
    Base2,
}

impl LogBase {
    fn log<T: Scalar>(self, x: T) -> T {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Base10 => x.log10(),
            LogBase::Base2 => x.log2(),
        }
    }
}

/// Tuning knobs of the sequential estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig<T> {
    /// Detection grid oversampling factor `R` (grid side is `R * n_t`).
    pub grid_oversampling: usize,
    /// Newton iterations per frequency refinement.
    pub newton_iters: usize,
    /// Minimum round-robin refinement passes after a path change.
    pub refine_rounds: usize,
    /// Hard cap on round-robin passes (the loop exits early once no
    /// frequency moves more than `refine_move_tol`).
    pub max_refine_rounds: usize,
    /// Frequency movement (rad, l-infinity) below which round-robin stops.
    pub refine_move_tol: T,
    /// Scale factor in `tau = coeff * sigma^2 * log(20 * n_t)`.
    pub tau_coefficient: T,
    /// Base of the logarithm in the threshold.
    pub tau_log_base: LogBase,
    /// Safety cap on the number of estimated paths.
    pub max_paths: usize,
    /// A new detection closer than this fraction of the DFT spacing to an
    /// existing path refines that path instead of adding a duplicate.
    pub duplicate_guard: T,
}

impl<T: Scalar> Default for EstimatorConfig<T> {
    fn default() -> Self {
        Self {
            grid_oversampling: 4,
            newton_iters: 5,
            refine_rounds: 3,
            max_refine_rounds: 40,
            refine_move_tol: lit(1e-10),
            tau_coefficient: lit(30.0),
            tau_log_base: LogBase::Natural,
            max_paths: 8,
            duplicate_guard: lit(0.25),
        }
    }
}

impl<T: Scalar> EstimatorConfig<T> {
    /// Stopping threshold for the given noise level and transmit array side.
    pub fn tau(&self, noise_var: T, n_t_1d: usize) -> T {
        let arg = lit::<T>(20.0) * T::from_usize(n_t_1d).unwrap();
        self.tau_coefficient * noise_var * self.tau_log_base.log(arg)
    }

    fn validate(&self) {
        assert!(self.grid_oversampling >= 1);
        assert!(self.newton_iters >= 1);
        assert!(self.refine_rounds >= 1);
        assert!(self.max_paths >= 1);
    }
}

/// What happened at one step of the estimator, for replay and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStep {
    /// Warm start: gains re-initialized by joint least squares.
    GainsReinitialized,
    /// A detection trial began on the current residual.
    TrialStarted,
    /// Grid peak chosen (frequency is the grid point).
    PathDetected,
    /// One round-robin refinement call completed.
    RefinementPass,
    /// The trial path was kept; total reduction exceeded tau.
    PathAccepted,
    /// The trial path was dropped and the previous state restored.
    PathRejected,
    /// A stale path failed the threshold test and was removed.
    PathDeleted,
    /// The path cap was reached before the stopping rule fired.
    Saturated,
}

/// Structured trace record: step type, the frequency involved (if any), and
/// the total residual energy after the step. Residual energy is
/// non-increasing along the trace except immediately after `PathRejected`
/// (which restores the pre-trial state) and `PathDeleted` (which removes a
/// path's contribution).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent<T> {
    pub step: TraceStep,
    pub omega: Option<SpatialFrequency<T>>,
    pub residual_energy: T,
}

/// Result of one estimation round.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOutcome<T> {
    pub set: EstimateSet<T>,
    /// True when `max_paths` stopped the search before the threshold did.
    pub saturated: bool,
    pub trace: Vec<TraceEvent<T>>,
}

/// The matched-energy detection surface over the oversampled grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GlrtSurface<T> {
    grid_side: usize,
    scores: Vec<T>,
}

impl<T: Scalar> GlrtSurface<T> {
    pub fn grid_side(&self) -> usize {
        self.grid_side
    }

    pub fn scores(&self) -> &[T] {
        &self.scores
    }

    /// Frequency of grid index `idx`, wrapped into `(-pi, pi]`.
    pub fn frequency(&self, idx: usize) -> SpatialFrequency<T> {
        let (wx, wz) = grid_frequency::<T>(idx, self.grid_side);
        SpatialFrequency::new(wx, wz).wrapped()
    }

    pub fn argmax(&self) -> (usize, T) {
        let mut best = 0;
        let mut best_score = T::neg_infinity();
        for (i, &s) in self.scores.iter().enumerate() {
            if s > best_score {
                best = i;
                best_score = s;
            }
        }
        (best, best_score)
    }
}

/// Score `sum_k |<A x_t(omega), y_k>|^2 / ||A x_t(omega)||^2` at every point
/// of the oversampled grid.
pub fn glrt_surface<T: Scalar>(
    y: &CMatrix<T>,
    a: &WeightMatrix<T>,
    config: &EstimatorConfig<T>,
) -> GlrtSurface<T> {
    let mut sensing = Sensing::new(a.entries(), config.grid_oversampling);
    let cols = matrix_columns(y);
    GlrtSurface { grid_side: sensing.grid_side(), scores: sensing.score_grid(&cols) }
}

/// Detect the strongest single path on the grid: argmax of the matched
/// energy surface plus least-squares gains at that grid point. No
/// refinement; see [`refine_newton`].
pub fn detect_single<T: Scalar>(
    residual: &CMatrix<T>,
    a: &WeightMatrix<T>,
    config: &EstimatorConfig<T>,
) -> PathEstimate<T> {
    let mut sensing = Sensing::new(a.entries(), config.grid_oversampling);
    let cols = matrix_columns(residual);
    let omega = sensing.detect_peak(&cols);
    let x = sensed_steering(a.entries(), sensing.n_1d(), omega);
    PathEstimate { omega, gains: ls_gains(&cols, &x) }
}

/// Newton-refine a path estimate against the given residual columns,
/// alternating frequency steps with least-squares gain updates. The matched
/// energy never decreases across accepted steps; a non-negative-definite
/// Hessian falls back to a backtracked gradient step.
pub fn refine_newton<T: Scalar>(
    est: &PathEstimate<T>,
    residual: &CMatrix<T>,
    a: &WeightMatrix<T>,
    config: &EstimatorConfig<T>,
) -> PathEstimate<T> {
    let n_1d = side_of(a);
    let cols = matrix_columns(residual);
    let omega = refine_omega(&cols, a.entries(), n_1d, est.omega, config.newton_iters).wrapped();
    let x = sensed_steering(a.entries(), n_1d, omega);
    PathEstimate { omega, gains: ls_gains(&cols, &x) }
}

/// Estimate the path set from one round of measurements.
///
/// `y` is the fed-back snapshot matrix (`M x L` measurements or the `M x Q`
/// SVD-truncated payload), `a` the transmit weights of the round, and
/// `noise_var` the per-measurement noise variance `sigma^2` that scales the
/// stopping threshold. A warm start seeds the search with the previous
/// round's frequencies.
pub fn estimate<T: Scalar>(
    y: &CMatrix<T>,
    a: &WeightMatrix<T>,
    config: &EstimatorConfig<T>,
    noise_var: T,
    warm_start: Option<&EstimateSet<T>>,
) -> EstimateOutcome<T> {
    config.validate();
    let mut run = Run::new(y, a, config, noise_var);
    if let Some(prev) = warm_start.filter(|p| !p.is_empty()) {
        run.warm_start(prev);
    }
    run.detect_loop();
    run.finish()
}

/// Track the channel across sounding rounds: warm-start from the previous
/// round's estimate, refine, delete stale paths, then search for new ones.
pub fn track<T: Scalar>(
    prev: &EstimateSet<T>,
    y: &CMatrix<T>,
    a: &WeightMatrix<T>,
    config: &EstimatorConfig<T>,
    noise_var: T,
) -> EstimateOutcome<T> {
    estimate(y, a, config, noise_var, Some(prev))
}

fn matrix_columns<T: Scalar>(y: &CMatrix<T>) -> Vec<Vec<Complex<T>>> {
    (0..y.cols()).map(|k| y.col(k)).collect()
}

fn side_of<T: Scalar>(a: &WeightMatrix<T>) -> usize {
    let n = (a.cols() as f64).sqrt().round() as usize;
    assert_eq!(n * n, a.cols(), "transmit weights must cover a square array");
    n
}

struct PathState<T> {
    omega: SpatialFrequency<T>,
    gains: Vec<Complex<T>>,
    sensed: Vec<Complex<T>>,
}

impl<T: Scalar> PathState<T> {
    fn estimate(&self) -> PathEstimate<T> {
        PathEstimate { omega: self.omega, gains: self.gains.clone() }
    }
}

struct Run<'a, T: Scalar> {
    cols: Vec<Vec<Complex<T>>>,
    a: &'a CMatrix<T>,
    n_1d: usize,
    config: &'a EstimatorConfig<T>,
    sensing: Sensing<T>,
    tau: T,
    energy_floor: T,
    paths: Vec<PathState<T>>,
    residual: Vec<Vec<Complex<T>>>,
    trace: Vec<TraceEvent<T>>,
    saturated: bool,
}

impl<'a, T: Scalar> Run<'a, T> {
    fn new(
        y: &CMatrix<T>,
        a: &'a WeightMatrix<T>,
        config: &'a EstimatorConfig<T>,
        noise_var: T,
    ) -> Self {
        let cols = matrix_columns(y);
        let n_1d = side_of(a);
        let sensing = Sensing::new(a.entries(), config.grid_oversampling);
        let input_energy: T = cols.iter().map(|c| norm_sq(c)).sum();
        Self {
            residual: cols.clone(),
            cols,
            a: a.entries(),
            n_1d,
            config,
            sensing,
            tau: config.tau(noise_var, n_1d),
            energy_floor: input_energy * lit(1e-12),
            paths: Vec::new(),
            trace: Vec::new(),
            saturated: false,
        }
    }

    fn residual_energy(&self) -> T {
        self.residual.iter().map(|c| norm_sq(c)).sum()
    }

    fn push_event(&mut self, step: TraceStep, omega: Option<SpatialFrequency<T>>) {
        let residual_energy = self.residual_energy();
        self.trace.push(TraceEvent { step, omega, residual_energy });
    }

    fn rebuild_residual(&mut self) {
        self.residual = self.cols.clone();
        for p in &self.paths {
            for (k, col) in self.residual.iter_mut().enumerate() {
                let h = p.gains[k];
                for (r, x) in col.iter_mut().zip(&p.sensed) {
                    *r -= h * *x;
                }
            }
        }
    }

    /// Residual with path `idx` excluded (its contribution added back).
    fn residual_excluding(&self, idx: usize) -> Vec<Vec<Complex<T>>> {
        let p = &self.paths[idx];
        self.residual
            .iter()
            .enumerate()
            .map(|(k, col)| {
                let h = p.gains[k];
                col.iter().zip(&p.sensed).map(|(r, x)| *r + h * *x).collect()
            })
            .collect()
    }

    fn make_path(&self, omega: SpatialFrequency<T>, cols: &[Vec<Complex<T>>]) -> PathState<T> {
        let sensed = sensed_steering(self.a, self.n_1d, omega);
        let gains = ls_gains(cols, &sensed);
        PathState { omega, gains, sensed }
    }

    fn warm_start(&mut self, prev: &EstimateSet<T>) {
        self.paths = prev
            .paths()
            .iter()
            .map(|p| {
                let sensed = sensed_steering(self.a, self.n_1d, p.omega);
                PathState { omega: p.omega, gains: p.gains.clone(), sensed }
            })
            .collect();
        self.resolve_joint_gains();
        self.rebuild_residual();
        self.push_event(TraceStep::GainsReinitialized, None);
        self.round_robin(self.config.refine_rounds);
        self.delete_weak();
    }

    /// Joint least-squares gain re-initialization over the current path
    /// frequencies: rows of `(X^H X)^{-1} X^H Y`, with a Tikhonov ridge
    /// (`1e-8 * trace / K`, escalated) when near-duplicate frequencies make
    /// the steering matrix ill-conditioned.
    fn resolve_joint_gains(&mut self) {
        let k = self.paths.len();
        if k == 0 {
            return;
        }
        let m = self.cols[0].len();
        let x = CMatrix::from_fn(m, k, |i, j| self.paths[j].sensed[i]);
        let gram = x.gram();
        let rhs =
            x.adjoint_mul(&CMatrix::from_fn(m, self.cols.len(), |i, j| self.cols[j][i]));
        let trace: T = (0..k).map(|i| gram.get(i, i).re).sum();
        let mut ridge = T::zero();
        let gains = loop {
            let mut g = gram.clone();
            if ridge > T::zero() {
                for i in 0..k {
                    g.set(i, i, g.get(i, i) + Complex::new(ridge, T::zero()));
                }
            }
            match cholesky_solve(&g, &rhs) {
                Some(sol) => break sol,
                None => {
                    ridge = if ridge == T::zero() {
                        lit::<T>(1e-8) * trace / T::from_usize(k).unwrap()
                    } else {
                        ridge * lit(10.0)
                    };
                    assert!(ridge.is_finite(), "ridge escalation failed");
                }
            }
        };
        for (j, p) in self.paths.iter_mut().enumerate() {
            p.gains = (0..self.cols.len()).map(|c| gains.get(j, c)).collect();
        }
    }

    /// Refine every path against the residual that excludes it, cycling
    /// `min_rounds` passes and then until no frequency moves appreciably.
    fn round_robin(&mut self, min_rounds: usize) {
        if self.paths.is_empty() {
            return;
        }
        let cap = self.config.max_refine_rounds.max(min_rounds);
        for round in 0..cap {
            let mut max_move = T::zero();
            for i in 0..self.paths.len() {
                let excl = self.residual_excluding(i);
                let old_omega = self.paths[i].omega;
                let omega =
                    refine_omega(&excl, self.a, self.n_1d, old_omega, self.config.newton_iters)
                        .wrapped();
                let refreshed = self.make_path(omega, &excl);
                max_move = max_move.max(omega.linf_dist(old_omega));
                // residual = excluded - new contribution
                self.residual = excl;
                for (k, col) in self.residual.iter_mut().enumerate() {
                    let h = refreshed.gains[k];
                    for (r, x) in col.iter_mut().zip(&refreshed.sensed) {
                        *r -= h * *x;
                    }
                }
                self.paths[i] = refreshed;
            }
            if round + 1 >= min_rounds && max_move < self.config.refine_move_tol {
                break;
            }
        }
        self.rebuild_residual();
        self.push_event(TraceStep::RefinementPass, None);
    }

    /// Stale-path removal: drop a path when removing it and jointly
    /// re-solving the remaining gains costs less than tau in residual
    /// energy. Gains only: letting frequencies re-refine here would allow a
    /// surviving path to migrate onto the deleted one's peak and defeat the
    /// test.
    fn delete_weak(&mut self) {
        let mut i = 0;
        while i < self.paths.len() {
            let snapshot: Vec<PathState<T>> = self
                .paths
                .iter()
                .map(|p| PathState {
                    omega: p.omega,
                    gains: p.gains.clone(),
                    sensed: p.sensed.clone(),
                })
                .collect();
            let e_with = self.residual_energy();
            let removed_omega = self.paths[i].omega;
            self.paths.remove(i);
            self.resolve_joint_gains();
            self.rebuild_residual();
            let e_without = self.residual_energy();
            if e_without - e_with < self.tau {
                self.push_event(TraceStep::PathDeleted, Some(removed_omega));
            } else {
                self.paths = snapshot;
                self.rebuild_residual();
                i += 1;
            }
        }
    }

    fn detect_loop(&mut self) {
        let guard = self.config.duplicate_guard * T::TAU() / T::from_usize(self.n_1d).unwrap();
        let mut merged_previous = false;
        loop {
            if self.paths.len() >= self.config.max_paths {
                self.saturated = true;
                self.push_event(TraceStep::Saturated, None);
                break;
            }
            let e0 = self.residual_energy();
            if e0 <= self.energy_floor {
                break;
            }
            let peak = self.sensing.detect_peak(&self.residual);
            if self.paths.iter().any(|p| p.omega.linf_dist(peak) < guard) {
                // duplicate: refine the existing set instead of adding, and
                // stop if detection immediately lands on a duplicate again
                if merged_previous {
                    break;
                }
                merged_previous = true;
                self.round_robin(1);
                continue;
            }
            merged_previous = false;

            self.push_event(TraceStep::TrialStarted, None);
            let snapshot: Vec<PathState<T>> = self
                .paths
                .iter()
                .map(|p| PathState {
                    omega: p.omega,
                    gains: p.gains.clone(),
                    sensed: p.sensed.clone(),
                })
                .collect();

            let omega = refine_omega(
                &self.residual,
                self.a,
                self.n_1d,
                peak,
                self.config.newton_iters,
            )
            .wrapped();
            let candidate = self.make_path(omega, &self.residual);
            for (k, col) in self.residual.iter_mut().enumerate() {
                let h = candidate.gains[k];
                for (r, x) in col.iter_mut().zip(&candidate.sensed) {
                    *r -= h * *x;
                }
            }
            self.paths.push(candidate);
            self.push_event(TraceStep::PathDetected, Some(peak));

            self.round_robin(self.config.refine_rounds);
            let e1 = self.residual_energy();
            if e0 - e1 > self.tau {
                let accepted = self.paths.last().unwrap().omega;
                self.push_event(TraceStep::PathAccepted, Some(accepted));
            } else {
                self.paths = snapshot;
                self.rebuild_residual();
                self.push_event(TraceStep::PathRejected, Some(omega));
                break;
            }
        }
    }

    fn finish(mut self) -> EstimateOutcome<T> {
        self.merge_duplicates();
        let set = EstimateSet::new(self.paths.iter().map(PathState::estimate).collect());
        EstimateOutcome { set, saturated: self.saturated, trace: self.trace }
    }

    /// Collapse estimates that refined to (numerically) the same frequency,
    /// keeping the stronger one.
    fn merge_duplicates(&mut self) {
        let tol = lit::<T>(1e-6);
        let mut i = 0;
        while i < self.paths.len() {
            let mut j = i + 1;
            let mut removed = false;
            while j < self.paths.len() {
                if self.paths[i].omega.linf_dist(self.paths[j].omega) < tol {
                    let keep_j = energy_of(&self.paths[j]) > energy_of(&self.paths[i]);
                    if keep_j {
                        self.paths.swap(i, j);
                    }
                    self.paths.remove(j);
                    removed = true;
                } else {
                    j += 1;
                }
            }
            if removed {
                self.rebuild_residual();
            }
            i += 1;
        }
    }
}

fn energy_of<T: Scalar>(p: &PathState<T>) -> T {
    p.gains.iter().map(|h| h.norm_sqr()).sum()
}
