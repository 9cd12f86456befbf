//! Incremental KWIK linear regression.
//!
//! The learner keeps the inverse regularised Gram matrix `Q = (I + DᵀD)⁻¹`
//! and the moment vector `w = Dᵀz` (plus an optional prior), both updated in
//! `O(n²)` per sample with a Sherman–Morrison rank-one step. A query `x` is
//! answered only when `‖Qx‖ < alpha0`; otherwise the learner abstains.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on the unit-ball check so that inputs normalised in floating
/// point (e.g. `χ/√J`) are not rejected for a rounding ulp.
pub const UNIT_BALL_TOL: f64 = 1e-9;

const SNAPSHOT_FORMAT: &str = "kwik-lr";
const SNAPSHOT_VERSION: u32 = 1;

/// Outcome of a query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Prediction {
    Known(f64),
    /// The learner does not know (⊥).
    Unknown,
}

impl Prediction {
    pub fn is_known(&self) -> bool {
        matches!(self, Prediction::Known(_))
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            Prediction::Known(v) => Some(v),
            Prediction::Unknown => None,
        }
    }

    /// Applies `f` to a known value, leaving ⊥ untouched.
    pub fn map(self, f: impl FnOnce(f64) -> f64) -> Prediction {
        match self {
            Prediction::Known(v) => Prediction::Known(f(v)),
            Prediction::Unknown => Prediction::Unknown,
        }
    }
}

/// Accuracy and noise parameters used to derive the abstention threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KwikParams {
    pub epsilon: f64,
    pub delta: f64,
    /// Bound on the norm of the true weight vector.
    pub weight_bound: f64,
    /// Bound on the magnitude of the observation noise.
    pub noise_bound: f64,
    /// Free constant of the threshold formula.
    pub c: f64,
}

impl KwikParams {
    pub fn new(epsilon: f64, delta: f64, weight_bound: f64, noise_bound: f64) -> Result<Self> {
        let params = KwikParams {
            epsilon,
            delta,
            weight_bound,
            noise_bound,
            c: 1.0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_c(mut self, c: f64) -> Result<Self> {
        self.c = c;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.weight_bound > 0.0) {
            return Err(Error::invalid(format!(
                "weight bound must be > 0, got {}",
                self.weight_bound
            )));
        }
        if !(self.noise_bound >= 0.0) {
            return Err(Error::invalid(format!(
                "noise bound must be >= 0, got {}",
                self.noise_bound
            )));
        }
        if !(self.c > 0.0) {
            return Err(Error::invalid(format!("c must be > 0, got {}", self.c)));
        }
        Ok(())
    }
}

/// Threshold `min{ c·ε² / ln(c/(δε)), ε/(2M) }`.
///
/// The logarithm argument must exceed 1, otherwise the first branch is not a
/// positive number and the parameters are rejected.
pub fn compute_alpha0(params: &KwikParams) -> Result<f64> {
    params.validate()?;
    let KwikParams {
        epsilon: eps,
        delta,
        weight_bound,
        c,
        ..
    } = *params;
    let log_arg = c / (delta * eps);
    if !(log_arg > 1.0) {
        return Err(Error::invalid(format!(
            "c/(delta*epsilon) = {log_arg} must exceed 1; choose a larger c"
        )));
    }
    let noise_branch = c * eps * eps / log_arg.ln();
    let bias_branch = eps / (2.0 * weight_bound);
    Ok(noise_branch.min(bias_branch))
}

/// Online ridge regressor with a KWIK abstention rule.
///
/// `predict` takes `&mut self` only to count ⊥ answers; [`peek`](Self::peek)
/// is the read-only equivalent.
#[derive(Debug, Clone, PartialEq)]
pub struct KwikLrLearner {
    dim: usize,
    /// Row-major `dim × dim`.
    q: Vec<f64>,
    w: Vec<f64>,
    alpha0: f64,
    /// Inputs with a larger Euclidean norm are rejected.
    input_bound: f64,
    updates: u64,
    bottom_count: u64,
}

impl KwikLrLearner {
    pub fn new(dim: usize, alpha0: f64) -> Result<Self> {
        Self::with_prior(dim, alpha0, vec![0.0; dim])
    }

    /// Starts from `w = prior` instead of the zero vector. With `Q = I` the
    /// initial weight estimate is the prior itself.
    pub fn with_prior(dim: usize, alpha0: f64, prior: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("learner dimension must be >= 1"));
        }
        if !(alpha0 > 0.0) || !alpha0.is_finite() {
            return Err(Error::invalid(format!("alpha0 must be a positive finite number, got {alpha0}")));
        }
        if prior.len() != dim {
            return Err(Error::invalid(format!(
                "prior has length {}, expected {dim}",
                prior.len()
            )));
        }
        let mut q = vec![0.0; dim * dim];
        for i in 0..dim {
            q[i * dim + i] = 1.0;
        }
        Ok(KwikLrLearner {
            dim,
            q,
            w: prior,
            alpha0,
            input_bound: 1.0,
            updates: 0,
            bottom_count: 0,
        })
    }

    /// Widens the accepted input ball to radius `bound`.
    ///
    /// The ⊥ bound and the `[1, 2]` denominator range only hold for unit
    /// inputs; callers that widen the ball must not rely on abstention.
    pub fn with_input_bound(mut self, bound: f64) -> Result<Self> {
        if !(bound >= 1.0) || !bound.is_finite() {
            return Err(Error::invalid(format!("input bound must be a finite number >= 1, got {bound}")));
        }
        self.input_bound = bound;
        Ok(self)
    }

    pub fn input_bound(&self) -> f64 {
        self.input_bound
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn bottom_count(&self) -> u64 {
        self.bottom_count
    }

    /// Row-major inverse Gram matrix.
    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn q_entry(&self, row: usize, col: usize) -> f64 {
        self.q[row * self.dim + col]
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.q[i * self.dim + i]).sum()
    }

    /// Largest ⊥ count permitted by the trace argument: the greatest integer
    /// strictly below `2n/alpha0²`.
    pub fn bottom_bound(&self) -> u64 {
        let bound = 2.0 * self.dim as f64 / (self.alpha0 * self.alpha0);
        let floor = bound.floor();
        if floor == bound {
            (floor as u64).saturating_sub(1)
        } else {
            floor as u64
        }
    }

    /// Current weight estimate `Qw`.
    pub fn theta(&self) -> Vec<f64> {
        self.mat_vec(&self.w)
    }

    /// `‖Qx‖`, the abstention statistic.
    pub fn confidence_radius(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(norm(&self.mat_vec(x)))
    }

    /// Linear estimate `xᵀQw`, ignoring the abstention rule.
    pub fn estimate(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let qx = self.mat_vec(x);
        Ok(dot(&qx, &self.w))
    }

    /// Read-only query; does not count ⊥.
    pub fn peek(&self, x: &[f64]) -> Result<Prediction> {
        self.check_input(x)?;
        let qx = self.mat_vec(x);
        if norm(&qx) < self.alpha0 {
            // Q is symmetric, so xᵀQw = (Qx)ᵀw.
            Ok(Prediction::Known(dot(&qx, &self.w)))
        } else {
            Ok(Prediction::Unknown)
        }
    }

    /// KWIK query: like [`peek`](Self::peek) but every ⊥ is counted.
    pub fn predict(&mut self, x: &[f64]) -> Result<Prediction> {
        let prediction = self.peek(x)?;
        if !prediction.is_known() {
            self.bottom_count += 1;
            debug_assert!(self.input_bound > 1.0 || self.bottom_count <= self.bottom_bound() + 1);
        }
        Ok(prediction)
    }

    /// Absorbs the labelled sample `(x, z)`.
    pub fn update(&mut self, x: &[f64], z: f64) -> Result<()> {
        self.check_input(x)?;
        if !z.is_finite() {
            return Err(Error::invalid(format!("label must be finite, got {z}")));
        }
        let n = self.dim;
        let qx = self.mat_vec(x);
        let denom = 1.0 + dot(x, &qx);
        debug_assert!(
            (1.0 - 1e-9..=1.0 + self.input_bound * self.input_bound + 1e-9).contains(&denom),
            "denominator {denom} outside [1, 2]"
        );
        for i in 0..n {
            let scaled = qx[i] / denom;
            let row = &mut self.q[i * n..(i + 1) * n];
            for (entry, &qxj) in row.iter_mut().zip(&qx) {
                *entry -= scaled * qxj;
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.q[i * n + j] + self.q[j * n + i]);
                self.q[i * n + j] = avg;
                self.q[j * n + i] = avg;
            }
        }
        for (wi, &xi) in self.w.iter_mut().zip(x) {
            *wi += xi * z;
        }
        self.updates += 1;
        Ok(())
    }

    pub fn snapshot(&self) -> LearnerSnapshot {
        LearnerSnapshot {
            format: SNAPSHOT_FORMAT.to_string(),
            version: SNAPSHOT_VERSION,
            dim: self.dim,
            alpha0: self.alpha0,
            q: self.q.clone(),
            w: self.w.clone(),
            input_bound: self.input_bound,
            updates: self.updates,
            bottom_count: self.bottom_count,
        }
    }

    pub fn from_snapshot(snapshot: LearnerSnapshot) -> Result<Self> {
        if snapshot.format != SNAPSHOT_FORMAT {
            return Err(Error::Snapshot(format!("unknown format `{}`", snapshot.format)));
        }
        if snapshot.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported version {} (expected {SNAPSHOT_VERSION})",
                snapshot.version
            )));
        }
        let n = snapshot.dim;
        if n == 0 || snapshot.q.len() != n * n || snapshot.w.len() != n {
            return Err(Error::Snapshot(format!(
                "inconsistent shapes: dim {n}, q {}, w {}",
                snapshot.q.len(),
                snapshot.w.len()
            )));
        }
        if !(snapshot.alpha0 > 0.0) || !(snapshot.input_bound >= 1.0) {
            return Err(Error::Snapshot(format!(
                "alpha0 {} or input bound {} out of range",
                snapshot.alpha0, snapshot.input_bound
            )));
        }
        Ok(KwikLrLearner {
            dim: n,
            q: snapshot.q,
            w: snapshot.w,
            alpha0: snapshot.alpha0,
            input_bound: snapshot.input_bound,
            updates: snapshot.updates,
            bottom_count: snapshot.bottom_count,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.snapshot()).expect("snapshot serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snapshot: LearnerSnapshot =
            serde_json::from_str(text).map_err(|e| Error::Snapshot(e.to_string()))?;
        Self::from_snapshot(snapshot)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!(
                "input has dimension {}, learner expects {}",
                x.len(),
                self.dim
            )));
        }
        let len = norm(x);
        if !len.is_finite() || len > self.input_bound * (1.0 + UNIT_BALL_TOL) {
            return Err(Error::invalid(format!(
                "input norm {len} exceeds {}",
                self.input_bound
            )));
        }
        Ok(())
    }

    fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        self.q
            .chunks_exact(self.dim)
            .map(|row| dot(row, x))
            .collect()
    }
}

/// Versioned checkpoint of a learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSnapshot {
    pub format: String,
    pub version: u32,
    pub dim: usize,
    pub alpha0: f64,
    pub q: Vec<f64>,
    pub w: Vec<f64>,
    pub input_bound: f64,
    pub updates: u64,
    pub bottom_count: u64,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fresh_learner_is_identity() {
        let l = KwikLrLearner::new(3, 0.5).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(l.q_entry(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(l.w(), &[0.0; 3]);
        assert_eq!(l.trace(), 3.0);
        assert_eq!(l.updates(), 0);
        assert_eq!(l.bottom_count(), 0);
    }

    #[test]
    fn rejects_degenerate_construction() {
        assert!(matches!(KwikLrLearner::new(0, 0.5), Err(Error::InvalidArgument(_))));
        assert!(KwikLrLearner::new(2, 0.0).is_err());
        assert!(KwikLrLearner::new(2, -1.0).is_err());
        assert!(KwikLrLearner::with_prior(2, 0.5, vec![1.0]).is_err());
    }

    #[test]
    fn fresh_learner_abstains_on_unit_input() {
        let mut l = KwikLrLearner::new(1, 0.6).unwrap();
        assert_eq!(l.predict(&[1.0]).unwrap(), Prediction::Unknown);
        assert_eq!(l.bottom_count(), 1);

        let mut l = KwikLrLearner::new(2, 0.5).unwrap();
        assert_eq!(l.predict(&[1.0, 0.0]).unwrap(), Prediction::Unknown);
    }

    #[test]
    fn zero_input_is_known_zero() {
        let mut l = KwikLrLearner::new(3, 0.1).unwrap();
        l.update(&[0.6, 0.0, 0.8], 2.0).unwrap();
        assert_eq!(l.predict(&[0.0; 3]).unwrap(), Prediction::Known(0.0));
        assert_eq!(l.bottom_count(), 0);
    }

    #[test]
    fn one_dimensional_hand_calculation() {
        let mut l = KwikLrLearner::new(1, 0.6).unwrap();
        l.update(&[1.0], 1.0).unwrap();
        assert_relative_eq!(l.q_entry(0, 0), 0.5);
        assert_eq!(l.w(), &[1.0]);
        assert_relative_eq!(l.trace(), 0.5);
        assert_eq!(l.predict(&[1.0]).unwrap(), Prediction::Known(0.5));

        l.update(&[1.0], 0.0).unwrap();
        assert_relative_eq!(l.q_entry(0, 0), 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(l.w(), &[1.0]);
        let p = l.predict(&[1.0]).unwrap().value().unwrap();
        assert_relative_eq!(p, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_update_is_a_no_op_on_state() {
        let mut l = KwikLrLearner::new(2, 0.5).unwrap();
        l.update(&[0.5, 0.5], 1.0).unwrap();
        let before = l.clone();
        l.update(&[0.0, 0.0], 7.0).unwrap();
        assert_eq!(l.q(), before.q());
        assert_eq!(l.w(), before.w());
        assert_eq!(l.updates(), before.updates() + 1);
    }

    #[test]
    fn trace_drops_by_rank_one_amount() {
        let mut l = KwikLrLearner::new(3, 0.5).unwrap();
        l.update(&[0.3, -0.4, 0.5], 0.2).unwrap();
        let x = [0.1, 0.7, -0.2];
        let qx = l.mat_vec(&x);
        let expected = dot(&qx, &qx) / (1.0 + dot(&x, &qx));
        let before = l.trace();
        l.update(&x, -1.0).unwrap();
        assert_relative_eq!(before - l.trace(), expected, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut l = KwikLrLearner::new(2, 0.5).unwrap();
        assert!(l.predict(&[1.0, 1.0]).is_err());
        assert!(l.predict(&[1.0]).is_err());
        assert!(l.update(&[0.8, 0.8], 1.0).is_err());
        assert!(l.update(&[0.5, 0.5, 0.0], 1.0).is_err());
        assert!(l.update(&[0.5, 0.5], f64::NAN).is_err());
        assert!(l.peek(&[f64::NAN, 0.0]).is_err());
        // rounding slack on normalised inputs
        let s = 1.0 / 2f64.sqrt();
        assert!(l.update(&[s, s], 1.0).is_ok());
    }

    #[test]
    fn predict_does_not_touch_model() {
        let mut l = KwikLrLearner::new(2, 0.9).unwrap();
        l.update(&[0.6, 0.8], 1.0).unwrap();
        let q = l.q().to_vec();
        let w = l.w().to_vec();
        let a = l.predict(&[0.6, 0.0]).unwrap();
        let b = l.predict(&[0.6, 0.0]).unwrap();
        assert_eq!(a, b);
        assert_eq!(l.q(), &q[..]);
        assert_eq!(l.w(), &w[..]);
    }

    #[test]
    fn prior_sets_initial_estimate() {
        let l = KwikLrLearner::with_prior(3, 0.5, vec![10.0; 3]).unwrap();
        assert_eq!(l.theta(), vec![10.0; 3]);
        let s = 1.0 / 3f64.sqrt();
        assert_relative_eq!(l.estimate(&[s, s, s]).unwrap(), 30.0 * s, epsilon = 1e-12);
    }

    #[test]
    fn bottom_bound_is_strict() {
        // 2·4/0.09 = 88.88…
        assert_eq!(KwikLrLearner::new(4, 0.3).unwrap().bottom_bound(), 88);
        // 2·2/1 = 4 exactly, so at most 3
        assert_eq!(KwikLrLearner::new(2, 1.0).unwrap().bottom_bound(), 3);
    }

    #[test]
    fn alpha0_second_branch_dominates() {
        let p = KwikParams::new(0.2, 0.1, 10.0, 0.0).unwrap();
        // first branch: 0.04 / ln(50) ≈ 0.010225
        let first = 0.04 / 50f64.ln();
        assert!(first >= 0.01);
        assert_relative_eq!(compute_alpha0(&p).unwrap(), 0.01, epsilon = 1e-15);
    }

    #[test]
    fn alpha0_rejects_bad_params() {
        assert!(KwikParams::new(0.0, 0.1, 1.0, 0.0).is_err());
        assert!(KwikParams::new(0.1, 0.0, 1.0, 0.0).is_err());
        assert!(KwikParams::new(0.1, 1.0, 1.0, 0.0).is_err());
        assert!(KwikParams::new(0.1, 0.1, 0.0, 0.0).is_err());
        assert!(KwikParams::new(0.1, 0.1, 1.0, -1.0).is_err());
        let degenerate = KwikParams {
            epsilon: 0.5,
            delta: 0.5,
            weight_bound: 1.0,
            noise_bound: 0.0,
            c: 0.1,
        };
        assert!(compute_alpha0(&degenerate).is_err());
    }

    #[test]
    fn alpha0_monotone_in_epsilon() {
        // Frozen from evaluating both branches by hand (c = 1, δ = 0.1, M = 10):
        // ε=0.1: min(0.01/ln 100, 0.005) = 0.002171…
        // ε=0.2: min(0.04/ln 50, 0.01)   = 0.01
        // ε=0.4: min(0.16/ln 25, 0.02)   = 0.02
        let expected = [0.01 / 100f64.ln(), 0.01, 0.02];
        let mut last = 0.0;
        for (eps, want) in [0.1, 0.2, 0.4].into_iter().zip(expected) {
            let a = compute_alpha0(&KwikParams::new(eps, 0.1, 10.0, 0.0).unwrap()).unwrap();
            assert_relative_eq!(a, want, epsilon = 1e-15);
            assert!(a >= last);
            last = a;
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let mut l = KwikLrLearner::new(3, 0.25).unwrap();
        l.update(&[0.1, 0.2, 0.3], 0.7).unwrap();
        l.update(&[-0.5, 0.1, 0.0], -0.3).unwrap();
        let _ = l.predict(&[0.0, 0.0, 1.0]).unwrap();
        let restored = KwikLrLearner::from_json(&l.to_json()).unwrap();
        assert_eq!(restored, l);
    }

    #[test]
    fn snapshot_rejects_wrong_version_and_shape() {
        let l = KwikLrLearner::new(2, 0.5).unwrap();
        let mut s = l.snapshot();
        s.version = 99;
        assert!(KwikLrLearner::from_snapshot(s).is_err());
        let mut s = l.snapshot();
        s.q.pop();
        assert!(KwikLrLearner::from_snapshot(s).is_err());
        assert!(KwikLrLearner::from_json("{not json").is_err());
    }
}
