//! Reward learners for factored MDPs: the optimistic KWIK-LR learner and the
//! baselines it is compared with.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fmdp::features::RewardFeatureMap;
use crate::kwik_lr::{KwikLrLearner, Prediction};

/// A reward estimator consulted by the planner.
pub trait RewardModel: Send + std::fmt::Debug {
    /// Predicted reward of every flat `(state, action)`, state-major.
    fn reward_table(&mut self, features: &RewardFeatureMap) -> Vec<f64>;

    fn observe(&mut self, features: &RewardFeatureMap, state: usize, action: usize, reward: f64) -> Result<()>;

    /// Number of executed steps the model treated as unknown.
    fn bottom_count(&self) -> u64 {
        0
    }
}

fn check_chi(chi: &[f64], n_params: usize, n_terms: usize) -> Result<()> {
    if chi.len() != n_params {
        return Err(Error::invalid(format!(
            "feature vector has dimension {}, expected {n_params}",
            chi.len()
        )));
    }
    let ones = chi.iter().filter(|&&v| v != 0.0).count();
    if ones != n_terms || chi.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::invalid(format!(
            "feature vector must be an indicator with exactly {n_terms} ones"
        )));
    }
    Ok(())
}

/// How `χ` is presented to the underlying regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputScaling {
    /// `χ` itself (norm `√J`); one observation carries full weight against the prior.
    #[default]
    Raw,
    /// `χ/√J` with targets `r/√J`; keeps inputs in the unit ball at the cost of
    /// a prior that is effectively `J` times stiffer.
    UnitNorm,
}

/// KWIK-LR over reward parameters with the weight vector started at `R₀·1`.
///
/// The learned weights are the reward parameters themselves and a reward
/// prediction is `χᵀQw`. The planner never sees ⊥: optimism stands in for it.
#[derive(Debug, Clone)]
pub struct OptimisticRewardLearner {
    inner: KwikLrLearner,
    r0: f64,
    n_terms: usize,
    scaling: InputScaling,
}

impl OptimisticRewardLearner {
    /// `alpha0` is only used to count would-be ⊥ answers for diagnostics.
    pub fn new(n_params: usize, n_terms: usize, r0: f64, alpha0: f64, scaling: InputScaling) -> Result<Self> {
        if n_terms == 0 || n_terms > n_params {
            return Err(Error::invalid("need 1 <= J <= N_r reward terms"));
        }
        if !r0.is_finite() {
            return Err(Error::invalid("R0 must be finite"));
        }
        let mut inner = KwikLrLearner::with_prior(n_params, alpha0, vec![r0; n_params])?;
        if scaling == InputScaling::Raw {
            inner = inner.with_input_bound((n_terms as f64).sqrt())?;
        }
        Ok(OptimisticRewardLearner {
            inner,
            r0,
            n_terms,
            scaling,
        })
    }

    pub fn for_features(features: &RewardFeatureMap, r0: f64, alpha0: f64, scaling: InputScaling) -> Result<Self> {
        Self::new(features.n_params(), features.n_terms(), r0, alpha0, scaling)
    }

    pub fn scaling(&self) -> InputScaling {
        self.scaling
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn inner(&self) -> &KwikLrLearner {
        &self.inner
    }

    fn scale(&self) -> f64 {
        match self.scaling {
            InputScaling::Raw => 1.0,
            InputScaling::UnitNorm => (self.n_terms as f64).sqrt(),
        }
    }

    /// `χᵀQw` for an unscaled indicator `χ`.
    pub fn predict_reward(&self, chi: &[f64]) -> Result<f64> {
        check_chi(chi, self.inner.dim(), self.n_terms)?;
        let s = self.scale();
        let u: Vec<f64> = chi.iter().map(|v| v / s).collect();
        Ok(s * self.inner.estimate(&u)?)
    }

    pub fn observe_reward(&mut self, chi: &[f64], reward: f64) -> Result<()> {
        check_chi(chi, self.inner.dim(), self.n_terms)?;
        let s = self.scale();
        let u: Vec<f64> = chi.iter().map(|v| v / s).collect();
        let _ = self.inner.predict(&u)?;
        self.inner.update(&u, reward / s)
    }

    /// Current parameter estimate `r̂ = Qw`.
    pub fn reward_params(&self) -> Vec<f64> {
        self.inner.theta()
    }
}

impl RewardModel for OptimisticRewardLearner {
    fn reward_table(&mut self, features: &RewardFeatureMap) -> Vec<f64> {
        let params = self.reward_params();
        let n = features_flat_len(features);
        (0..n)
            .map(|idx| {
                let (s, a) = (idx / features.n_actions(), idx % features.n_actions());
                features.active_flat(s, a).iter().map(|&k| params[k]).sum()
            })
            .collect()
    }

    fn observe(&mut self, features: &RewardFeatureMap, state: usize, action: usize, reward: f64) -> Result<()> {
        let mut chi = vec![0.0; features.n_params()];
        for &k in features.active_flat(state, action) {
            chi[k] = 1.0;
        }
        self.observe_reward(&chi, reward)
    }

    fn bottom_count(&self) -> u64 {
        self.inner.bottom_count()
    }
}

fn features_flat_len(features: &RewardFeatureMap) -> usize {
    features.n_states() * features.n_actions()
}

/// Plain KWIK-LR (zero prior) that substitutes `R_max` for ⊥ at planning time.
#[derive(Debug, Clone)]
pub struct KwikRmaxRewardModel {
    inner: KwikLrLearner,
    r_max: f64,
    n_terms: usize,
}

impl KwikRmaxRewardModel {
    pub fn new(features: &RewardFeatureMap, alpha0: f64, r_max: f64) -> Result<Self> {
        Ok(KwikRmaxRewardModel {
            inner: KwikLrLearner::new(features.n_params(), alpha0)?,
            r_max,
            n_terms: features.n_terms(),
        })
    }
}

impl RewardModel for KwikRmaxRewardModel {
    fn reward_table(&mut self, features: &RewardFeatureMap) -> Vec<f64> {
        let s = (self.n_terms as f64).sqrt();
        (0..features_flat_len(features))
            .map(|idx| {
                let u = features.scaled_chi_flat(idx / features.n_actions(), idx % features.n_actions());
                match self.inner.peek(&u).expect("scaled features are unit norm") {
                    Prediction::Known(v) => s * v,
                    Prediction::Unknown => self.r_max,
                }
            })
            .collect()
    }

    fn observe(&mut self, features: &RewardFeatureMap, state: usize, action: usize, reward: f64) -> Result<()> {
        let u = features.scaled_chi_flat(state, action);
        let _ = self.inner.predict(&u)?;
        self.inner.update(&u, reward / (self.n_terms as f64).sqrt())
    }

    fn bottom_count(&self) -> u64 {
        self.inner.bottom_count()
    }
}

/// Flat `(state, action)` table of empirical means; unvisited entries read `R₀`.
#[derive(Debug, Clone)]
pub struct TabularRewardModel {
    sums: Vec<f64>,
    counts: Vec<u64>,
    r0: f64,
    unknown_steps: u64,
}

impl TabularRewardModel {
    pub fn new(n_states: usize, n_actions: usize, r0: f64) -> Self {
        TabularRewardModel {
            sums: vec![0.0; n_states * n_actions],
            counts: vec![0; n_states * n_actions],
            r0,
            unknown_steps: 0,
        }
    }

    pub fn estimate(&self, index: usize) -> f64 {
        match self.counts[index] {
            0 => self.r0,
            c => self.sums[index] / c as f64,
        }
    }
}

impl RewardModel for TabularRewardModel {
    fn reward_table(&mut self, _features: &RewardFeatureMap) -> Vec<f64> {
        (0..self.counts.len()).map(|i| self.estimate(i)).collect()
    }

    fn observe(&mut self, features: &RewardFeatureMap, state: usize, action: usize, reward: f64) -> Result<()> {
        let idx = state * features.n_actions() + action;
        if self.counts[idx] == 0 {
            self.unknown_steps += 1;
        }
        self.sums[idx] += reward;
        self.counts[idx] += 1;
        Ok(())
    }

    fn bottom_count(&self) -> u64 {
        self.unknown_steps
    }
}

/// Batch least squares on the observed `(χ, r)` pairs (minimum-norm solution),
/// refitted whenever the planner asks for rewards. No exploration bonus.
#[derive(Debug, Clone)]
pub struct LeastSquaresRewardModel {
    gram: DMatrix<f64>,
    rhs: DVector<f64>,
    samples: u64,
}

impl LeastSquaresRewardModel {
    pub fn new(n_params: usize) -> Self {
        LeastSquaresRewardModel {
            gram: DMatrix::zeros(n_params, n_params),
            rhs: DVector::zeros(n_params),
            samples: 0,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        if self.samples == 0 {
            return vec![0.0; self.rhs.len()];
        }
        let svd = self.gram.clone().svd(true, true);
        svd.solve(&self.rhs, 1e-9)
            .map(|v| v.iter().copied().collect())
            .unwrap_or_else(|_| vec![0.0; self.rhs.len()])
    }
}

impl RewardModel for LeastSquaresRewardModel {
    fn reward_table(&mut self, features: &RewardFeatureMap) -> Vec<f64> {
        let params = self.params();
        (0..features_flat_len(features))
            .map(|idx| {
                features
                    .active_flat(idx / features.n_actions(), idx % features.n_actions())
                    .iter()
                    .map(|&k| params[k])
                    .sum()
            })
            .collect()
    }

    fn observe(&mut self, features: &RewardFeatureMap, state: usize, action: usize, reward: f64) -> Result<()> {
        let active = features.active_flat(state, action);
        for &i in active {
            for &j in active {
                self.gram[(i, j)] += 1.0;
            }
            self.rhs[i] += reward;
        }
        self.samples += 1;
        Ok(())
    }
}
