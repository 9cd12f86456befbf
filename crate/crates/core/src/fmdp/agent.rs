//! Model-based agent for factored MDPs with known dynamics and a learned reward.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::fmdp::features::RewardFeatureMap;
use crate::fmdp::learners::RewardModel;
use crate::fmdp::model::FactoredMdp;
use crate::planning::{evaluate_policy, value_iteration, FlatMdp, ViConfig};

/// Environment side of a factored MDP run.
#[derive(Debug, Clone)]
pub struct FmdpSimulator {
    mdp: Arc<FactoredMdp>,
    state: Vec<usize>,
}

impl FmdpSimulator {
    pub fn new(mdp: Arc<FactoredMdp>) -> Self {
        let state = mdp.start_state().to_vec();
        FmdpSimulator { mdp, state }
    }

    pub fn state(&self) -> &[usize] {
        &self.state
    }

    pub fn state_index(&self) -> usize {
        self.mdp.encode(&self.state)
    }

    /// Executes `action`; returns the reward earned in the current state.
    pub fn step<R: Rng + ?Sized>(&mut self, action: usize, rng: &mut R) -> Result<f64> {
        self.mdp.check_action(action)?;
        let reward = self.mdp.true_reward(&self.state, action);
        self.state = self.mdp.sample_next(&self.state, action, rng);
        Ok(reward)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmdpAgentConfig {
    pub replan_interval: usize,
    /// Probability of a uniformly random action (0 disables exploration noise).
    pub epsilon: f64,
    pub vi: ViConfig,
}

impl Default for FmdpAgentConfig {
    fn default() -> Self {
        FmdpAgentConfig {
            replan_interval: 5,
            epsilon: 0.0,
            vi: ViConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmdpStep {
    pub action: usize,
    pub reward: f64,
    pub replanned: bool,
}

/// Plans greedily on the flat view with the model's predicted rewards.
#[derive(Debug)]
pub struct FmdpAgent {
    model: Box<dyn RewardModel>,
    features: Arc<RewardFeatureMap>,
    planner: FlatMdp,
    config: FmdpAgentConfig,
    policy: Vec<Option<usize>>,
    values: Option<Vec<f64>>,
    steps: u64,
    plans: u64,
}

impl FmdpAgent {
    /// `dynamics` is the flat view of the known transition model; its row
    /// rewards are overwritten at every plan.
    pub fn new(
        model: Box<dyn RewardModel>,
        features: Arc<RewardFeatureMap>,
        dynamics: FlatMdp,
        config: FmdpAgentConfig,
    ) -> Result<Self> {
        if config.replan_interval == 0 {
            return Err(Error::invalid("replan interval must be >= 1"));
        }
        if !(0.0..=1.0).contains(&config.epsilon) {
            return Err(Error::invalid("epsilon must lie in [0, 1]"));
        }
        let n = dynamics.n_states();
        Ok(FmdpAgent {
            model,
            features,
            planner: dynamics,
            config,
            policy: vec![None; n],
            values: None,
            steps: 0,
            plans: 0,
        })
    }

    pub fn policy(&self) -> &[Option<usize>] {
        &self.policy
    }

    pub fn plans(&self) -> u64 {
        self.plans
    }

    pub fn bottom_count(&self) -> u64 {
        self.model.bottom_count()
    }

    pub fn model(&self) -> &dyn RewardModel {
        self.model.as_ref()
    }

    pub fn predicted_rewards(&mut self) -> Vec<f64> {
        self.model.reward_table(&self.features)
    }

    pub fn plan(&mut self) -> Result<()> {
        let rewards = self.model.reward_table(&self.features);
        self.planner.set_row_rewards(&rewards);
        let vf = value_iteration(&self.planner, &self.config.vi, self.values.as_deref())?;
        self.policy = vf.policy;
        self.values = Some(vf.values);
        self.plans += 1;
        Ok(())
    }

    /// Picks the action for `state`, planning first if no plan exists yet.
    pub fn act<R: Rng + ?Sized>(&mut self, state: usize, rng: &mut R) -> Result<(usize, bool)> {
        let first = self.plans == 0;
        if first {
            self.plan()?;
        }
        let n_actions = self.planner.n_actions();
        if self.config.epsilon > 0.0 && rng.gen::<f64>() < self.config.epsilon {
            return Ok((rng.gen_range(0..n_actions), first));
        }
        Ok((self.policy[state].unwrap_or(0), first))
    }

    /// Learns from one transition and replans when the step count reaches a
    /// multiple of the replan interval, so `policy()` always reflects the
    /// latest scheduled model update. Returns whether it replanned.
    pub fn observe(&mut self, state: usize, action: usize, reward: f64) -> Result<bool> {
        self.model.observe(&self.features, state, action, reward)?;
        self.steps += 1;
        let due = self.steps.is_multiple_of(self.config.replan_interval as u64);
        if due {
            self.plan()?;
        }
        Ok(due)
    }

    /// One interaction: act greedily, execute, learn from the reward.
    pub fn step<E: Rng + ?Sized, A: Rng + ?Sized>(
        &mut self,
        sim: &mut FmdpSimulator,
        env_rng: &mut E,
        agent_rng: &mut A,
    ) -> Result<FmdpStep> {
        let state = sim.state_index();
        let (action, planned_first) = self.act(state, agent_rng)?;
        let reward = sim.step(action, env_rng)?;
        let replanned = self.observe(state, action, reward)? || planned_first;
        Ok(FmdpStep {
            action,
            reward,
            replanned,
        })
    }
}

/// Scores policies by their exact value under the true model, relative to the
/// optimal policy (both averaged uniformly over states).
#[derive(Debug, Clone)]
pub struct PolicyScorer {
    truth: FlatMdp,
    gamma: f64,
    optimal_policy: Vec<Option<usize>>,
    optimal_mean: f64,
    cache: Option<(Vec<Option<usize>>, f64)>,
}

impl PolicyScorer {
    pub fn new(mdp: &FactoredMdp) -> Result<Self> {
        let truth = mdp.flat_view();
        let gamma = mdp.gamma();
        let vi = ViConfig {
            gamma,
            tol: 1e-10,
            max_iter: 100_000,
        };
        let vf = value_iteration(&truth, &vi, None)?;
        let exact = evaluate_policy(&truth, &vf.policy, gamma)?;
        let optimal_mean = mean(&exact);
        Ok(PolicyScorer {
            truth,
            gamma,
            optimal_policy: vf.policy,
            optimal_mean,
            cache: None,
        })
    }

    pub fn optimal_policy(&self) -> &[Option<usize>] {
        &self.optimal_policy
    }

    pub fn optimal_value(&self) -> f64 {
        self.optimal_mean
    }

    pub fn value(&mut self, policy: &[Option<usize>]) -> Result<f64> {
        if let Some((cached, v)) = &self.cache {
            if cached.as_slice() == policy {
                return Ok(*v);
            }
        }
        let filled: Vec<Option<usize>> = policy.iter().map(|a| Some(a.unwrap_or(0))).collect();
        let v = mean(&evaluate_policy(&self.truth, &filled, self.gamma)?);
        self.cache = Some((policy.to_vec(), v));
        Ok(v)
    }

    /// `value(policy) / optimal value`.
    pub fn ratio(&mut self, policy: &[Option<usize>]) -> Result<f64> {
        Ok(self.value(policy)? / self.optimal_mean)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
