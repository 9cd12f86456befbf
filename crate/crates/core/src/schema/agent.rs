//! The transition-probability learning agent and episodic simulation.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::planning::{ValueFunction, ViConfig};
use crate::schema::domain::SchemaModel;
use crate::schema::learner::ClassPredictor;
use crate::schema::optimistic_vi::{optimistic_value_iteration, RowPredictions};

pub const DEFAULT_EPISODE_CAP: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemaAgentConfig {
    pub replan_interval: usize,
    pub vi: ViConfig,
}

impl Default for SchemaAgentConfig {
    fn default() -> Self {
        SchemaAgentConfig {
            replan_interval: 1,
            vi: ViConfig::default(),
        }
    }
}

/// Plans optimistically with the predictor's class probabilities, acts
/// greedily, and feeds every observed class back to the predictor.
#[derive(Debug)]
pub struct SchemaAgent {
    model: Arc<SchemaModel>,
    predictor: Box<dyn ClassPredictor>,
    config: SchemaAgentConfig,
    policy: Vec<Option<usize>>,
    values: Option<Vec<f64>>,
    steps: u64,
}

impl SchemaAgent {
    pub fn new(model: Arc<SchemaModel>, predictor: Box<dyn ClassPredictor>, config: SchemaAgentConfig) -> Result<Self> {
        if config.replan_interval == 0 {
            return Err(Error::invalid("replan interval must be >= 1"));
        }
        let n = model.n_states();
        Ok(SchemaAgent {
            model,
            predictor,
            config,
            policy: vec![None; n],
            values: None,
            steps: 0,
        })
    }

    pub fn model(&self) -> &SchemaModel {
        &self.model
    }

    pub fn predictor(&self) -> &dyn ClassPredictor {
        self.predictor.as_ref()
    }

    pub fn policy(&self) -> &[Option<usize>] {
        &self.policy
    }

    pub fn bottom_count(&self) -> u64 {
        self.predictor.bottom_count()
    }

    /// Current predictions for every row of the model.
    pub fn predictions(&self) -> Result<RowPredictions> {
        let m = &self.model;
        let mut rows = Vec::with_capacity(m.n_states() * m.n_actions());
        for s in 0..m.n_states() {
            for a in 0..m.n_actions() {
                rows.push(match m.classes(s, a) {
                    Some(classes) => Some(self.predictor.predict_row(m.learner_of(a), classes)?),
                    None => None,
                });
            }
        }
        Ok(rows)
    }

    pub fn plan(&mut self) -> Result<ValueFunction> {
        let preds = self.predictions()?;
        let vf = optimistic_value_iteration(&self.model, &preds, &self.config.vi, self.values.as_deref())?;
        self.policy = vf.policy.clone();
        self.values = Some(vf.values.clone());
        Ok(vf)
    }

    pub fn act(&mut self, state: usize) -> Result<usize> {
        if self.steps.is_multiple_of(self.config.replan_interval as u64) || self.values.is_none() {
            self.plan()?;
        }
        self.policy[state]
            .ok_or_else(|| Error::invalid(format!("no applicable action in state {}", self.model.state_label(state))))
    }

    /// Learns from the class observed after taking `action` in `state`.
    pub fn observe(&mut self, state: usize, action: usize, observed_class: usize) -> Result<()> {
        let classes = self
            .model
            .classes(state, action)
            .ok_or_else(|| Error::NotApplicable(self.model.action_name(action).to_string()))?;
        self.predictor
            .observe_row(self.model.learner_of(action), classes, observed_class)?;
        self.steps += 1;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOutcome {
    pub initial_state: usize,
    pub steps: usize,
    pub total_reward: f64,
    /// Hit the step cap before reaching a terminal state.
    pub truncated: bool,
    pub bottom_count: u64,
}

/// Runs one episode from `initial_state`. The environment draws exactly one
/// uniform from `env_rng` per step.
pub fn run_episode<R: Rng + ?Sized>(
    agent: &mut SchemaAgent,
    initial_state: usize,
    cap: usize,
    env_rng: &mut R,
) -> Result<EpisodeOutcome> {
    let model = Arc::clone(&agent.model);
    let mut state = initial_state;
    let mut steps = 0;
    let mut total_reward = 0.0;
    while !model.is_terminal(state) && steps < cap {
        let action = agent.act(state)?;
        let class = model.sample_class(state, action, env_rng)?;
        agent.observe(state, action, class)?;
        let c = &model.classes(state, action).expect("action was applicable")[class];
        total_reward += c.reward;
        state = c.next;
        steps += 1;
    }
    Ok(EpisodeOutcome {
        initial_state,
        steps,
        total_reward,
        truncated: !model.is_terminal(state),
        bottom_count: agent.bottom_count(),
    })
}
