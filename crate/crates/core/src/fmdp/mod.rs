//! Factored MDPs with learned additive rewards.

mod agent;
mod features;
mod learners;
mod model;
mod stocks;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use agent::{FmdpAgent, FmdpAgentConfig, FmdpSimulator, FmdpStep, PolicyScorer};
pub use features::RewardFeatureMap;
pub use learners::{
    InputScaling, KwikRmaxRewardModel, LeastSquaresRewardModel, OptimisticRewardLearner, RewardModel, TabularRewardModel,
};
pub use model::FactoredMdp;
pub use stocks::{stocks_make, StocksConfig, FALLING_REWARD, RISING_REWARD};

use crate::error::Result;
use crate::planning::ViConfig;

/// Reward-learning algorithms available for factored domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardAlgorithm {
    /// Optimistically initialised KWIK-LR.
    Alg2,
    /// KWIK-LR reporting `R_max` for ⊥.
    Alg1Rmax,
    Tabular,
    LrPlain,
    LrEgreedy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardAgentParams {
    pub r0: f64,
    pub r_max: f64,
    pub alpha0: f64,
    pub epsilon_greedy: f64,
    pub replan_interval: usize,
    pub scaling: InputScaling,
    pub vi: ViConfig,
}

impl Default for RewardAgentParams {
    fn default() -> Self {
        RewardAgentParams {
            r0: 10.0,
            r_max: 6.0,
            alpha0: 1.0,
            epsilon_greedy: 0.1,
            replan_interval: 5,
            scaling: InputScaling::Raw,
            vi: ViConfig::default(),
        }
    }
}

/// Builds an agent for `algorithm` on `mdp`.
pub fn build_agent(
    algorithm: RewardAlgorithm,
    mdp: &FactoredMdp,
    features: Arc<RewardFeatureMap>,
    params: &RewardAgentParams,
) -> Result<FmdpAgent> {
    let model: Box<dyn RewardModel> = match algorithm {
        RewardAlgorithm::Alg2 => Box::new(OptimisticRewardLearner::for_features(
            &features,
            params.r0,
            params.alpha0,
            params.scaling,
        )?),
        RewardAlgorithm::Alg1Rmax => Box::new(KwikRmaxRewardModel::new(&features, params.alpha0, params.r_max)?),
        RewardAlgorithm::Tabular => Box::new(TabularRewardModel::new(mdp.n_states(), mdp.n_actions(), params.r0)),
        RewardAlgorithm::LrPlain | RewardAlgorithm::LrEgreedy => {
            Box::new(LeastSquaresRewardModel::new(features.n_params()))
        }
    };
    let epsilon = match algorithm {
        RewardAlgorithm::LrEgreedy => params.epsilon_greedy,
        _ => 0.0,
    };
    let config = FmdpAgentConfig {
        replan_interval: params.replan_interval,
        epsilon,
        vi: ViConfig {
            gamma: mdp.gamma(),
            ..params.vi
        },
    };
    FmdpAgent::new(model, features, mdp.flat_view(), config)
}
