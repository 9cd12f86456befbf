use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmdp::{build_agent, stocks_make, FmdpSimulator, PolicyScorer, RewardAgentParams, RewardFeatureMap, StocksConfig};
use crate::harness::config::{AlgorithmId, DomainId, ExperimentConfig};
use crate::planning::ViConfig;
use crate::schema::{
    make_maze, make_paint_polish, run_episode, ClassPredictor, MazeDomain, PartitionBaseline, SchemaAgent,
    SchemaAgentConfig, SchemaLearner, SchemaModel, StripsDomain,
};

/// Independent random streams of one trial.
///
/// Every stream starts from `ChaCha8Rng::seed_from_u64(seed)` and selects
/// stream number `4 * trial + role`. Streams depend only on the seed, trial
/// and role, never on the algorithm, so algorithms run with the same seed see
/// the same problem instance, initial states and environment noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    /// Transition sampling.
    Environment = 0,
    /// Agent-side randomness (ε-greedy exploration).
    Agent = 1,
    /// Problem instance and initial states.
    Instance = 2,
}

pub fn trial_rng(seed: u64, trial: usize, role: StreamRole) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 * 4 + role as u64);
    rng
}

/// One log record. For Stocks `index` is the step and `metric` the reward
/// earned; for the episodic domains `index` is the episode and `metric` the
/// number of steps it took.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub trial: usize,
    pub index: usize,
    pub metric: f64,
    /// Running reward total within the trial.
    pub cumulative: f64,
    pub bottom_count: u64,
    /// Value of the current greedy policy relative to the optimal one
    /// (Stocks only).
    pub policy_value: Option<f64>,
    /// The episode hit the step cap (episodic domains only).
    pub truncated: Option<bool>,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub rows: Vec<LogRow>,
}

impl RunLog {
    /// Rows strictly increasing in (trial, index) and nondecreasing
    /// bottom counts within each trial.
    pub fn validate(&self) -> Result<()> {
        for pair in self.rows.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if (a.trial, a.index) >= (b.trial, b.index) {
                return Err(Error::invalid(format!(
                    "log rows out of order at trial {} index {}",
                    b.trial, b.index
                )));
            }
            if a.trial == b.trial && b.bottom_count < a.bottom_count {
                return Err(Error::invalid(format!(
                    "bottom_count decreases at trial {} index {}",
                    b.trial, b.index
                )));
            }
        }
        Ok(())
    }

    pub fn trials(&self) -> usize {
        self.rows.iter().map(|r| r.trial + 1).max().unwrap_or(0)
    }

    pub fn trial(&self, trial: usize) -> impl Iterator<Item = &LogRow> {
        self.rows.iter().filter(move |r| r.trial == trial)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Trials on the rayon pool. Without the `parallel` feature this runs
    /// sequentially.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Runs every trial of `config` and merges the rows in (trial, index) order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunLog> {
    run_experiment_with(config, Execution::default())
}

pub fn run_experiment_with(config: &ExperimentConfig, execution: Execution) -> Result<RunLog> {
    config.validate()?;
    let schema_model = if config.domain.is_episodic() {
        Some(schema_model(config)?)
    } else {
        None
    };
    let run_trial = |trial: usize| -> Result<Vec<LogRow>> {
        match &schema_model {
            Some(model) => schema_trial(config, model, trial).map(|(rows, _)| rows),
            None => stocks_trial(config, trial),
        }
    };
    let per_trial = map_trials(config.trials, execution, run_trial)?;
    let log = RunLog {
        rows: per_trial.into_iter().flatten().collect(),
    };
    debug_assert!(log.validate().is_ok());
    Ok(log)
}

fn map_trials<T, F>(trials: usize, execution: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..trials).into_par_iter().map(f).collect()
        }
        _ => (0..trials).map(f).collect(),
    }
}

fn vi_config(config: &ExperimentConfig) -> ViConfig {
    ViConfig {
        gamma: config.gamma,
        tol: config.vi_tol,
        ..ViConfig::default()
    }
}

fn elapsed_ms(config: &ExperimentConfig, start: Instant) -> Option<f64> {
    config
        .record_wall_time
        .then(|| start.elapsed().as_secs_f64() * 1e3)
}

/// One Stocks trial. The instance (reward constants and start state) comes
/// from the trial's instance stream.
pub fn stocks_trial(config: &ExperimentConfig, trial: usize) -> Result<Vec<LogRow>> {
    let algorithm = config
        .algorithm
        .reward_algorithm()
        .ok_or_else(|| Error::Config(format!("`{}` is not a reward-learning algorithm", config.algorithm)))?;
    let start = Instant::now();
    let stocks = StocksConfig {
        sectors: config.sectors,
        stocks_per_sector: config.stocks_per_sector,
        gamma: config.gamma,
        ..StocksConfig::default()
    };
    let mdp = Arc::new(stocks_make(&stocks, &mut trial_rng(config.seed, trial, StreamRole::Instance))?);
    let features = Arc::new(RewardFeatureMap::new(&mdp));
    let params = RewardAgentParams {
        r0: config.r0,
        r_max: config.r_max,
        alpha0: config.alpha0(),
        epsilon_greedy: config.epsilon,
        replan_interval: config.replan_interval(),
        scaling: config.input_scaling,
        vi: vi_config(config),
    };
    let mut agent = build_agent(algorithm, &mdp, features, &params)?;
    let mut scorer = PolicyScorer::new(&mdp)?;
    let mut sim = FmdpSimulator::new(Arc::clone(&mdp));
    let mut env_rng = trial_rng(config.seed, trial, StreamRole::Environment);
    let mut agent_rng = trial_rng(config.seed, trial, StreamRole::Agent);
    let mut rows = Vec::with_capacity(config.steps);
    let mut cumulative = 0.0;
    for step in 1..=config.steps {
        let outcome = agent.step(&mut sim, &mut env_rng, &mut agent_rng)?;
        cumulative += outcome.reward;
        rows.push(LogRow {
            trial,
            index: step,
            metric: outcome.reward,
            cumulative,
            bottom_count: agent.bottom_count(),
            policy_value: Some(scorer.ratio(agent.policy())?),
            truncated: None,
            wall_ms: elapsed_ms(config, start),
        });
    }
    Ok(rows)
}

/// Compiles the configured episodic domain, reading `domain_file` if set.
pub fn schema_model(config: &ExperimentConfig) -> Result<Arc<SchemaModel>> {
    let text = match &config.domain_file {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?),
        None => None,
    };
    let model = match config.domain {
        DomainId::PaintPolish => match text {
            Some(t) => SchemaModel::compile(&StripsDomain::parse(&t)?)?,
            None => SchemaModel::compile(&make_paint_polish())?,
        },
        DomainId::Maze => match text {
            Some(t) => SchemaModel::compile(&MazeDomain::parse(&t)?)?,
            None => SchemaModel::compile(&make_maze())?,
        },
        DomainId::Stocks => return Err(Error::Config("stocks is not a schema domain".into())),
    };
    Ok(Arc::new(model))
}

pub fn schema_agent(config: &ExperimentConfig, model: &Arc<SchemaModel>) -> Result<SchemaAgent> {
    let predictor: Box<dyn ClassPredictor> = match config.algorithm {
        AlgorithmId::Alg3Kwik => Box::new(SchemaLearner::new(model.learner_dims(), config.alpha0())?),
        AlgorithmId::Partition => Box::new(PartitionBaseline::new(config.partition_threshold)?),
        other => return Err(Error::Config(format!("`{other}` does not learn transition probabilities"))),
    };
    SchemaAgent::new(
        Arc::clone(model),
        predictor,
        SchemaAgentConfig {
            replan_interval: config.replan_interval(),
            vi: vi_config(config),
        },
    )
}

/// One episodic trial. Initial states come from the instance stream (one
/// draw per episode) and transitions from the environment stream.
pub fn schema_trial(
    config: &ExperimentConfig,
    model: &Arc<SchemaModel>,
    trial: usize,
) -> Result<(Vec<LogRow>, SchemaAgent)> {
    let start = Instant::now();
    let mut agent = schema_agent(config, model)?;
    let mut init_rng = trial_rng(config.seed, trial, StreamRole::Instance);
    let mut env_rng = trial_rng(config.seed, trial, StreamRole::Environment);
    let mut rows = Vec::with_capacity(config.episodes);
    let mut cumulative = 0.0;
    for episode in 1..=config.episodes {
        let s0 = model.sample_initial(&mut init_rng);
        let outcome = run_episode(&mut agent, s0, config.episode_cap, &mut env_rng)?;
        cumulative += outcome.total_reward;
        rows.push(LogRow {
            trial,
            index: episode,
            metric: outcome.steps as f64,
            cumulative,
            bottom_count: outcome.bottom_count,
            policy_value: None,
            truncated: Some(outcome.truncated),
            wall_ms: elapsed_ms(config, start),
        });
    }
    Ok((rows, agent))
}
