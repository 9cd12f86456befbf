use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmdp::{InputScaling, RewardAlgorithm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainId {
    Stocks,
    PaintPolish,
    Maze,
}

impl DomainId {
    pub const ALL: [DomainId; 3] = [DomainId::Stocks, DomainId::PaintPolish, DomainId::Maze];

    pub fn as_str(self) -> &'static str {
        match self {
            DomainId::Stocks => "stocks",
            DomainId::PaintPolish => "paint_polish",
            DomainId::Maze => "maze",
        }
    }

    pub fn is_episodic(self) -> bool {
        !matches!(self, DomainId::Stocks)
    }

    pub fn algorithms(self) -> &'static [AlgorithmId] {
        use AlgorithmId::*;
        match self {
            DomainId::Stocks => &[Alg2, Alg1Rmax, Tabular, LrPlain, LrEgreedy],
            DomainId::PaintPolish | DomainId::Maze => &[Alg3Kwik, Partition],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmId {
    Alg2,
    Alg1Rmax,
    Tabular,
    LrPlain,
    LrEgreedy,
    Alg3Kwik,
    Partition,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 7] = [
        AlgorithmId::Alg2,
        AlgorithmId::Alg1Rmax,
        AlgorithmId::Tabular,
        AlgorithmId::LrPlain,
        AlgorithmId::LrEgreedy,
        AlgorithmId::Alg3Kwik,
        AlgorithmId::Partition,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmId::Alg2 => "alg2",
            AlgorithmId::Alg1Rmax => "alg1_rmax",
            AlgorithmId::Tabular => "tabular",
            AlgorithmId::LrPlain => "lr_plain",
            AlgorithmId::LrEgreedy => "lr_egreedy",
            AlgorithmId::Alg3Kwik => "alg3_kwik",
            AlgorithmId::Partition => "partition",
        }
    }

    pub fn reward_algorithm(self) -> Option<RewardAlgorithm> {
        Some(match self {
            AlgorithmId::Alg2 => RewardAlgorithm::Alg2,
            AlgorithmId::Alg1Rmax => RewardAlgorithm::Alg1Rmax,
            AlgorithmId::Tabular => RewardAlgorithm::Tabular,
            AlgorithmId::LrPlain => RewardAlgorithm::LrPlain,
            AlgorithmId::LrEgreedy => RewardAlgorithm::LrEgreedy,
            AlgorithmId::Alg3Kwik | AlgorithmId::Partition => return None,
        })
    }
}

macro_rules! id_traits {
    ($ty:ty, $what:literal) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                Self::ALL
                    .into_iter()
                    .find(|v| v.as_str() == s)
                    .ok_or_else(|| Error::Config(format!(concat!("unknown ", $what, " `{}`"), s)))
            }
        }
    };
}

id_traits!(DomainId, "domain");
id_traits!(AlgorithmId, "algorithm");

/// One experiment: a domain, an algorithm, and how long to run it.
///
/// Every field has a default, so a JSON file only needs the keys it changes.
/// `alpha0` and `replan_interval` default per domain when absent: α₀ is 1.0
/// for Stocks and 0.2 for the schema domains; replanning happens every 5
/// steps on Stocks and every step elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainId,
    pub algorithm: AlgorithmId,
    pub trials: usize,
    /// Steps per trial (Stocks).
    pub steps: usize,
    /// Episodes per trial (Paint/Polish, Maze).
    pub episodes: usize,
    pub seed: u64,
    pub alpha0: Option<f64>,
    /// Optimistic initial reward.
    pub r0: f64,
    /// Reward reported for ⊥ by `alg1_rmax`.
    pub r_max: f64,
    /// Exploration rate of `lr_egreedy`.
    pub epsilon: f64,
    pub replan_interval: Option<usize>,
    pub gamma: f64,
    pub vi_tol: f64,
    pub partition_threshold: u64,
    pub episode_cap: usize,
    pub input_scaling: InputScaling,
    pub sectors: usize,
    pub stocks_per_sector: usize,
    /// Replaces the bundled domain file (STRIPS text or maze grid).
    pub domain_file: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Fill the `wall_ms` column. Off by default so logs are reproducible.
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            domain: DomainId::Stocks,
            algorithm: AlgorithmId::Alg2,
            trials: 20,
            steps: 250,
            episodes: 1000,
            seed: 0,
            alpha0: None,
            r0: 10.0,
            r_max: 6.0,
            epsilon: 0.1,
            replan_interval: None,
            gamma: 0.95,
            vi_tol: 1e-6,
            partition_threshold: 20,
            episode_cap: 200,
            input_scaling: InputScaling::Raw,
            sectors: 3,
            stocks_per_sector: 2,
            domain_file: None,
            out: None,
            record_wall_time: false,
        }
    }
}

impl ExperimentConfig {
    pub fn new(domain: DomainId, algorithm: AlgorithmId) -> Self {
        ExperimentConfig {
            domain,
            algorithm,
            ..Default::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0.unwrap_or(match self.domain {
            DomainId::Stocks => 1.0,
            _ => crate::schema::DEFAULT_ALPHA0,
        })
    }

    pub fn replan_interval(&self) -> usize {
        self.replan_interval.unwrap_or(match self.domain {
            DomainId::Stocks => 5,
            _ => 1,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !self.domain.algorithms().contains(&self.algorithm) {
            return bad(format!(
                "algorithm `{}` does not apply to domain `{}` (expected one of {})",
                self.algorithm,
                self.domain,
                self.domain
                    .algorithms()
                    .iter()
                    .map(|a| a.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.domain.is_episodic() {
            if self.episodes == 0 {
                return bad("episodes must be >= 1".into());
            }
            if self.episode_cap == 0 {
                return bad("episode_cap must be >= 1".into());
            }
        } else if self.steps == 0 {
            return bad("steps must be >= 1".into());
        }
        if !(self.alpha0() > 0.0) || !self.alpha0().is_finite() {
            return bad(format!("alpha0 must be positive, got {}", self.alpha0()));
        }
        if !self.r0.is_finite() || !self.r_max.is_finite() {
            return bad("r0 and r_max must be finite".into());
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon must lie in [0, 1], got {}", self.epsilon));
        }
        if self.replan_interval() == 0 {
            return bad("replan_interval must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1), got {}", self.gamma));
        }
        if !(self.vi_tol > 0.0) {
            return bad(format!("vi_tol must be positive, got {}", self.vi_tol));
        }
        if self.partition_threshold == 0 {
            return bad("partition_threshold must be >= 1".into());
        }
        if self.sectors == 0 || self.stocks_per_sector == 0 {
            return bad("sectors and stocks_per_sector must be >= 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_uses_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"domain": "maze", "algorithm": "partition", "trials": 3}"#).unwrap();
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.episodes, 1000);
        assert_eq!(cfg.alpha0(), 0.2);
        assert_eq!(cfg.replan_interval(), 1);
        let stocks = ExperimentConfig::default();
        assert_eq!(stocks.replan_interval(), 5);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            r#"{"trials": 0}"#,
            r#"{"domain": "stocks", "algorithm": "partition"}"#,
            r#"{"domain": "moon"}"#,
            r#"{"gamma": 1.0}"#,
            r#"{"unknown_key": 1}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn ids_parse_and_print() {
        for d in DomainId::ALL {
            assert_eq!(d.as_str().parse::<DomainId>().unwrap(), d);
        }
        for a in AlgorithmId::ALL {
            assert_eq!(a.to_string().parse::<AlgorithmId>().unwrap(), a);
        }
        assert!("alg9".parse::<AlgorithmId>().is_err());
    }

    #[test]
    fn json_round_trip() {
        let cfg = ExperimentConfig::new(DomainId::PaintPolish, AlgorithmId::Alg3Kwik);
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }
}
