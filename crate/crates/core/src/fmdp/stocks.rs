//! The Stocks domain: sectors of binary rising/falling stocks.
//!
//! One action per subset of owned sectors (bit `k` set ⇔ sector `k` owned).
//! Owning a rising stock pays a constant drawn from `[0.5, 1.5]`, owning a
//! falling one a constant from `[-1.5, -0.5]`; unowned stocks pay nothing.
//! Dynamics are action independent: a stock rises next step with probability
//! `base + slope · (fraction of its sector currently rising)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmdp::model::FactoredMdp;

pub const RISING_REWARD: (f64, f64) = (0.5, 1.5);
pub const FALLING_REWARD: (f64, f64) = (-1.5, -0.5);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StocksConfig {
    pub sectors: usize,
    pub stocks_per_sector: usize,
    pub rise_base: f64,
    pub rise_slope: f64,
    pub gamma: f64,
}

impl Default for StocksConfig {
    fn default() -> Self {
        StocksConfig {
            sectors: 3,
            stocks_per_sector: 2,
            rise_base: 0.1,
            rise_slope: 0.8,
            gamma: 0.95,
        }
    }
}

impl StocksConfig {
    pub fn n_stocks(&self) -> usize {
        self.sectors * self.stocks_per_sector
    }

    pub fn sector_of(&self, stock: usize) -> usize {
        stock / self.stocks_per_sector
    }

    pub fn owns(&self, action: usize, sector: usize) -> bool {
        action >> sector & 1 == 1
    }
}

/// Builds a Stocks instance; reward constants and the start state come from `rng`.
pub fn stocks_make<R: Rng + ?Sized>(config: &StocksConfig, rng: &mut R) -> Result<FactoredMdp> {
    if config.sectors == 0 || config.stocks_per_sector == 0 {
        return Err(Error::invalid("Stocks needs at least one sector and one stock per sector"));
    }
    if config.sectors > 16 {
        return Err(Error::invalid("at most 16 sectors are supported (2^sectors actions)"));
    }
    let lo = config.rise_base;
    let hi = config.rise_base + config.rise_slope;
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
        return Err(Error::invalid("rise probabilities must stay within [0, 1]"));
    }
    let n = config.n_stocks();
    let n_actions = 1usize << config.sectors;
    let spp = config.stocks_per_sector;

    let mut scopes = Vec::with_capacity(n);
    let mut cpts = Vec::with_capacity(n);
    for stock in 0..n {
        let sector = config.sector_of(stock);
        let scope: Vec<usize> = (sector * spp..(sector + 1) * spp).collect();
        let mut cpt = Vec::with_capacity((1 << spp) * n_actions * 2);
        for local in 0..(1usize << spp) {
            let rising = local.count_ones() as f64 / spp as f64;
            let p_rise = config.rise_base + config.rise_slope * rising;
            for _ in 0..n_actions {
                cpt.push(1.0 - p_rise);
                cpt.push(p_rise);
            }
        }
        scopes.push(scope);
        cpts.push(cpt);
    }

    let mut reward_scopes = Vec::with_capacity(n);
    let mut tables = Vec::with_capacity(n);
    for stock in 0..n {
        let up = rng.gen_range(RISING_REWARD.0..=RISING_REWARD.1);
        let down = rng.gen_range(FALLING_REWARD.0..=FALLING_REWARD.1);
        let sector = config.sector_of(stock);
        let mut table = Vec::with_capacity(2 * n_actions);
        for value in 0..2 {
            for action in 0..n_actions {
                let r = match (config.owns(action, sector), value) {
                    (false, _) => 0.0,
                    (true, 1) => up,
                    (true, _) => down,
                };
                table.push(r);
            }
        }
        reward_scopes.push(vec![stock]);
        tables.push(table);
    }

    let start: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    FactoredMdp::new(vec![2; n], n_actions, scopes, cpts, reward_scopes, tables, config.gamma, start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fmdp::features::RewardFeatureMap;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn make(seed: u64) -> FactoredMdp {
        stocks_make(&StocksConfig::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn counts_for_three_by_two() {
        let mdp = make(1);
        assert_eq!(mdp.n_states(), 64);
        assert_eq!(mdp.n_actions(), 8);
        assert_eq!(mdp.reward_scopes().len(), 6);
        assert_eq!(RewardFeatureMap::new(&mdp).n_params(), 6 * 2 * 8);
    }

    #[test]
    fn reward_constants_in_range() {
        for seed in 0..20 {
            let mdp = make(seed);
            for j in 0..6 {
                let everything = 7;
                let up = mdp.local_reward(j, &[1; 6], everything);
                let down = mdp.local_reward(j, &[0; 6], everything);
                assert!((0.5..=1.5).contains(&up));
                assert!((-1.5..=-0.5).contains(&down));
                assert_eq!(mdp.local_reward(j, &[1; 6], 0), 0.0);
            }
            assert!(mdp.max_reward() <= 9.0);
        }
    }

    #[test]
    fn only_owned_sectors_pay() {
        let mdp = make(3);
        let x = [1, 1, 0, 0, 1, 0];
        // own sector 0 only
        let r = mdp.true_reward(&x, 0b001);
        let expected = mdp.local_reward(0, &x, 0b111) + mdp.local_reward(1, &x, 0b111);
        assert!((r - expected).abs() < 1e-15);
        assert_eq!(mdp.true_reward(&x, 0), 0.0);
    }

    #[test]
    fn dynamics_follow_sector_fraction() {
        let mdp = make(4);
        // both stocks of sector 0 rising → p(rise) = 0.9
        let x = [1, 1, 0, 0, 1, 0];
        assert!((mdp.factor_prob(0, &x, 5, 1) - 0.9).abs() < 1e-12);
        assert!((mdp.factor_prob(2, &x, 5, 1) - 0.1).abs() < 1e-12);
        assert!((mdp.factor_prob(4, &x, 0, 1) - 0.5).abs() < 1e-12);
        mdp.flat_view().validate_probabilities(1e-12).unwrap();
    }

    #[test]
    fn rejects_empty_config() {
        let cfg = StocksConfig {
            sectors: 0,
            ..StocksConfig::default()
        };
        assert!(stocks_make(&cfg, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
