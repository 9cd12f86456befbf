use rand::Rng;

use crate::error::{Error, Result};
use crate::planning::{FlatMdp, Transition};

/// Factored MDP with local-scope transition CPTs and an additive reward.
///
/// Joint states are encoded mixed-radix with factor 0 as the least
/// significant digit. CPT and reward tables are indexed by the local
/// assignment of their scope (encoded the same way) and then by action.
#[derive(Debug, Clone)]
pub struct FactoredMdp {
    factor_domains: Vec<usize>,
    n_actions: usize,
    scopes: Vec<Vec<usize>>,
    /// `cpts[i][(local * n_actions + a) * domain_i + value]`
    cpts: Vec<Vec<f64>>,
    reward_scopes: Vec<Vec<usize>>,
    /// `true_rewards[j][local * n_actions + a]`; simulator side only.
    true_rewards: Vec<Vec<f64>>,
    gamma: f64,
    start_state: Vec<usize>,
}

impl FactoredMdp {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        factor_domains: Vec<usize>,
        n_actions: usize,
        scopes: Vec<Vec<usize>>,
        cpts: Vec<Vec<f64>>,
        reward_scopes: Vec<Vec<usize>>,
        true_rewards: Vec<Vec<f64>>,
        gamma: f64,
        start_state: Vec<usize>,
    ) -> Result<Self> {
        let m = factor_domains.len();
        if m == 0 || factor_domains.contains(&0) {
            return Err(Error::invalid("every factor needs a non-empty domain"));
        }
        if n_actions == 0 {
            return Err(Error::invalid("at least one action is required"));
        }
        if scopes.len() != m || cpts.len() != m {
            return Err(Error::invalid("need one scope and one CPT per factor"));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::invalid(format!("gamma must lie in [0, 1), got {gamma}")));
        }
        if reward_scopes.len() != true_rewards.len() {
            return Err(Error::invalid("need one reward table per reward scope"));
        }
        let check_scope = |scope: &[usize]| -> Result<usize> {
            if let Some(&bad) = scope.iter().find(|&&f| f >= m) {
                return Err(Error::invalid(format!("scope references unknown factor {bad}")));
            }
            Ok(scope.iter().map(|&f| factor_domains[f]).product())
        };
        for (i, (scope, cpt)) in scopes.iter().zip(&cpts).enumerate() {
            let locals = check_scope(scope)?;
            let d = factor_domains[i];
            if cpt.len() != locals * n_actions * d {
                return Err(Error::invalid(format!("CPT {i} has wrong size")));
            }
            for (r, row) in cpt.chunks_exact(d).enumerate() {
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > 1e-12 || row.iter().any(|&p| p < 0.0) {
                    return Err(Error::invalid(format!(
                        "CPT {i} row {r} is not a distribution (sum {total})"
                    )));
                }
            }
        }
        for (j, (scope, table)) in reward_scopes.iter().zip(&true_rewards).enumerate() {
            let locals = check_scope(scope)?;
            if table.len() != locals * n_actions {
                return Err(Error::invalid(format!("reward table {j} has wrong size")));
            }
        }
        let mdp = FactoredMdp {
            factor_domains,
            n_actions,
            scopes,
            cpts,
            reward_scopes,
            true_rewards,
            gamma,
            start_state,
        };
        mdp.check_state(&mdp.start_state)?;
        Ok(mdp)
    }

    pub fn n_factors(&self) -> usize {
        self.factor_domains.len()
    }

    pub fn factor_domains(&self) -> &[usize] {
        &self.factor_domains
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_states(&self) -> usize {
        self.factor_domains.iter().product()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn start_state(&self) -> &[usize] {
        &self.start_state
    }

    pub fn reward_scopes(&self) -> &[Vec<usize>] {
        &self.reward_scopes
    }

    pub fn transition_scopes(&self) -> &[Vec<usize>] {
        &self.scopes
    }

    pub fn check_state(&self, state: &[usize]) -> Result<()> {
        if state.len() != self.n_factors()
            || state.iter().zip(&self.factor_domains).any(|(&v, &d)| v >= d)
        {
            return Err(Error::invalid(format!("invalid joint assignment {state:?}")));
        }
        Ok(())
    }

    pub fn check_action(&self, action: usize) -> Result<()> {
        if action >= self.n_actions {
            return Err(Error::invalid(format!(
                "action {action} out of range (have {})",
                self.n_actions
            )));
        }
        Ok(())
    }

    pub fn encode(&self, state: &[usize]) -> usize {
        encode_mixed(state.iter().copied(), self.factor_domains.iter().copied())
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        self.factor_domains
            .iter()
            .map(|&d| {
                let v = index % d;
                index /= d;
                v
            })
            .collect()
    }

    /// Encoded assignment of `state` restricted to `scope`.
    pub fn local_index(&self, scope: &[usize], state: &[usize]) -> usize {
        encode_mixed(
            scope.iter().map(|&f| state[f]),
            scope.iter().map(|&f| self.factor_domains[f]),
        )
    }

    pub fn local_domain_size(&self, scope: &[usize]) -> usize {
        scope.iter().map(|&f| self.factor_domains[f]).product()
    }

    /// `R_j(x[Z_j], a)`.
    pub fn local_reward(&self, j: usize, state: &[usize], action: usize) -> f64 {
        let local = self.local_index(&self.reward_scopes[j], state);
        self.true_rewards[j][local * self.n_actions + action]
    }

    pub fn true_reward(&self, state: &[usize], action: usize) -> f64 {
        (0..self.reward_scopes.len())
            .map(|j| self.local_reward(j, state, action))
            .sum()
    }

    /// Largest attainable total reward, `Σ_j max R_j`.
    pub fn max_reward(&self) -> f64 {
        self.true_rewards
            .iter()
            .map(|t| t.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .sum()
    }

    /// `P_i(value | x[Γ_i], a)`.
    pub fn factor_prob(&self, factor: usize, state: &[usize], action: usize, value: usize) -> f64 {
        let d = self.factor_domains[factor];
        let local = self.local_index(&self.scopes[factor], state);
        self.cpts[factor][(local * self.n_actions + action) * d + value]
    }

    pub fn transition_prob(&self, state: &[usize], action: usize, next: &[usize]) -> f64 {
        (0..self.n_factors())
            .map(|i| self.factor_prob(i, state, action, next[i]))
            .product()
    }

    /// Samples the next joint state, consuming exactly one uniform draw per
    /// factor so paired runs stay aligned whatever actions they take.
    pub fn sample_next<R: Rng + ?Sized>(&self, state: &[usize], action: usize, rng: &mut R) -> Vec<usize> {
        (0..self.n_factors())
            .map(|i| {
                let u: f64 = rng.gen();
                let d = self.factor_domains[i];
                let mut acc = 0.0;
                for v in 0..d {
                    acc += self.factor_prob(i, state, action, v);
                    if u < acc {
                        return v;
                    }
                }
                d - 1
            })
            .collect()
    }

    /// Enumerated view with the true rewards as row rewards.
    pub fn flat_view(&self) -> FlatMdp {
        let n = self.n_states();
        let mut flat = FlatMdp::new(n, self.n_actions);
        let states: Vec<Vec<usize>> = (0..n).map(|s| self.decode(s)).collect();
        for (s, x) in states.iter().enumerate() {
            for a in 0..self.n_actions {
                let row: Vec<Transition> = states
                    .iter()
                    .enumerate()
                    .filter_map(|(t, y)| {
                        let prob = self.transition_prob(x, a, y);
                        (prob > 0.0).then_some(Transition {
                            next: t,
                            prob,
                            reward: 0.0,
                        })
                    })
                    .collect();
                flat.set_row(s, a, row);
                flat.set_row_reward(s, a, self.true_reward(x, a));
            }
        }
        flat
    }
}

pub(crate) fn encode_mixed(
    values: impl Iterator<Item = usize>,
    radices: impl Iterator<Item = usize>,
) -> usize {
    let mut index = 0;
    let mut stride = 1;
    for (v, d) in values.zip(radices) {
        index += v * stride;
        stride *= d;
    }
    index
}
