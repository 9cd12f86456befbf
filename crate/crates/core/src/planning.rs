//! Flat (enumerated) MDP view with value iteration and exact policy evaluation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next: usize,
    pub prob: f64,
    /// Reward collected on this particular outcome, on top of the row reward.
    pub reward: f64,
}

/// Enumerated MDP. Each `(state, action)` row is either absent (action not
/// applicable) or a list of weighted outcomes plus a deterministic row reward.
#[derive(Debug, Clone)]
pub struct FlatMdp {
    n_states: usize,
    n_actions: usize,
    rows: Vec<Option<Vec<Transition>>>,
    row_rewards: Vec<f64>,
    terminal: Vec<bool>,
}

impl FlatMdp {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        FlatMdp {
            n_states,
            n_actions,
            rows: vec![None; n_states * n_actions],
            row_rewards: vec![0.0; n_states * n_actions],
            terminal: vec![false; n_states],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn set_row(&mut self, state: usize, action: usize, outcomes: Vec<Transition>) {
        debug_assert!(outcomes.iter().all(|t| t.next < self.n_states));
        self.rows[state * self.n_actions + action] = Some(outcomes);
    }

    pub fn row(&self, state: usize, action: usize) -> Option<&[Transition]> {
        self.rows[state * self.n_actions + action].as_deref()
    }

    pub fn set_row_reward(&mut self, state: usize, action: usize, reward: f64) {
        self.row_rewards[state * self.n_actions + action] = reward;
    }

    pub fn row_reward(&self, state: usize, action: usize) -> f64 {
        self.row_rewards[state * self.n_actions + action]
    }

    /// Replaces every row reward at once; `rewards` is indexed `state * n_actions + action`.
    pub fn set_row_rewards(&mut self, rewards: &[f64]) {
        assert_eq!(rewards.len(), self.row_rewards.len());
        self.row_rewards.copy_from_slice(rewards);
    }

    pub fn set_terminal(&mut self, state: usize) {
        self.terminal[state] = true;
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        self.terminal[state]
    }

    fn has_terminal(&self) -> bool {
        self.terminal.iter().any(|&t| t)
    }

    /// One-step lookahead value of `(state, action)` under `values`.
    pub fn q_value(&self, state: usize, action: usize, values: &[f64], gamma: f64) -> Option<f64> {
        let row = self.row(state, action)?;
        let tail: f64 = row
            .iter()
            .map(|t| t.prob * (t.reward + gamma * values[t.next]))
            .sum();
        Some(self.row_reward(state, action) + tail)
    }

    /// Greedy action per state; ties go to the lowest action index.
    pub fn greedy_policy(&self, values: &[f64], gamma: f64) -> Vec<Option<usize>> {
        (0..self.n_states)
            .map(|s| {
                if self.terminal[s] {
                    return None;
                }
                best_action((0..self.n_actions).map(|a| self.q_value(s, a, values, gamma)))
            })
            .collect()
    }

    pub fn validate_probabilities(&self, tol: f64) -> Result<()> {
        for (idx, row) in self.rows.iter().enumerate() {
            if let Some(row) = row {
                let total: f64 = row.iter().map(|t| t.prob).sum();
                if (total - 1.0).abs() > tol || row.iter().any(|t| t.prob < 0.0) {
                    return Err(Error::invalid(format!(
                        "row (state {}, action {}) is not a distribution (sum {total})",
                        idx / self.n_actions,
                        idx % self.n_actions
                    )));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn best_action(q_values: impl Iterator<Item = Option<f64>>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (a, q) in q_values.enumerate() {
        if let Some(q) = q {
            if best.is_none_or(|(_, b)| q > b) {
                best = Some((a, q));
            }
        }
    }
    best.map(|(a, _)| a)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViConfig {
    pub gamma: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ViConfig {
    fn default() -> Self {
        ViConfig {
            gamma: 0.95,
            tol: 1e-6,
            max_iter: 10_000,
        }
    }
}

impl ViConfig {
    pub(crate) fn validate(&self, has_terminal: bool) -> Result<()> {
        if !(self.gamma >= 0.0) || self.gamma > 1.0 {
            return Err(Error::invalid(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        if self.gamma >= 1.0 && !has_terminal {
            return Err(Error::invalid(
                "gamma >= 1 requires terminal states for value iteration to be well defined",
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tolerance must be > 0, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    pub values: Vec<f64>,
    pub policy: Vec<Option<usize>>,
    pub iterations: usize,
    /// Sup-norm change of every sweep, in order.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

impl ValueFunction {
    pub fn residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }
}

/// Synchronous value iteration, optionally warm-started.
pub fn value_iteration(mdp: &FlatMdp, config: &ViConfig, init: Option<&[f64]>) -> Result<ValueFunction> {
    config.validate(mdp.has_terminal())?;
    let n = mdp.n_states();
    let mut values = match init {
        Some(v) if v.len() == n => v.to_vec(),
        Some(v) => {
            return Err(Error::invalid(format!(
                "initial values have length {}, expected {n}",
                v.len()
            )))
        }
        None => vec![0.0; n],
    };
    for (s, v) in values.iter_mut().enumerate() {
        if mdp.is_terminal(s) {
            *v = 0.0;
        }
    }
    let mut next = vec![0.0; n];
    let mut residuals = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_iter {
        let mut residual = 0.0f64;
        for s in 0..n {
            next[s] = if mdp.is_terminal(s) {
                0.0
            } else {
                (0..mdp.n_actions())
                    .filter_map(|a| mdp.q_value(s, a, &values, config.gamma))
                    .fold(None, |acc: Option<f64>, q| Some(acc.map_or(q, |b| b.max(q))))
                    .unwrap_or(0.0)
            };
            residual = residual.max((next[s] - values[s]).abs());
        }
        std::mem::swap(&mut values, &mut next);
        residuals.push(residual);
        if residual <= config.tol {
            converged = true;
            break;
        }
    }
    let policy = mdp.greedy_policy(&values, config.gamma);
    Ok(ValueFunction {
        iterations: residuals.len(),
        values,
        policy,
        residuals,
        converged,
    })
}

/// Exact value of a fixed policy by solving `(I − γP_π)V = R_π`.
///
/// States without an action (terminal, or nothing applicable) have value 0.
pub fn evaluate_policy(mdp: &FlatMdp, policy: &[Option<usize>], gamma: f64) -> Result<Vec<f64>> {
    let n = mdp.n_states();
    if policy.len() != n {
        return Err(Error::invalid(format!(
            "policy has length {}, expected {n}",
            policy.len()
        )));
    }
    let mut a = DMatrix::<f64>::identity(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for s in 0..n {
        if mdp.is_terminal(s) {
            continue;
        }
        let Some(action) = policy[s] else { continue };
        let row = mdp
            .row(s, action)
            .ok_or_else(|| Error::invalid(format!("policy picks inapplicable action {action} in state {s}")))?;
        b[s] = mdp.row_reward(s, action);
        for t in row {
            b[s] += t.prob * t.reward;
            if !mdp.is_terminal(t.next) {
                a[(s, t.next)] -= gamma * t.prob;
            }
        }
    }
    a.lu()
        .solve(&b)
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::invalid("policy evaluation system is singular (policy never terminates?)"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn det(next: usize, reward: f64) -> Vec<Transition> {
        vec![Transition {
            next,
            prob: 1.0,
            reward,
        }]
    }

    #[test]
    fn myopic_single_state() {
        let mut mdp = FlatMdp::new(1, 2);
        mdp.set_row(0, 0, det(0, 1.0));
        mdp.set_row(0, 1, det(0, 2.0));
        let cfg = ViConfig {
            gamma: 0.0,
            ..ViConfig::default()
        };
        let vf = value_iteration(&mdp, &cfg, None).unwrap();
        assert_eq!(vf.policy, vec![Some(1)]);
        assert_relative_eq!(vf.values[0], 2.0);
    }

    #[test]
    fn two_state_chain() {
        // s0 -a(r=0)-> s1, s1 absorbing with r=1; γ = 0.5 ⇒ V(s1)=2, V(s0)=1.
        let mut mdp = FlatMdp::new(2, 1);
        mdp.set_row(0, 0, det(1, 0.0));
        mdp.set_row(1, 0, det(1, 1.0));
        let cfg = ViConfig {
            gamma: 0.5,
            tol: 1e-12,
            max_iter: 10_000,
        };
        let vf = value_iteration(&mdp, &cfg, None).unwrap();
        assert!(vf.converged);
        assert_relative_eq!(vf.values[1], 2.0, epsilon = 1e-10);
        assert_relative_eq!(vf.values[0], 1.0, epsilon = 1e-10);
        let exact = evaluate_policy(&mdp, &vf.policy, 0.5).unwrap();
        assert_relative_eq!(exact[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(exact[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn ties_pick_lowest_action() {
        let mut mdp = FlatMdp::new(1, 3);
        for a in 0..3 {
            mdp.set_row(0, a, det(0, 5.0));
        }
        let vf = value_iteration(&mdp, &ViConfig::default(), None).unwrap();
        assert_eq!(vf.policy, vec![Some(0)]);
    }

    #[test]
    fn gamma_one_needs_terminals() {
        let mut mdp = FlatMdp::new(1, 1);
        mdp.set_row(0, 0, det(0, 1.0));
        let cfg = ViConfig {
            gamma: 1.0,
            ..ViConfig::default()
        };
        assert!(value_iteration(&mdp, &cfg, None).is_err());

        let mut episodic = FlatMdp::new(2, 1);
        episodic.set_row(0, 0, det(1, 3.0));
        episodic.set_terminal(1);
        let vf = value_iteration(&episodic, &cfg, None).unwrap();
        assert_relative_eq!(vf.values[0], 3.0);
        assert_eq!(vf.policy[1], None);
    }

    #[test]
    fn contraction_per_sweep() {
        let mut mdp = FlatMdp::new(3, 2);
        mdp.set_row(0, 0, vec![
            Transition { next: 1, prob: 0.5, reward: 1.0 },
            Transition { next: 2, prob: 0.5, reward: -1.0 },
        ]);
        mdp.set_row(0, 1, det(0, 0.3));
        mdp.set_row(1, 0, det(2, 2.0));
        mdp.set_row(2, 0, det(0, 0.0));
        mdp.set_row(2, 1, det(1, -0.5));
        let gamma = 0.9;
        let vf = value_iteration(&mdp, &ViConfig { gamma, tol: 1e-10, max_iter: 10_000 }, None).unwrap();
        for pair in vf.residuals.windows(2) {
            assert!(pair[1] <= gamma * pair[0] + 1e-12);
        }
    }
}
