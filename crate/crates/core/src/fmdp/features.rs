use crate::error::Result;
use crate::fmdp::model::FactoredMdp;

/// Enumeration of reward parameters `(j, x[Z_j], a)` and the indicator `χ`.
#[derive(Debug, Clone)]
pub struct RewardFeatureMap {
    offsets: Vec<usize>,
    n_states: usize,
    n_actions: usize,
    n_params: usize,
    /// Active parameter indices for every flat `(state, action)`, state-major.
    active: Vec<Vec<usize>>,
}

impl RewardFeatureMap {
    pub fn new(mdp: &FactoredMdp) -> Self {
        let n_actions = mdp.n_actions();
        let mut offsets = Vec::with_capacity(mdp.reward_scopes().len());
        let mut n_params = 0;
        for scope in mdp.reward_scopes() {
            offsets.push(n_params);
            n_params += mdp.local_domain_size(scope) * n_actions;
        }
        let mut map = RewardFeatureMap {
            offsets,
            n_states: mdp.n_states(),
            n_actions,
            n_params,
            active: Vec::new(),
        };
        map.active = (0..mdp.n_states())
            .flat_map(|s| {
                let x = mdp.decode(s);
                (0..n_actions)
                    .map(|a| map.compute_active(mdp, &x, a))
                    .collect::<Vec<_>>()
            })
            .collect();
        map
    }

    /// `N_r`.
    pub fn n_params(&self) -> usize {
        self.n_params
    }

    /// `J`, the number of ones in every `χ`.
    pub fn n_terms(&self) -> usize {
        self.offsets.len()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn param_index(&self, term: usize, local: usize, action: usize) -> usize {
        self.offsets[term] + local * self.n_actions + action
    }

    fn compute_active(&self, mdp: &FactoredMdp, x: &[usize], a: usize) -> Vec<usize> {
        mdp.reward_scopes()
            .iter()
            .enumerate()
            .map(|(j, scope)| self.param_index(j, mdp.local_index(scope, x), a))
            .collect()
    }

    /// Active parameters of `χ(x, a)`, one per reward term.
    pub fn active(&self, mdp: &FactoredMdp, x: &[usize], a: usize) -> Result<Vec<usize>> {
        mdp.check_state(x)?;
        mdp.check_action(a)?;
        Ok(self.compute_active(mdp, x, a))
    }

    /// Cached active indices for the flat pair `(state_index, action)`.
    pub fn active_flat(&self, state: usize, action: usize) -> &[usize] {
        &self.active[state * self.n_actions + action]
    }

    pub fn chi(&self, mdp: &FactoredMdp, x: &[usize], a: usize) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.n_params];
        for k in self.active(mdp, x, a)? {
            v[k] = 1.0;
        }
        Ok(v)
    }

    /// `χ/√J`, the unit-norm input handed to the KWIK learner.
    pub fn scaled_chi_flat(&self, state: usize, action: usize) -> Vec<f64> {
        let scale = 1.0 / (self.n_terms() as f64).sqrt();
        let mut v = vec![0.0; self.n_params];
        for &k in self.active_flat(state, action) {
            v[k] = scale;
        }
        v
    }
}
