//! The domain interface shared by STRIPS and object-oriented environments,
//! equivalence-class construction, and the compiled (indexed) model that
//! learners and planners operate on.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::{Debug, Display};

use rand::Rng;

use crate::error::{Error, Result};
use crate::planning::{FlatMdp, Transition};

/// An environment whose ground actions are instances of stochastic action
/// schemas. Each ground action belongs to one learner (its schema, or its
/// abstract action) whose effect list has a fixed, canonical order.
pub trait SchemaDomain {
    type State: Clone + Ord + Debug + Display;

    fn action_names(&self) -> Vec<String>;

    /// Index of the learner that owns ground action `action`.
    fn learner_of(&self, action: usize) -> usize;

    /// Effect-list length of every learner.
    fn learner_dims(&self) -> Vec<usize>;

    fn applicable(&self, state: &Self::State, action: usize) -> bool;

    /// Next state produced by each effect, in effect order. Only called when
    /// `action` is applicable.
    fn outcomes(&self, state: &Self::State, action: usize) -> Result<Vec<Self::State>>;

    fn reward(&self, state: &Self::State, action: usize, next: &Self::State) -> f64;

    fn is_terminal(&self, state: &Self::State) -> bool;

    /// True effect probabilities of a learner. Simulator-side only.
    fn effect_probs(&self, learner: usize) -> &[f64];

    /// Support of the initial-state distribution, which is uniform over it.
    fn initial_states(&self) -> Vec<Self::State>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectClass<S> {
    /// Effect indices, ascending.
    pub members: Vec<usize>,
    pub next: S,
    pub indicator: Vec<f64>,
}

/// Classes ordered by their lowest member.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceClassing<S> {
    pub classes: Vec<EffectClass<S>>,
}

impl<S: PartialEq> EquivalenceClassing<S> {
    /// Index of the class whose next state is `next`.
    pub fn class_of(&self, next: &S) -> Option<usize> {
        self.classes.iter().position(|c| &c.next == next)
    }

    /// Multiset of indicator vectors in canonical (sorted) order.
    pub fn signature(&self) -> Vec<Vec<u8>> {
        signature_of(self.classes.iter().map(|c| c.indicator.as_slice()))
    }
}

pub(crate) fn signature_of<'a>(indicators: impl Iterator<Item = &'a [f64]>) -> Vec<Vec<u8>> {
    let mut sig: Vec<Vec<u8>> = indicators
        .map(|x| x.iter().map(|&v| u8::from(v > 0.5)).collect())
        .collect();
    sig.sort();
    sig
}

/// Groups effects of `action` by the next state they produce from `state`.
pub fn equivalence_classes<D: SchemaDomain>(
    domain: &D,
    state: &D::State,
    action: usize,
) -> Result<EquivalenceClassing<D::State>> {
    if !domain.applicable(state, action) {
        let name = domain
            .action_names()
            .get(action)
            .cloned()
            .unwrap_or_else(|| format!("#{action}"));
        return Err(Error::NotApplicable(name));
    }
    let outcomes = domain.outcomes(state, action)?;
    let dim = outcomes.len();
    let mut classes: Vec<EffectClass<D::State>> = Vec::new();
    for (i, next) in outcomes.into_iter().enumerate() {
        match classes.iter_mut().find(|c| c.next == next) {
            Some(c) => {
                c.members.push(i);
                c.indicator[i] = 1.0;
            }
            None => {
                let mut indicator = vec![0.0; dim];
                indicator[i] = 1.0;
                classes.push(EffectClass {
                    members: vec![i],
                    next,
                    indicator,
                });
            }
        }
    }
    Ok(EquivalenceClassing { classes })
}

/// One equivalence class of a compiled (state, action) row.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledClass {
    pub members: Vec<usize>,
    pub indicator: Vec<f64>,
    pub next: usize,
    pub reward: f64,
    /// Sum of the member effects' true probabilities (evaluation only).
    pub true_prob: f64,
}

/// The reachable state space of a domain with every (state, action) row
/// pre-split into equivalence classes.
#[derive(Debug, Clone)]
pub struct SchemaModel {
    state_labels: Vec<String>,
    action_names: Vec<String>,
    action_learner: Vec<usize>,
    learner_dims: Vec<usize>,
    learner_probs: Vec<Vec<f64>>,
    rows: Vec<Option<Vec<CompiledClass>>>,
    terminal: Vec<bool>,
    initial: Vec<usize>,
}

impl SchemaModel {
    /// Breadth-first enumeration of every state reachable from the initial
    /// support. States are numbered in discovery order.
    pub fn compile<D: SchemaDomain>(domain: &D) -> Result<Self> {
        let action_names = domain.action_names();
        let n_actions = action_names.len();
        let learner_dims = domain.learner_dims();
        let action_learner: Vec<usize> = (0..n_actions).map(|a| domain.learner_of(a)).collect();
        if let Some(&bad) = action_learner.iter().find(|&&l| l >= learner_dims.len()) {
            return Err(Error::invalid(format!("learner index {bad} out of range")));
        }
        let learner_probs: Vec<Vec<f64>> =
            (0..learner_dims.len()).map(|l| domain.effect_probs(l).to_vec()).collect();
        for (l, probs) in learner_probs.iter().enumerate() {
            if probs.len() != learner_dims[l] {
                return Err(Error::invalid(format!("learner {l}: probability list has wrong length")));
            }
        }

        let mut index: BTreeMap<D::State, usize> = BTreeMap::new();
        let mut states: Vec<D::State> = Vec::new();
        let mut queue = VecDeque::new();
        let mut intern = |s: D::State, states: &mut Vec<D::State>, queue: &mut VecDeque<usize>| -> usize {
            if let Some(&i) = index.get(&s) {
                return i;
            }
            let i = states.len();
            index.insert(s.clone(), i);
            states.push(s);
            queue.push_back(i);
            i
        };
        let mut initial = Vec::new();
        for s in domain.initial_states() {
            let i = intern(s, &mut states, &mut queue);
            if !initial.contains(&i) {
                initial.push(i);
            }
        }
        if initial.is_empty() {
            return Err(Error::invalid("domain has no initial states"));
        }

        let mut rows: Vec<Option<Vec<CompiledClass>>> = Vec::new();
        let mut terminal = Vec::new();
        while let Some(si) = queue.pop_front() {
            let state = states[si].clone();
            let is_term = domain.is_terminal(&state);
            if terminal.len() <= si {
                terminal.resize(si + 1, false);
                rows.resize((si + 1) * n_actions, None);
            }
            terminal[si] = is_term;
            if is_term {
                continue;
            }
            for a in 0..n_actions {
                if !domain.applicable(&state, a) {
                    continue;
                }
                let classing = equivalence_classes(domain, &state, a)?;
                let probs = &learner_probs[action_learner[a]];
                if classing.classes.iter().any(|c| c.indicator.len() != probs.len()) {
                    return Err(Error::invalid(format!("action `{}` has inconsistent effect count", action_names[a])));
                }
                let mut compiled = Vec::with_capacity(classing.classes.len());
                for class in classing.classes {
                    let reward = domain.reward(&state, a, &class.next);
                    let true_prob = class.members.iter().map(|&m| probs[m]).sum();
                    let next = intern(class.next, &mut states, &mut queue);
                    compiled.push(CompiledClass {
                        members: class.members,
                        indicator: class.indicator,
                        next,
                        reward,
                        true_prob,
                    });
                }
                rows[si * n_actions + a] = Some(compiled);
            }
        }
        terminal.resize(states.len(), false);
        rows.resize(states.len() * n_actions, None);
        Ok(SchemaModel {
            state_labels: states.iter().map(|s| s.to_string()).collect(),
            action_names,
            action_learner,
            learner_dims,
            learner_probs,
            rows,
            terminal,
            initial,
        })
    }

    pub fn n_states(&self) -> usize {
        self.state_labels.len()
    }

    pub fn n_actions(&self) -> usize {
        self.action_names.len()
    }

    pub fn n_learners(&self) -> usize {
        self.learner_dims.len()
    }

    pub fn state_label(&self, state: usize) -> &str {
        &self.state_labels[state]
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.state_labels.iter().position(|l| l == label)
    }

    pub fn action_name(&self, action: usize) -> &str {
        &self.action_names[action]
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.action_names.iter().position(|n| n == name)
    }

    pub fn learner_of(&self, action: usize) -> usize {
        self.action_learner[action]
    }

    pub fn learner_dims(&self) -> &[usize] {
        &self.learner_dims
    }

    pub fn true_effect_probs(&self, learner: usize) -> &[f64] {
        &self.learner_probs[learner]
    }

    /// Classes of `(state, action)`, or `None` when the action is not
    /// applicable or the state is terminal.
    pub fn classes(&self, state: usize, action: usize) -> Option<&[CompiledClass]> {
        self.rows[state * self.n_actions() + action].as_deref()
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        self.terminal[state]
    }

    pub fn initial_states(&self) -> &[usize] {
        &self.initial
    }

    /// Uniform over the initial support; consumes one draw.
    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.initial[rng.gen_range(0..self.initial.len())]
    }

    /// Samples an effect from the true distribution (one uniform draw) and
    /// returns the index of the class it falls into.
    pub fn sample_class<R: Rng + ?Sized>(&self, state: usize, action: usize, rng: &mut R) -> Result<usize> {
        let classes = self
            .classes(state, action)
            .ok_or_else(|| Error::NotApplicable(self.action_names[action].clone()))?;
        let probs = &self.learner_probs[self.action_learner[action]];
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut effect = probs.len() - 1;
        for (i, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                effect = i;
                break;
            }
        }
        Ok(classes
            .iter()
            .position(|c| c.members.contains(&effect))
            .expect("classes partition the effect list"))
    }

    /// The true model as a flat MDP.
    pub fn true_mdp(&self) -> FlatMdp {
        self.flat_with(|_, _, classes| classes.iter().map(|c| c.true_prob).collect())
    }

    /// Flat MDP whose class probabilities come from `probs(state, action, classes)`.
    pub fn flat_with<F>(&self, mut probs: F) -> FlatMdp
    where
        F: FnMut(usize, usize, &[CompiledClass]) -> Vec<f64>,
    {
        let mut mdp = FlatMdp::new(self.n_states(), self.n_actions());
        for s in 0..self.n_states() {
            if self.terminal[s] {
                mdp.set_terminal(s);
                continue;
            }
            for a in 0..self.n_actions() {
                if let Some(classes) = self.classes(s, a) {
                    let p = probs(s, a, classes);
                    let row = classes
                        .iter()
                        .zip(p)
                        .map(|(c, prob)| Transition {
                            next: c.next,
                            prob,
                            reward: c.reward,
                        })
                        .collect();
                    mdp.set_row(s, a, row);
                }
            }
        }
        mdp
    }
}
