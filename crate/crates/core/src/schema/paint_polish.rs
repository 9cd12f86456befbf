//! Grounded STRIPS domains, and the bundled Paint/Polish world.

use std::fmt;

use crate::error::{Error, Result};
use crate::schema::domain::SchemaDomain;
use crate::schema::strips::{apply_effect, ground, Atom, StripsDomainSpec, StripsState};

pub const PAINT_POLISH: &str = include_str!("../../domains/paint_polish.strips");

/// A set of ground atoms with a readable, canonical rendering.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AtomSet(pub StripsState);

impl fmt::Display for AtomSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atoms: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "{{{}}}", atoms.join(", "))
    }
}

impl AtomSet {
    pub fn contains(&self, atom: &Atom) -> bool {
        self.0.contains(atom)
    }
}

#[derive(Debug, Clone)]
struct Grounded {
    schema: usize,
    name: String,
    precondition: Vec<Atom>,
    effects: Vec<crate::schema::strips::StripsEffect>,
}

/// A STRIPS domain grounded over its object list. Each schema owns one
/// learner; all of its ground actions share it.
#[derive(Debug, Clone)]
pub struct StripsDomain {
    spec: StripsDomainSpec,
    actions: Vec<Grounded>,
    probs: Vec<Vec<f64>>,
}

impl StripsDomain {
    pub fn new(spec: StripsDomainSpec) -> Result<Self> {
        let mut probs = Vec::with_capacity(spec.schemas.len());
        let mut actions = Vec::new();
        for (i, schema) in spec.schemas.iter().enumerate() {
            schema.validate()?;
            probs.push(schema.probs.clone().ok_or_else(|| {
                Error::invalid(format!("schema `{}` needs effect probabilities to be simulated", schema.name))
            })?);
            for binding in ground(schema, &spec.objects) {
                actions.push(Grounded {
                    schema: i,
                    name: format!("{}({})", schema.name, binding.join(", ")),
                    precondition: schema
                        .precondition
                        .iter()
                        .map(|a| a.ground(&schema.params, &binding))
                        .collect(),
                    effects: schema.effects.iter().map(|e| e.ground(&schema.params, &binding)).collect(),
                });
            }
        }
        Ok(StripsDomain { spec, actions, probs })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::new(StripsDomainSpec::parse(text)?)
    }

    pub fn spec(&self) -> &StripsDomainSpec {
        &self.spec
    }
}

impl SchemaDomain for StripsDomain {
    type State = AtomSet;

    fn action_names(&self) -> Vec<String> {
        self.actions.iter().map(|a| a.name.clone()).collect()
    }

    fn learner_of(&self, action: usize) -> usize {
        self.actions[action].schema
    }

    fn learner_dims(&self) -> Vec<usize> {
        self.spec.schemas.iter().map(|s| s.effects.len()).collect()
    }

    fn applicable(&self, state: &AtomSet, action: usize) -> bool {
        self.actions[action].precondition.iter().all(|a| state.contains(a))
    }

    fn outcomes(&self, state: &AtomSet, action: usize) -> Result<Vec<AtomSet>> {
        Ok(self.actions[action]
            .effects
            .iter()
            .map(|e| AtomSet(apply_effect(&state.0, e)))
            .collect())
    }

    fn reward(&self, _state: &AtomSet, action: usize, _next: &AtomSet) -> f64 {
        self.spec.schemas[self.actions[action].schema].reward
    }

    fn is_terminal(&self, state: &AtomSet) -> bool {
        !self.spec.goal.is_empty() && self.spec.goal.iter().all(|a| state.contains(a))
    }

    fn effect_probs(&self, learner: usize) -> &[f64] {
        &self.probs[learner]
    }

    fn initial_states(&self) -> Vec<AtomSet> {
        self.spec.init.support().into_iter().map(AtomSet).collect()
    }
}

/// Paint/Polish with one object, random initial subsets of
/// {Painted, Polished, Scratched}, and goal Finished.
pub fn make_paint_polish() -> StripsDomain {
    StripsDomain::parse(PAINT_POLISH).expect("bundled Paint/Polish domain is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::domain::{equivalence_classes, SchemaModel};

    fn state(atoms: &[&str]) -> AtomSet {
        AtomSet(atoms.iter().map(|p| Atom::new(*p, &["o1"])).collect())
    }

    #[test]
    fn table_probabilities_and_rewards() {
        let d = make_paint_polish();
        let names: Vec<&str> = d.spec().schemas.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["paint", "polish", "shortcut", "done"]);
        assert_eq!(d.effect_probs(0), [0.6, 0.3, 0.1]);
        assert_eq!(d.effect_probs(1), [0.2, 0.2, 0.3, 0.2, 0.1]);
        assert_eq!(d.effect_probs(2), [0.05, 0.95]);
        assert_eq!(d.effect_probs(3), [1.0]);
        let rewards: Vec<f64> = d.spec().schemas.iter().map(|s| s.reward).collect();
        assert_eq!(rewards, [-1.0, -1.0, -1.0, 10.0]);
        assert!(!d.applicable(&state(&["Painted", "Polished"]), 3));
        assert!(d.applicable(&state(&["Painted", "Polished", "Scratched"]), 3));
    }

    #[test]
    fn bundled_file_round_trips() {
        let spec = StripsDomainSpec::parse(PAINT_POLISH).unwrap();
        let text = spec.serialize();
        let again = StripsDomainSpec::parse(&text).unwrap();
        assert_eq!(again, spec);
        assert_eq!(again.serialize(), text);
    }

    #[test]
    fn paint_on_scratched_object_is_ambiguous() {
        let d = make_paint_polish();
        let c = equivalence_classes(&d, &state(&["Scratched"]), 0).unwrap();
        assert_eq!(c.classes.len(), 2);
        assert_eq!(c.classes[0].indicator, [1.0, 1.0, 0.0]);
        assert_eq!(c.classes[0].next, state(&["Painted", "Scratched"]));
        assert_eq!(c.classes[1].indicator, [0.0, 0.0, 1.0]);
        assert_eq!(c.classes[1].next, state(&["Scratched"]));

        let err = equivalence_classes(&d, &state(&[]), 3).unwrap_err();
        assert!(matches!(err, Error::NotApplicable(_)));
    }

    #[test]
    fn compiled_state_space() {
        let m = SchemaModel::compile(&make_paint_polish()).unwrap();
        // 8 subsets plus the finished state
        assert_eq!(m.n_states(), 9);
        assert_eq!(m.initial_states().len(), 8);
        assert_eq!((0..9).filter(|&s| m.is_terminal(s)).count(), 1);
        m.true_mdp().validate_probabilities(1e-12).unwrap();
    }
}
