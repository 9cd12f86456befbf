//! Class-probability learners: the shared per-schema KWIK-LR learner and the
//! partition-counting baseline.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::kwik_lr::{KwikLrLearner, Prediction};
use crate::schema::domain::{signature_of, CompiledClass, EquivalenceClassing};

/// Anything that predicts class probabilities for a compiled row and learns
/// from the class that was observed.
pub trait ClassPredictor: Send + std::fmt::Debug {
    /// One prediction per class, in class order. Does not count ⊥.
    fn predict_row(&self, learner: usize, classes: &[CompiledClass]) -> Result<Vec<Prediction>>;

    fn observe_row(&mut self, learner: usize, classes: &[CompiledClass], observed: usize) -> Result<()>;

    fn bottom_count(&self) -> u64;
}

/// One KWIK-LR learner per schema over effect indicator vectors. Inputs and
/// targets are scaled by `1/√d` so the inputs lie in the unit ball; the
/// weight vector is then the effect distribution itself.
#[derive(Debug, Clone)]
pub struct SchemaLearner {
    learners: Vec<KwikLrLearner>,
}

impl SchemaLearner {
    pub fn new(dims: &[usize], alpha0: f64) -> Result<Self> {
        let learners = dims
            .iter()
            .map(|&d| KwikLrLearner::new(d, alpha0))
            .collect::<Result<Vec<_>>>()?;
        Ok(SchemaLearner { learners })
    }

    pub fn learner(&self, index: usize) -> &KwikLrLearner {
        &self.learners[index]
    }

    fn get(&self, learner: usize) -> Result<&KwikLrLearner> {
        self.learners
            .get(learner)
            .ok_or_else(|| Error::invalid(format!("no learner {learner}")))
    }

    fn scaled(learner: &KwikLrLearner, indicator: &[f64]) -> Result<(Vec<f64>, f64)> {
        if indicator.len() != learner.dim() {
            return Err(Error::invalid(format!(
                "indicator has dimension {}, learner expects {}",
                indicator.len(),
                learner.dim()
            )));
        }
        let s = (learner.dim() as f64).sqrt();
        Ok((indicator.iter().map(|v| v / s).collect(), s))
    }

    /// Probability of the class with this indicator, or ⊥.
    pub fn predict_class_prob(&self, learner: usize, indicator: &[f64]) -> Result<Prediction> {
        let l = self.get(learner)?;
        let (u, s) = Self::scaled(l, indicator)?;
        Ok(l.peek(&u)?.map(|v| v * s))
    }

    /// Updates with every class of `classing`: target 1 for the class whose
    /// next state is `next`, 0 for the rest.
    pub fn observe_transition<S: PartialEq>(
        &mut self,
        learner: usize,
        classing: &EquivalenceClassing<S>,
        next: &S,
    ) -> Result<()> {
        let observed = classing
            .class_of(next)
            .ok_or_else(|| Error::ModelMismatch(format!("learner {learner}")))?;
        let indicators: Vec<&[f64]> = classing.classes.iter().map(|c| c.indicator.as_slice()).collect();
        self.update_all(learner, &indicators, observed)
    }

    fn update_all(&mut self, learner: usize, indicators: &[&[f64]], observed: usize) -> Result<()> {
        self.get(learner)?;
        let l = &mut self.learners[learner];
        for (i, x) in indicators.iter().enumerate() {
            let (u, s) = Self::scaled(l, x)?;
            let y = if i == observed { 1.0 } else { 0.0 };
            l.predict(&u)?;
            l.update(&u, y / s)?;
        }
        Ok(())
    }
}

impl ClassPredictor for SchemaLearner {
    fn predict_row(&self, learner: usize, classes: &[CompiledClass]) -> Result<Vec<Prediction>> {
        classes
            .iter()
            .map(|c| self.predict_class_prob(learner, &c.indicator))
            .collect()
    }

    fn observe_row(&mut self, learner: usize, classes: &[CompiledClass], observed: usize) -> Result<()> {
        if observed >= classes.len() {
            return Err(Error::ModelMismatch(format!("learner {learner}")));
        }
        let indicators: Vec<&[f64]> = classes.iter().map(|c| c.indicator.as_slice()).collect();
        self.update_all(learner, &indicators, observed)
    }

    fn bottom_count(&self) -> u64 {
        self.learners.iter().map(|l| l.bottom_count()).sum()
    }
}

/// Learns each (learner, partition signature) distribution separately by
/// counting. Two rows with the same signature share statistics.
#[derive(Debug, Clone)]
pub struct PartitionBaseline {
    threshold: u64,
    /// Counts are stored in signature order.
    counts: BTreeMap<(usize, Vec<Vec<u8>>), Vec<u64>>,
    bottoms: u64,
}

impl PartitionBaseline {
    pub fn new(threshold: u64) -> Result<Self> {
        if threshold == 0 {
            return Err(Error::invalid("partition visit threshold must be >= 1"));
        }
        Ok(PartitionBaseline {
            threshold,
            counts: BTreeMap::new(),
            bottoms: 0,
        })
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn n_signatures(&self) -> usize {
        self.counts.len()
    }

    /// Signature plus, for each class, its position in the signature.
    fn key(classes: &[CompiledClass]) -> (Vec<Vec<u8>>, Vec<usize>) {
        let sig = signature_of(classes.iter().map(|c| c.indicator.as_slice()));
        let pos = classes
            .iter()
            .map(|c| {
                let bits: Vec<u8> = c.indicator.iter().map(|&v| u8::from(v > 0.5)).collect();
                sig.iter().position(|s| *s == bits).expect("class is in its own signature")
            })
            .collect();
        (sig, pos)
    }

    pub fn visits(&self, learner: usize, classes: &[CompiledClass]) -> u64 {
        let (sig, _) = Self::key(classes);
        self.counts
            .get(&(learner, sig))
            .map_or(0, |c| c.iter().sum())
    }
}

impl ClassPredictor for PartitionBaseline {
    fn predict_row(&self, learner: usize, classes: &[CompiledClass]) -> Result<Vec<Prediction>> {
        let (sig, pos) = Self::key(classes);
        let Some(counts) = self.counts.get(&(learner, sig)) else {
            return Ok(vec![Prediction::Unknown; classes.len()]);
        };
        let total: u64 = counts.iter().sum();
        if total < self.threshold {
            return Ok(vec![Prediction::Unknown; classes.len()]);
        }
        Ok(pos
            .iter()
            .map(|&p| Prediction::Known(counts[p] as f64 / total as f64))
            .collect())
    }

    fn observe_row(&mut self, learner: usize, classes: &[CompiledClass], observed: usize) -> Result<()> {
        if observed >= classes.len() {
            return Err(Error::ModelMismatch(format!("learner {learner}")));
        }
        let (sig, pos) = Self::key(classes);
        let counts = self
            .counts
            .entry((learner, sig))
            .or_insert_with(|| vec![0; classes.len()]);
        if counts.iter().sum::<u64>() < self.threshold {
            self.bottoms += 1;
        }
        counts[pos[observed]] += 1;
        Ok(())
    }

    fn bottom_count(&self) -> u64 {
        self.bottoms
    }
}
