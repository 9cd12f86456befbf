//! Value iteration on a partially known class model. Mass not accounted
//! for by known classes goes to the unknown class with the best outcome.

use crate::error::{Error, Result};
use crate::kwik_lr::Prediction;
use crate::planning::{ValueFunction, ViConfig};
use crate::schema::domain::{CompiledClass, SchemaModel};

/// Class predictions for every (state, action) row, indexed
/// `state * n_actions + action`; `None` where the row does not exist.
pub type RowPredictions = Vec<Option<Vec<Prediction>>>;

/// The distribution the planner uses for one row given the current values.
///
/// Known predictions are clipped to [0, 1]. With unknown classes present the
/// residual `max(0, 1 − ΣK)` goes to the unknown class with the highest
/// `reward + γV(next)` (lowest index on ties); if the known mass already
/// exceeds 1 it is rescaled to 1. With every class known the clipped
/// predictions are renormalized.
pub fn optimistic_distribution(
    classes: &[CompiledClass],
    predictions: &[Prediction],
    values: &[f64],
    gamma: f64,
) -> Vec<f64> {
    let mut probs: Vec<f64> = predictions
        .iter()
        .map(|p| p.value().map_or(0.0, |v| v.clamp(0.0, 1.0)))
        .collect();
    let known: f64 = probs.iter().sum();
    let best_unknown = predictions
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.is_known())
        .map(|(i, _)| (i, classes[i].reward + gamma * values[classes[i].next]))
        .fold(None, |best: Option<(usize, f64)>, (i, q)| match best {
            Some((_, bq)) if bq >= q => best,
            _ => Some((i, q)),
        });
    match best_unknown {
        Some((i, _)) if known <= 1.0 => probs[i] = 1.0 - known,
        _ if known > 0.0 => probs.iter_mut().for_each(|p| *p /= known),
        // every class known at probability 0
        _ => {
            let u = 1.0 / probs.len() as f64;
            probs.iter_mut().for_each(|p| *p = u);
        }
    }
    probs
}

fn row_q(classes: &[CompiledClass], probs: &[f64], values: &[f64], gamma: f64) -> f64 {
    classes
        .iter()
        .zip(probs)
        .map(|(c, p)| p * (c.reward + gamma * values[c.next]))
        .sum()
}

/// Synchronous optimistic value iteration; ties between actions go to the
/// lowest index.
pub fn optimistic_value_iteration(
    model: &SchemaModel,
    predictions: &RowPredictions,
    config: &ViConfig,
    init: Option<&[f64]>,
) -> Result<ValueFunction> {
    let n = model.n_states();
    let n_actions = model.n_actions();
    let has_terminal = (0..n).any(|s| model.is_terminal(s));
    config.validate(has_terminal)?;
    if predictions.len() != n * n_actions {
        return Err(Error::invalid(format!(
            "expected {} prediction rows, got {}",
            n * n_actions,
            predictions.len()
        )));
    }
    let mut values = match init {
        Some(v) if v.len() == n => v.to_vec(),
        Some(v) => return Err(Error::invalid(format!("initial values have length {}, expected {n}", v.len()))),
        None => vec![0.0; n],
    };
    for (s, v) in values.iter_mut().enumerate() {
        if model.is_terminal(s) {
            *v = 0.0;
        }
    }

    let best = |s: usize, values: &[f64]| -> Result<Option<(usize, f64)>> {
        let mut best: Option<(usize, f64)> = None;
        for a in 0..n_actions {
            let Some(classes) = model.classes(s, a) else { continue };
            let preds = predictions[s * n_actions + a]
                .as_deref()
                .ok_or_else(|| Error::invalid(format!("missing predictions for state {s}, action {a}")))?;
            if preds.len() != classes.len() {
                return Err(Error::invalid("prediction row length differs from class count"));
            }
            let probs = optimistic_distribution(classes, preds, values, config.gamma);
            let q = row_q(classes, &probs, values, config.gamma);
            if best.is_none_or(|(_, bq)| q > bq) {
                best = Some((a, q));
            }
        }
        Ok(best)
    };

    let mut next = vec![0.0; n];
    let mut residuals = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_iter {
        let mut residual = 0.0f64;
        for s in 0..n {
            next[s] = if model.is_terminal(s) {
                0.0
            } else {
                best(s, &values)?.map_or(0.0, |(_, q)| q)
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
    let policy = (0..n)
        .map(|s| {
            if model.is_terminal(s) {
                Ok(None)
            } else {
                best(s, &values).map(|b| b.map(|(a, _)| a))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ValueFunction {
        iterations: residuals.len(),
        values,
        policy,
        residuals,
        converged,
    })
}
