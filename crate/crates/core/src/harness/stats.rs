use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::run::{LogRow, RunLog};

/// z-value of a two-sided 95% normal interval.
pub const Z95: f64 = 1.96;

/// Which log column to summarize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Field {
    #[default]
    Metric,
    Cumulative,
    BottomCount,
    PolicyValue,
}

impl Field {
    fn get(self, row: &LogRow) -> Option<f64> {
        match self {
            Field::Metric => Some(row.metric),
            Field::Cumulative => Some(row.cumulative),
            Field::BottomCount => Some(row.bottom_count as f64),
            Field::PolicyValue => row.policy_value,
        }
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "metric" => Field::Metric,
            "cumulative" => Field::Cumulative,
            "bottom_count" => Field::BottomCount,
            "policy_value" => Field::PolicyValue,
            other => return Err(Error::Config(format!("unknown field `{other}`"))),
        })
    }
}

/// Across-trial statistics at one step or episode index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub index: usize,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (0 for a single trial).
    pub std: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Trailing moving average of `mean` when a window was requested.
    pub smoothed: Option<f64>,
}

impl SummaryRow {
    pub fn ci_half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }
}

/// Mean and normal-approximation 95% interval of `field` at every index.
/// `window > 1` adds a trailing moving average over that many indices.
pub fn aggregate(log: &RunLog, field: Field, window: Option<usize>) -> Result<Vec<SummaryRow>> {
    if log.rows.is_empty() {
        return Err(Error::invalid("cannot aggregate an empty log"));
    }
    if window == Some(0) {
        return Err(Error::invalid("smoothing window must be >= 1"));
    }
    let mut by_index: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for row in &log.rows {
        let value = field
            .get(row)
            .ok_or_else(|| Error::invalid(format!("row (trial {}, index {}) has no value for {field:?}", row.trial, row.index)))?;
        by_index.entry(row.index).or_default().push(value);
    }
    let mut out: Vec<SummaryRow> = by_index
        .into_iter()
        .map(|(index, values)| {
            let (mean, std) = mean_std(&values);
            let half = Z95 * std / (values.len() as f64).sqrt();
            SummaryRow {
                index,
                n: values.len(),
                mean,
                std,
                ci_low: mean - half,
                ci_high: mean + half,
                smoothed: None,
            }
        })
        .collect();
    if let Some(w) = window {
        let means: Vec<f64> = out.iter().map(|r| r.mean).collect();
        for (i, row) in out.iter_mut().enumerate() {
            let lo = (i + 1).saturating_sub(w);
            let slice = &means[lo..=i];
            row.smoothed = Some(slice.iter().sum::<f64>() / slice.len() as f64);
        }
    }
    Ok(out)
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(trial: usize, index: usize, metric: f64) -> LogRow {
        LogRow {
            trial,
            index,
            metric,
            cumulative: 0.0,
            bottom_count: 0,
            policy_value: None,
            truncated: None,
            wall_ms: None,
        }
    }

    #[test]
    fn single_trial_has_zero_width() {
        let log = RunLog {
            rows: vec![row(0, 1, 3.0), row(0, 2, 5.0)],
        };
        let s = aggregate(&log, Field::Metric, None).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].mean, s[0].ci_low, s[0].ci_high), (3.0, 3.0, 3.0));
    }

    #[test]
    fn constant_metric_has_zero_width() {
        let log = RunLog {
            rows: (0..5).map(|t| row(t, 1, 2.5)).collect(),
        };
        let s = &aggregate(&log, Field::Metric, None).unwrap()[0];
        assert_eq!((s.mean, s.ci_half_width(), s.n), (2.5, 0.0, 5));
    }

    #[test]
    fn moving_average_is_trailing() {
        let log = RunLog {
            rows: vec![row(0, 1, 1.0), row(0, 2, 3.0), row(0, 3, 5.0)],
        };
        let s = aggregate(&log, Field::Metric, Some(2)).unwrap();
        let sm: Vec<f64> = s.iter().map(|r| r.smoothed.unwrap()).collect();
        assert_eq!(sm, vec![1.0, 2.0, 4.0]);
    }

    #[test]
    fn rejects_empty_and_missing_values() {
        assert!(aggregate(&RunLog::default(), Field::Metric, None).is_err());
        let log = RunLog { rows: vec![row(0, 1, 1.0)] };
        assert!(aggregate(&log, Field::PolicyValue, None).is_err());
        assert!(aggregate(&log, Field::Metric, Some(0)).is_err());
    }
}
