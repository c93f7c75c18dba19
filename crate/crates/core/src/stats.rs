//! Four-number deviation summaries (average, median, max, min).

use serde::{Deserialize, Serialize};

use crate::error::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationStats {
    pub average: f64,
    pub median: f64,
    pub max: f64,
    pub min: f64,
    /// Number of items that contributed a deviation.
    pub count: usize,
    /// Items that could not be evaluated (e.g. endpoints off the map).
    pub skipped: usize,
    pub deviations: Vec<f64>,
    /// Root mean square of the deviations.
    pub rmse: f64,
}

impl DeviationStats {
    /// Summarizes non-negative deviations. Fails on an empty list or on
    /// negative / non-finite entries.
    pub fn from_deviations(deviations: Vec<f64>) -> Result<Self, EvalError> {
        Self::with_skipped(deviations, 0)
    }

    pub fn with_skipped(deviations: Vec<f64>, skipped: usize) -> Result<Self, EvalError> {
        if deviations.is_empty() {
            return Err(EvalError::NoValidItems { skipped });
        }
        if let Some(bad) = deviations.iter().find(|d| !d.is_finite() || **d < 0.0) {
            return Err(EvalError::InvalidInput(format!(
                "deviation {bad} is not a finite non-negative value"
            )));
        }
        let n = deviations.len();
        let mut sorted = deviations.clone();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        let min = sorted[0];
        let max = sorted[n - 1];
        // Summation error can push the mean a hair outside [min, max].
        let average = (sorted.iter().sum::<f64>() / n as f64).clamp(min, max);
        let rmse = (sorted.iter().map(|d| d * d).sum::<f64>() / n as f64).sqrt();
        Ok(Self {
            average,
            median,
            max,
            min,
            count: n,
            skipped,
            deviations,
            rmse,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn even_count_median_is_midpoint() {
        let s = DeviationStats::from_deviations(vec![0.1, 0.2]).unwrap();
        assert!((s.median - 0.15).abs() < 1e-12);
        assert!((s.average - 0.15).abs() < 1e-12);
        assert_eq!(s.max, 0.2);
        assert_eq!(s.min, 0.1);
    }

    #[test]
    fn empty_is_rejected() {
        assert!(matches!(
            DeviationStats::with_skipped(vec![], 3),
            Err(EvalError::NoValidItems { skipped: 3 })
        ));
    }

    #[test]
    fn negative_is_rejected() {
        assert!(DeviationStats::from_deviations(vec![0.1, -0.2]).is_err());
    }

    proptest! {
        #[test]
        fn ordering_invariant(v in proptest::collection::vec(0.0f64..1e3, 1..60)) {
            let s = DeviationStats::from_deviations(v.clone()).unwrap();
            prop_assert!(s.min <= s.median && s.median <= s.max);
            prop_assert!(s.min <= s.average && s.average <= s.max);
            prop_assert!(s.rmse >= s.average - 1e-9);
            prop_assert_eq!(s.count, v.len());
        }
    }
}
