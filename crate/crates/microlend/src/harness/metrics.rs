//! Per-period metric series and the summary statistics read off them.

use crate::domain::{Action, LendingRecord, Outcome};
use crate::error::{Error, Result};
use crate::numeric::mean;

/// Metrics of one lending period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodMetrics {
    /// Mean utility per applicant.
    pub mean_utility: f64,
    /// Running mean over periods of the period *total* utility.
    pub avg_cum_utility: f64,
    pub approval_rate: f64,
    /// Defaults over approved applications; 0 when none were approved.
    pub default_rate: f64,
}

/// Period metrics plus run-level summaries for one algorithm's stream.
#[derive(Debug, Clone, Default)]
pub struct SeriesStats {
    pub periods: Vec<PeriodMetrics>,
    pub converged_utility: f64,
    pub rise_time: u32,
}

/// Periods entering the converged-utility tail.
pub const CONVERGED_TAIL: usize = 50;
/// Trailing window width for rise-time detection.
pub const TRAILING_WINDOW: usize = 10;

/// Fold a complete per-period record stream into metric series.
pub fn compute_metrics(per_period: &[Vec<LendingRecord>]) -> Result<SeriesStats> {
    if per_period.is_empty() {
        return Err(Error::Contract(
            "cannot compute metrics of an empty stream".into(),
        ));
    }
    let mut periods = Vec::with_capacity(per_period.len());
    let mut total_sum = 0.0;
    for (idx, records) in per_period.iter().enumerate() {
        let count = records.len() as f64;
        let total: f64 = records.iter().map(|r| r.utility).sum();
        let approved = records
            .iter()
            .filter(|r| r.action == Action::Approved)
            .count();
        let defaulted = records
            .iter()
            .filter(|r| r.outcome == Outcome::Defaulted)
            .count();
        total_sum += total;
        periods.push(PeriodMetrics {
            mean_utility: if count > 0.0 { total / count } else { 0.0 },
            avg_cum_utility: total_sum / (idx + 1) as f64,
            approval_rate: if count > 0.0 {
                approved as f64 / count
            } else {
                0.0
            },
            default_rate: if approved > 0 {
                defaulted as f64 / approved as f64
            } else {
                0.0
            },
        });
    }
    let means: Vec<f64> = periods.iter().map(|p| p.mean_utility).collect();
    Ok(SeriesStats {
        converged_utility: converged_utility(&means),
        rise_time: rise_time(&means),
        periods,
    })
}

/// Mean utility over the final tail of the series.
pub fn converged_utility(mean_utilities: &[f64]) -> f64 {
    if mean_utilities.is_empty() {
        return 0.0;
    }
    let tail = mean_utilities.len().clamp(1, CONVERGED_TAIL);
    mean(&mean_utilities[mean_utilities.len() - tail..])
}

fn trailing_mean(series: &[f64], t: usize) -> f64 {
    let lo = t.saturating_sub(TRAILING_WINDOW);
    mean(&series[lo..t])
}

/// First period (1-based) at which the trailing mean utility reaches the
/// initial level (first ten periods) plus 90% of the gap to the converged
/// level; the series length if it never does.
pub fn rise_time(mean_utilities: &[f64]) -> u32 {
    if mean_utilities.is_empty() {
        return 0;
    }
    let initial = mean(&mean_utilities[..mean_utilities.len().min(TRAILING_WINDOW)]);
    let converged = converged_utility(mean_utilities);
    let threshold = initial + 0.9 * (converged - initial);
    for t in 1..=mean_utilities.len() {
        if trailing_mean(mean_utilities, t) >= threshold {
            return t as u32;
        }
    }
    mean_utilities.len() as u32
}

/// Affine normalization mapping the worst converged utility to -1 and the
/// perfect oracle's to +1.
pub fn normalized_utility(converged: f64, lowest: f64, perfect: f64) -> Result<f64> {
    if perfect.is_nan() || lowest.is_nan() || perfect <= lowest {
        return Err(Error::Contract(format!(
            "normalization needs perfect ({perfect}) > lowest ({lowest})"
        )));
    }
    Ok(2.0 * (converged - lowest) / (perfect - lowest) - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{FeatureVector, UtilityConfig};

    fn rec(action: Action, outcome: Outcome, period: u32) -> LendingRecord {
        let cfg = UtilityConfig::new(0.5, 0.0).unwrap();
        LendingRecord::new(
            FeatureVector::from_full(&[1.0]),
            2,
            if action == Action::Approved { 1.0 } else { 0.0 },
            action,
            outcome,
            &cfg,
            period,
        )
        .unwrap()
    }

    #[test]
    fn empty_stream_is_an_error() {
        assert!(compute_metrics(&[]).is_err());
    }

    #[test]
    fn approval_and_default_rates() {
        let periods = vec![
            vec![
                rec(Action::Approved, Outcome::Returned, 1),
                rec(Action::Approved, Outcome::Defaulted, 1),
            ],
            vec![rec(Action::Rejected, Outcome::NotApplicable, 2)],
        ];
        let stats = compute_metrics(&periods).unwrap();
        assert_eq!(stats.periods[0].approval_rate, 1.0);
        assert_eq!(stats.periods[0].default_rate, 0.5);
        assert_eq!(stats.periods[1].approval_rate, 0.0);
        // No approvals: default rate 0 by convention.
        assert_eq!(stats.periods[1].default_rate, 0.0);
    }

    #[test]
    fn avg_cum_utility_averages_period_totals() {
        // Period totals 1 and 3 give running means 1 and 2.
        let cfg = UtilityConfig::new(1.0, 0.0).unwrap();
        let make = |size: u32, period: u32| {
            LendingRecord::new(
                FeatureVector::from_full(&[1.0]),
                size,
                1.0,
                Action::Approved,
                Outcome::Returned,
                &cfg,
                period,
            )
            .unwrap()
        };
        let periods = vec![vec![make(1, 1)], vec![make(3, 2)]];
        let stats = compute_metrics(&periods).unwrap();
        assert!((stats.periods[0].avg_cum_utility - 1.0).abs() < 1e-12);
        assert!((stats.periods[1].avg_cum_utility - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rise_time_hits_ninety_percent_crossing() {
        // Ramp from 0 to 1 over 100 periods, then flat for 100 more.
        let series: Vec<f64> = (0..200)
            .map(|t| if t < 100 { t as f64 / 100.0 } else { 1.0 })
            .collect();
        let rt = rise_time(&series);
        // Initial level is mean of first 10 (~0.045); converged is 1.
        // The trailing-10 mean crosses ~0.9 a little after period 95.
        assert!((90..=105).contains(&rt), "rise time {rt}");
    }

    #[test]
    fn rise_time_of_flat_series_is_immediate() {
        let series = vec![0.25; 60];
        assert_eq!(rise_time(&series), 1);
    }

    #[test]
    fn converged_utility_uses_final_tail() {
        let mut series = vec![0.0; 100];
        for v in series.iter_mut().skip(50) {
            *v = 1.0;
        }
        assert!((converged_utility(&series) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalization_endpoints() {
        assert_eq!(normalized_utility(1.0, 0.0, 1.0).unwrap(), 1.0);
        assert_eq!(normalized_utility(0.0, 0.0, 1.0).unwrap(), -1.0);
        assert_eq!(normalized_utility(0.5, 0.0, 1.0).unwrap(), 0.0);
        assert!(normalized_utility(0.5, 1.0, 1.0).is_err());
    }
}
