//! Goodness-of-fit and correlation measures.

use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("length mismatch: {actual} actual values vs {predicted} predicted")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("need at least {need} values, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("{0} has zero variance")]
    ZeroVariance(&'static str),
    #[error("non-finite value in input")]
    NonFinite,
}

fn check(actual: &[f64], predicted: &[f64], need: usize) -> Result<(), MetricError> {
    if actual.len() != predicted.len() {
        return Err(MetricError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.len() < need {
        return Err(MetricError::TooFew {
            need,
            got: actual.len(),
        });
    }
    if !actual.iter().chain(predicted).all(|v| v.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    Ok(())
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// `1 − SS_res / SS_tot`.
pub fn r_squared(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricError> {
    check(actual, predicted, 1)?;
    let m = mean(actual);
    let ss_tot: f64 = actual.iter().map(|a| (a - m) * (a - m)).sum();
    if ss_tot == 0.0 {
        return Err(MetricError::ZeroVariance("actual"));
    }
    let ss_res: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p) * (a - p))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

pub fn mae(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricError> {
    check(actual, predicted, 1)?;
    let total: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).abs())
        .sum();
    Ok(total / actual.len() as f64)
}

pub fn pearson(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricError> {
    check(actual, predicted, 2)?;
    let (ma, mp) = (mean(actual), mean(predicted));
    let (mut sap, mut saa, mut spp) = (0.0, 0.0, 0.0);
    for (a, p) in actual.iter().zip(predicted) {
        let (da, dp) = (a - ma, p - mp);
        sap += da * dp;
        saa += da * da;
        spp += dp * dp;
    }
    if saa == 0.0 {
        return Err(MetricError::ZeroVariance("actual"));
    }
    if spp == 0.0 {
        return Err(MetricError::ZeroVariance("predicted"));
    }
    Ok((sap / libm::sqrt(saa * spp)).clamp(-1.0, 1.0))
}

/// Pearson correlation of average ranks (ties share the mean of their ranks).
pub fn spearman(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricError> {
    check(actual, predicted, 2)?;
    pearson(&average_ranks(actual), &average_ranks(predicted))
}

/// 1-based ranks; tied values receive the mean of the ranks they span.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut ranks = alloc::vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}
