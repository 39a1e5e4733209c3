//! Discriminant feature test: scores each descriptor dimension by the
//! weighted class entropy of its best binary split and keeps the lowest-loss
//! dimensions.

use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Best split found for one feature column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DftRecord {
    pub feature_index: usize,
    pub f_min: f64,
    pub f_max: f64,
    /// Samples with value `<= f_op` go left.
    pub f_op: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionConfig {
    pub num_selected: usize,
    pub num_candidate_thresholds: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            num_selected: 2700,
            num_candidate_thresholds: 31,
        }
    }
}

/// `n * H(counts)` in nats, from class counts summing to `n`.
fn weighted_entropy(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let sum: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| c as f64 * (c as f64).ln())
        .sum();
    nf * nf.ln() - sum
}

/// Scores one column over `num_candidates` evenly spaced interior
/// thresholds of `[f_min, f_max]`. Equal losses keep the smaller threshold.
pub fn dft_score(
    feature_index: usize,
    values: &[f64],
    labels: &[usize],
    num_classes: usize,
    num_candidates: usize,
) -> Result<DftRecord> {
    if values.is_empty() {
        return Err(Error::InvalidInput("DFT on an empty column".into()));
    }
    if values.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} values for {} labels",
            values.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::InvalidInput(format!(
            "label {bad} outside {num_classes} classes"
        )));
    }
    if num_candidates == 0 {
        return Err(Error::Config("at least one candidate threshold is required".into()));
    }

    let m = values.len() as f64;
    let mut total = vec![0usize; num_classes];
    for &l in labels {
        total[l] += 1;
    }
    let (f_min, f_max) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if f_max <= f_min {
        return Ok(DftRecord {
            feature_index,
            f_min,
            f_max,
            f_op: f_min,
            loss: weighted_entropy(&total) / m,
        });
    }

    let mut sorted: Vec<(f64, usize)> = values.iter().copied().zip(labels.iter().copied()).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut left = vec![0usize; num_classes];
    let mut right = total;
    let mut cursor = 0;
    let step = (f_max - f_min) / (num_candidates + 1) as f64;
    let mut best = (f64::INFINITY, f_min);
    for j in 0..num_candidates {
        let t = f_min + step * (j + 1) as f64;
        while cursor < sorted.len() && sorted[cursor].0 <= t {
            left[sorted[cursor].1] += 1;
            right[sorted[cursor].1] -= 1;
            cursor += 1;
        }
        let loss = (weighted_entropy(&left) + weighted_entropy(&right)) / m;
        if loss < best.0 {
            best = (loss, t);
        }
    }
    Ok(DftRecord {
        feature_index,
        f_min,
        f_max,
        f_op: best.1,
        loss: best.0.max(0.0),
    })
}

/// Scores every column of `descriptors` (M×F), in parallel.
pub fn score_columns(
    descriptors: ArrayView2<'_, f64>,
    labels: &[usize],
    num_classes: usize,
    num_candidates: usize,
) -> Result<Vec<DftRecord>> {
    if descriptors.nrows() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} descriptors for {} labels",
            descriptors.nrows(),
            labels.len()
        )));
    }
    (0..descriptors.ncols())
        .into_par_iter()
        .map(|c| {
            let column: Vec<f64> = descriptors.column(c).to_vec();
            dft_score(c, &column, labels, num_classes, num_candidates)
        })
        .collect()
}

/// Orders records by ascending loss, ties by ascending feature index.
pub fn rank(records: &[DftRecord]) -> Vec<usize> {
    let mut order: Vec<&DftRecord> = records.iter().collect();
    order.sort_by(|a, b| a.loss.total_cmp(&b.loss).then(a.feature_index.cmp(&b.feature_index)));
    order.into_iter().map(|r| r.feature_index).collect()
}

/// Indices of the `num_selected` most discriminant columns, best first.
pub fn select_features(
    descriptors: ArrayView2<'_, f64>,
    labels: &[usize],
    num_classes: usize,
    config: &SelectionConfig,
) -> Result<Vec<usize>> {
    let available = descriptors.ncols();
    if config.num_selected > available {
        return Err(Error::Config(format!(
            "cannot select {} of {available} descriptor dimensions",
            config.num_selected
        )));
    }
    let records = score_columns(descriptors, labels, num_classes, config.num_candidate_thresholds)?;
    let mut ranked = rank(&records);
    ranked.truncate(config.num_selected);
    Ok(ranked)
}
