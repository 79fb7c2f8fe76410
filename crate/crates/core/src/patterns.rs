//! Dialogue-act pair frequencies and knee-based selection of the frequent set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::DaPair;
use crate::network::AdjacencyPair;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PatternError {
    #[error("knee detection needs at least 3 points, got {0}")]
    TooShort(usize),
    #[error("knee detection needs a non-increasing finite sequence")]
    NotDescending,
    #[error("no knee found and no explicit pair count given")]
    SelectionAmbiguous,
    #[error("cannot select {0} of 16 pairs")]
    BadCount(usize),
}

/// Occurrence counts of all sixteen ordered dialogue-act pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaPairFrequencyTable {
    counts: [u64; 16],
}

impl DaPairFrequencyTable {
    pub fn from_counts(counts: [u64; 16]) -> Self {
        DaPairFrequencyTable { counts }
    }

    pub fn count(&self, pair: DaPair) -> u64 {
        self.counts[pair.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn add(&mut self, pair: DaPair) {
        self.counts[pair.index()] += 1;
    }

    pub fn merge(&mut self, other: &DaPairFrequencyTable) {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
    }

    /// Pairs by descending count; ties keep the fixed `DaPair` index order.
    pub fn sorted_desc(&self) -> Vec<(DaPair, u64)> {
        let mut v: Vec<(DaPair, u64)> = DaPair::all().map(|p| (p, self.count(p))).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.index().cmp(&b.0.index())));
        v
    }
}

/// Counts ordered act pairs over any number of pair lists.
pub fn count_da_pairs<'a, I>(pair_lists: I) -> DaPairFrequencyTable
where
    I: IntoIterator<Item = &'a [AdjacencyPair]>,
{
    let mut table = DaPairFrequencyTable::default();
    for list in pair_lists {
        for p in list {
            table.add(p.da_pair);
        }
    }
    table
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    v.iter().map(|x| (x - min) / (max - min)).collect()
}

/// Difference values this close to zero are treated as exactly zero, so
/// rounding noise on a straight line cannot fabricate extrema.
const FLAT_EPS: f64 = 1e-12;

/// Elbow of a non-increasing, convex-ish curve (Kneedle, no smoothing).
///
/// Returns the 1-based index of the first detected knee, or `None` when the
/// curve has none (a straight line, for instance).
pub fn kneedle_elbow(y: &[f64], sensitivity: f64) -> Result<Option<usize>, PatternError> {
    let n = y.len();
    if n < 3 {
        return Err(PatternError::TooShort(n));
    }
    if y.iter().any(|v| !v.is_finite()) || y.windows(2).any(|w| w[1] > w[0]) {
        return Err(PatternError::NotDescending);
    }
    if y[0] == y[n - 1] {
        return Ok(None);
    }

    let x: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let x_norm = normalize(&x);
    let y_norm = normalize(y);
    // decreasing convex → flip to an increasing concave curve
    let y_max = y_norm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let diff: Vec<f64> = y_norm
        .iter()
        .zip(&x_norm)
        .map(|(yn, xn)| {
            let d = (y_max - yn) - xn;
            if d.abs() < FLAT_EPS {
                0.0
            } else {
                d
            }
        })
        .collect();

    // local extrema with edge clipping: an endpoint compares only against
    // its single neighbour
    let neighbours = |i: usize| (diff[i.saturating_sub(1)], diff[(i + 1).min(n - 1)]);
    let maxima: Vec<usize> = (0..n)
        .filter(|&i| {
            let (l, r) = neighbours(i);
            diff[i] >= l && diff[i] >= r
        })
        .collect();
    let is_minimum = |i: usize| {
        let (l, r) = neighbours(i);
        diff[i] <= l && diff[i] <= r
    };
    let Some(&first_max) = maxima.first() else {
        return Ok(None);
    };

    let mean_step = x_norm.windows(2).map(|w| w[1] - w[0]).sum::<f64>() / (n - 1) as f64;
    let thresholds: Vec<f64> = maxima.iter().map(|&i| diff[i] - sensitivity * mean_step.abs()).collect();

    let mut threshold = 0.0;
    let mut threshold_index = first_max;
    let mut next_max = 0;
    let mut active = true;
    for i in first_max..n - 1 {
        if maxima.get(next_max) == Some(&i) {
            threshold = thresholds[next_max];
            threshold_index = i;
            next_max += 1;
            active = true;
        }
        if is_minimum(i) {
            threshold = 0.0;
            active = false;
        }
        if active && diff[i + 1] < threshold {
            return Ok(Some(threshold_index + 1));
        }
    }
    Ok(None)
}

/// The `k` most frequent pairs, where `k` comes from `override_k` or from
/// the knee of the sorted frequency curve.
pub fn select_frequent_pairs(
    table: &DaPairFrequencyTable,
    override_k: Option<usize>,
    sensitivity: f64,
) -> Result<Vec<DaPair>, PatternError> {
    if table.total() == 0 {
        return Err(PatternError::SelectionAmbiguous);
    }
    let sorted = table.sorted_desc();
    let k = match override_k {
        Some(k) if k == 0 || k > sorted.len() => return Err(PatternError::BadCount(k)),
        Some(k) => k,
        None => {
            let curve: Vec<f64> = sorted.iter().map(|(_, c)| *c as f64).collect();
            kneedle_elbow(&curve, sensitivity)?.ok_or(PatternError::SelectionAmbiguous)?
        }
    };
    Ok(sorted.into_iter().take(k).map(|(p, _)| p).collect())
}
