//! Label-entropy diagnostics for mode collapse.

use serde::{Deserialize, Serialize};

use crate::domain::HorizonSlice;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    /// Shannon entropy (nats) of the pooled predicted hard-label histogram.
    pub predicted_entropy: f64,
    pub gt_entropy: f64,
    pub mean_pred_len: f64,
    pub mean_gt_len: f64,
}

/// Shannon entropy in nats; empty classes contribute nothing.
pub fn entropy(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum::<f64>()
        .max(0.0)
}

/// Pools label histograms over all windows. An empty pool has entropy 0.
pub fn entropy_report(windows: &[HorizonSlice<'_>], num_classes: usize) -> Result<EntropyReport> {
    let mut pred_counts = vec![0usize; num_classes];
    let mut gt_counts = vec![0usize; num_classes];
    let (mut n_pred, mut n_gt) = (0usize, 0usize);
    for w in windows {
        for p in w.pred_window {
            pred_counts[p.hard_label()] += 1;
        }
        for e in w.gt_window {
            gt_counts[e.label] += 1;
        }
        n_pred += w.pred_window.len();
        n_gt += w.gt_window.len();
    }
    if windows.is_empty() || n_pred + n_gt == 0 {
        return Err(Error::EmptyEvaluation("all horizon windows are empty".into()));
    }
    let n = windows.len() as f64;
    Ok(EntropyReport {
        predicted_entropy: entropy(&pred_counts),
        gt_entropy: entropy(&gt_counts),
        mean_pred_len: n_pred as f64 / n,
        mean_gt_len: n_gt as f64 / n,
    })
}
