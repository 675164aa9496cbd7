//! Temporal mean average precision.
//!
//! For every class, one optimal matching per `(sequence, evaluation point)`
//! window splits predictions into matched and unmatched. Because the optimal
//! matching of any score-thresholded subgraph can be taken as a subset of the
//! full optimal matching, that single split yields the true-positive count at
//! every threshold, and the precision-recall curve follows from one descending
//! sweep over the pooled scores.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::{solve_bruteforce, solve_optimal, BipartiteCostGraph, Edge, BRUTEFORCE_MAX_SIDE};
use crate::domain::{EvalConfig, Event, PredictedEvent};
use crate::error::{Error, Result};
use crate::evaluate::EvalInstance;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassMatchResult {
    /// Class scores of predictions that received a ground-truth event.
    pub matched_scores: Vec<f64>,
    pub unmatched_pred_scores: Vec<f64>,
    pub n_unmatched_gt: usize,
    pub n_gt: usize,
}

/// Optimal matching between the window's predictions (scored for `class`)
/// and the window's ground-truth events of that class.
pub fn match_class(
    pred_window: &[PredictedEvent],
    gt_window: &[Event],
    class: usize,
    delta: f64,
) -> ClassMatchResult {
    let gt_times: Vec<f64> = gt_window
        .iter()
        .filter(|e| e.label == class)
        .map(|e| e.t)
        .collect();
    let scores: Vec<f64> = pred_window.iter().map(|p| p.scores[class]).collect();
    if gt_times.is_empty() {
        return ClassMatchResult {
            matched_scores: Vec::new(),
            unmatched_pred_scores: scores,
            n_unmatched_gt: 0,
            n_gt: 0,
        };
    }

    let mut edges = Vec::new();
    for (i, p) in pred_window.iter().enumerate() {
        let lo = gt_times.partition_point(|&t| t < p.t - delta);
        for (j, &t) in gt_times.iter().enumerate().skip(lo) {
            if t > p.t + delta {
                break;
            }
            if (p.t - t).abs() <= delta {
                edges.push(Edge {
                    left: i,
                    right: j,
                    weight: -scores[i],
                });
            }
        }
    }
    let graph = BipartiteCostGraph::from_edges(pred_window.len(), gt_times.len(), edges)
        .expect("edges are unique and in range by construction");
    let matching = solve_optimal(&graph);

    let mut is_matched = vec![false; pred_window.len()];
    for &(i, _) in &matching.pairs {
        is_matched[i] = true;
    }
    let (matched, unmatched): (Vec<(usize, f64)>, Vec<(usize, f64)>) = scores
        .iter()
        .copied()
        .enumerate()
        .partition(|&(i, _)| is_matched[i]);
    ClassMatchResult {
        matched_scores: matched.into_iter().map(|(_, s)| s).collect(),
        unmatched_pred_scores: unmatched.into_iter().map(|(_, s)| s).collect(),
        n_unmatched_gt: gt_times.len() - matching.len(),
        n_gt: gt_times.len(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    /// `(recall, precision)` after each distinct score threshold, descending.
    pub points: Vec<(f64, f64)>,
}

impl PrCurve {
    /// Step-sum `Σ (Rec_i - Rec_{i-1}) Prec_i` with `Rec_0 = 0`.
    pub fn average_precision(&self) -> f64 {
        let mut prev = 0.0;
        let mut ap = 0.0;
        for &(recall, precision) in &self.points {
            ap += (recall - prev) * precision;
            prev = recall;
        }
        ap
    }
}

/// Scores labelled positive (matched) or negative, sorted by descending score.
fn pooled_scores<'a>(results: impl IntoIterator<Item = &'a ClassMatchResult>) -> (Vec<(f64, bool)>, usize) {
    let mut pooled = Vec::new();
    let mut n_gt = 0;
    for r in results {
        n_gt += r.n_gt;
        pooled.extend(r.matched_scores.iter().map(|&s| (s, true)));
        pooled.extend(r.unmatched_pred_scores.iter().map(|&s| (s, false)));
    }
    pooled.sort_by(|a, b| b.0.total_cmp(&a.0));
    (pooled, n_gt)
}

/// Counts `(tp, fp)` after each group of equal scores.
fn threshold_counts(pooled: &[(f64, bool)]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < pooled.len() {
        let s = pooled[i].0;
        while i < pooled.len() && pooled[i].0.total_cmp(&s) == Ordering::Equal {
            if pooled[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        out.push((tp, fp));
    }
    out
}

/// Precision-recall curve of the pooled results; `None` without ground truth.
pub fn pr_curve<'a>(results: impl IntoIterator<Item = &'a ClassMatchResult>) -> Option<PrCurve> {
    let (pooled, n_gt) = pooled_scores(results);
    if n_gt == 0 {
        return None;
    }
    let points = threshold_counts(&pooled)
        .into_iter()
        .map(|(tp, fp)| (tp as f64 / n_gt as f64, tp as f64 / (tp + fp) as f64))
        .collect();
    Some(PrCurve { points })
}

/// Average precision of one class pooled over the dataset.
pub fn ap_from_matches<'a>(results: impl IntoIterator<Item = &'a ClassMatchResult>) -> Option<f64> {
    pr_curve(results).map(|c| c.average_precision())
}

/// Same quantity computed as the AP of the matched-vs-unmatched binary
/// problem, rescaled by the maximum recall `Σ|matched| / Σ n_gt`.
pub fn ap_via_binary_auc<'a>(results: impl IntoIterator<Item = &'a ClassMatchResult>) -> Option<f64> {
    let (pooled, n_gt) = pooled_scores(results);
    if n_gt == 0 {
        return None;
    }
    let positives = pooled.iter().filter(|p| p.1).count();
    if positives == 0 {
        return Some(0.0);
    }
    let mut prev = 0.0;
    let mut auc = 0.0;
    for (tp, fp) in threshold_counts(&pooled) {
        let recall = tp as f64 / positives as f64;
        auc += (recall - prev) * (tp as f64 / (tp + fp) as f64);
        prev = recall;
    }
    Some(auc * positives as f64 / n_gt as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TmapReport {
    /// `None` for classes without ground truth in any window.
    pub per_class_ap: Vec<Option<f64>>,
    pub class_n_gt: Vec<usize>,
    /// Ground-truth frequency of each class among all windows.
    pub class_weights: Vec<f64>,
    #[serde(rename = "macro")]
    pub macro_ap: f64,
    pub weighted: f64,
}

impl TmapReport {
    fn from_per_class(per_class_ap: Vec<Option<f64>>, class_n_gt: Vec<usize>) -> Result<Self> {
        let total: usize = class_n_gt.iter().sum();
        if total == 0 {
            return Err(Error::EmptyEvaluation(
                "no ground-truth events inside any horizon window".into(),
            ));
        }
        let class_weights: Vec<f64> = class_n_gt.iter().map(|&n| n as f64 / total as f64).collect();
        let present: Vec<f64> = per_class_ap.iter().flatten().copied().collect();
        let macro_ap = present.iter().sum::<f64>() / present.len() as f64;
        let weighted = per_class_ap
            .iter()
            .zip(&class_weights)
            .filter_map(|(ap, w)| ap.map(|ap| ap * w))
            .sum();
        Ok(Self {
            per_class_ap,
            class_n_gt,
            class_weights,
            macro_ap,
            weighted,
        })
    }
}

/// Per-class match results for one evaluation instance.
pub fn instance_matches(instance: &EvalInstance<'_>, cfg: &EvalConfig) -> Vec<ClassMatchResult> {
    let slice = instance.horizon(cfg);
    (0..cfg.num_classes)
        .map(|class| match_class(slice.pred_window, slice.gt_window, class, cfg.delta))
        .collect()
}

pub fn tmap(instances: &[EvalInstance<'_>], cfg: &EvalConfig) -> Result<TmapReport> {
    if instances.is_empty() {
        return Err(Error::EmptyEvaluation("no evaluation points for T-mAP".into()));
    }
    let results: Vec<Vec<ClassMatchResult>> = instances
        .par_iter()
        .map(|inst| instance_matches(inst, cfg))
        .collect();
    let per_class: Vec<Option<f64>> = (0..cfg.num_classes)
        .into_par_iter()
        .map(|class| ap_from_matches(results.iter().map(|r| &r[class])))
        .collect();
    let class_n_gt = (0..cfg.num_classes)
        .map(|class| results.iter().map(|r| r[class].n_gt).sum())
        .collect();
    TmapReport::from_per_class(per_class, class_n_gt)
}

/// T-mAP with an independent maximum-coverage matching solved by enumeration
/// at every distinct threshold. Windows must hold at most
/// [`BRUTEFORCE_MAX_SIDE`] events per side.
pub fn tmap_bruteforce(instances: &[EvalInstance<'_>], cfg: &EvalConfig) -> Result<TmapReport> {
    if instances.is_empty() {
        return Err(Error::EmptyEvaluation("no evaluation points for T-mAP".into()));
    }
    let slices: Vec<_> = instances.iter().map(|inst| inst.horizon(cfg)).collect();
    for s in &slices {
        let side = s.pred_window.len().max(s.gt_window.len());
        if side > BRUTEFORCE_MAX_SIDE {
            return Err(Error::SizeGuard {
                size: side,
                limit: BRUTEFORCE_MAX_SIDE,
            });
        }
    }

    let mut per_class = Vec::with_capacity(cfg.num_classes);
    let mut class_n_gt = Vec::with_capacity(cfg.num_classes);
    for class in 0..cfg.num_classes {
        let n_gt: usize = slices
            .iter()
            .map(|s| s.gt_window.iter().filter(|e| e.label == class).count())
            .sum();
        class_n_gt.push(n_gt);
        if n_gt == 0 {
            per_class.push(None);
            continue;
        }

        let mut thresholds: Vec<f64> = slices
            .iter()
            .flat_map(|s| s.pred_window.iter().map(|p| p.scores[class]))
            .collect();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();

        let mut ap = 0.0;
        let mut prev_recall = 0.0;
        for &h in &thresholds {
            let mut covered = 0;
            let mut selected = 0;
            for s in &slices {
                let kept: Vec<f64> = s
                    .pred_window
                    .iter()
                    .filter(|p| p.scores[class] >= h)
                    .map(|p| p.t)
                    .collect();
                let gts: Vec<f64> = s.gt_window.iter().filter(|e| e.label == class).map(|e| e.t).collect();
                selected += kept.len();
                let mut edges = Vec::new();
                for (i, &tp) in kept.iter().enumerate() {
                    for (j, &tg) in gts.iter().enumerate() {
                        if (tp - tg).abs() <= cfg.delta {
                            edges.push(Edge {
                                left: i,
                                right: j,
                                weight: 0.0,
                            });
                        }
                    }
                }
                let g = BipartiteCostGraph::from_edges(kept.len(), gts.len(), edges)?;
                covered += solve_bruteforce(&g)?.0;
            }
            let recall = covered as f64 / n_gt as f64;
            let precision = covered as f64 / selected as f64;
            ap += (recall - prev_recall) * precision;
            prev_recall = recall;
        }
        per_class.push(Some(ap));
    }
    TmapReport::from_per_class(per_class, class_n_gt)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaPoint {
    pub delta: f64,
    #[serde(rename = "macro")]
    pub macro_ap: f64,
    pub weighted: f64,
}

/// One full T-mAP evaluation per tolerance.
pub fn delta_sweep(instances: &[EvalInstance<'_>], cfg: &EvalConfig, deltas: &[f64]) -> Result<Vec<DeltaPoint>> {
    if let Some(&d) = deltas.iter().find(|&&d| !(d > 0.0 && d < cfg.horizon)) {
        return Err(Error::config(format!(
            "sweep delta {d} must lie in (0, horizon = {})",
            cfg.horizon
        )));
    }
    deltas
        .iter()
        .map(|&delta| {
            let report = tmap(instances, &cfg.with_delta(delta))?;
            Ok(DeltaPoint {
                delta,
                macro_ap: report.macro_ap,
                weighted: report.weighted,
            })
        })
        .collect()
}

pub fn is_non_decreasing(points: &[DeltaPoint]) -> bool {
    points.windows(2).all(|w| w[1].macro_ap >= w[0].macro_ap)
}
