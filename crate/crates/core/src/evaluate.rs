//! Pairs prediction sets with their evaluation points and assembles reports.

use std::collections::{HashMap, VecDeque};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{entropy_report, EntropyReport};
use crate::domain::{
    enumerate_eval_points, slice_horizon, EvalConfig, Event, GroundTruthSequence, HorizonSlice,
    PredictionSet,
};
use crate::error::{Error, IngestCode, Result};
use crate::next_event::{next_event_dataset, NextEventReport};
use crate::otd::{otd_dataset, OtdSummary};
use crate::tmap::{tmap, TmapReport};

/// One forecast scored against the ground truth that follows its evaluation point.
#[derive(Debug, Clone, Copy)]
pub struct EvalInstance<'a> {
    pub gt: &'a GroundTruthSequence,
    pub pred: &'a PredictionSet,
    /// Index of the last observed ground-truth event.
    pub index: usize,
}

impl<'a> EvalInstance<'a> {
    pub fn horizon(&self, cfg: &EvalConfig) -> HorizonSlice<'a> {
        slice_horizon(self.gt, self.pred, cfg)
    }

    /// Ground-truth events strictly after the evaluation index.
    pub fn gt_future(&self) -> &'a [Event] {
        &self.gt.events[self.index + 1..]
    }

    pub fn history(&self) -> &'a [Event] {
        &self.gt.events[..=self.index]
    }

    pub fn next_event(&self) -> Option<&'a Event> {
        self.gt.events.get(self.index + 1)
    }
}

/// Resolves every prediction set to an evaluation point of its sequence.
///
/// Several evaluation points may share a timestamp; prediction sets with the
/// same `(seq_id, eval_time)` are assigned to those points in index order.
pub fn align<'a>(
    gts: &'a [GroundTruthSequence],
    preds: &'a [PredictionSet],
    cfg: &EvalConfig,
) -> Result<Vec<EvalInstance<'a>>> {
    let mut by_id: HashMap<&str, usize> = HashMap::with_capacity(gts.len());
    for (k, g) in gts.iter().enumerate() {
        if by_id.insert(g.seq_id.as_str(), k).is_some() {
            return Err(Error::input(
                IngestCode::Schema,
                k + 1,
                format!("duplicate seq_id {:?} in ground truth", g.seq_id),
            ));
        }
    }

    let mut open: HashMap<(usize, u64), VecDeque<usize>> = HashMap::new();
    let mut built = vec![false; gts.len()];
    let mut instances = Vec::with_capacity(preds.len());
    for (k, p) in preds.iter().enumerate() {
        let Some(&g) = by_id.get(p.seq_id.as_str()) else {
            return Err(Error::input(
                IngestCode::EvalTimeMismatch,
                k + 1,
                format!("prediction set references unknown seq_id {:?}", p.seq_id),
            ));
        };
        if !built[g] {
            built[g] = true;
            for point in enumerate_eval_points(&gts[g], cfg) {
                open.entry((g, time_key(point.eval_time)))
                    .or_default()
                    .push_back(point.index);
            }
        }
        let index = open
            .get_mut(&(g, time_key(p.eval_time)))
            .and_then(VecDeque::pop_front)
            .ok_or_else(|| {
                Error::input(
                    IngestCode::EvalTimeMismatch,
                    k + 1,
                    format!(
                        "eval_time {} of sequence {:?} is not an unused evaluation point (min_history {}, stride {})",
                        p.eval_time, p.seq_id, cfg.min_history, cfg.eval_stride
                    ),
                )
            })?;
        instances.push(EvalInstance { gt: &gts[g], pred: p, index });
    }
    Ok(instances)
}

/// Bit pattern of a timestamp with -0.0 folded onto 0.0.
fn time_key(t: f64) -> u64 {
    (t + 0.0).to_bits()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Tmap,
    Otd,
    Next,
    Entropy,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "tmap" => Ok(Metric::Tmap),
            "otd" => Ok(Metric::Otd),
            "next" => Ok(Metric::Next),
            "entropy" => Ok(Metric::Entropy),
            other => Err(Error::config(format!(
                "unknown metric {other:?} (expected tmap, otd, next, entropy)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricSet(Vec<Metric>);

impl MetricSet {
    pub fn all() -> Self {
        MetricSet(vec![Metric::Tmap, Metric::Otd, Metric::Next, Metric::Entropy])
    }

    pub fn contains(&self, m: Metric) -> bool {
        self.0.contains(&m)
    }
}

impl FromStr for MetricSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = Vec::new();
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            let m: Metric = part.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(Error::config("no metrics requested"));
        }
        Ok(MetricSet(out))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAp {
    pub class: usize,
    pub n_gt: usize,
    pub weight: f64,
    pub ap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TmapSummary {
    #[serde(rename = "macro")]
    pub macro_ap: f64,
    pub weighted: f64,
    pub per_class: Vec<ClassAp>,
}

impl From<&TmapReport> for TmapSummary {
    fn from(r: &TmapReport) -> Self {
        let per_class = (0..r.per_class_ap.len())
            .map(|class| ClassAp {
                class,
                n_gt: r.class_n_gt[class],
                weight: r.class_weights[class],
                ap: r.per_class_ap[class],
            })
            .collect();
        Self {
            macro_ap: r.macro_ap,
            weighted: r.weighted,
            per_class,
        }
    }
}

/// Conventions the numbers depend on, echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub horizon_interval: String,
    pub tmap_pooling: String,
    pub tmap_macro_excludes: String,
    pub otd_aggregation: String,
    pub otd_hard_labels: String,
    pub next_event_map: String,
    pub entropy_base: String,
}

impl Default for ReportMetadata {
    fn default() -> Self {
        Self {
            horizon_interval: "(eval_time, eval_time + horizon]".into(),
            tmap_pooling: "per class, pooled over all (sequence, evaluation point) windows".into(),
            tmap_macro_excludes: "classes without ground truth in any window".into(),
            otd_aggregation: "mean over (sequence, evaluation point) pairs".into(),
            otd_hard_labels: "argmax of scores, lowest class index on ties".into(),
            next_event_map: "macro one-vs-rest step-sum average precision".into(),
            entropy_base: "nats".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub config: EvalConfig,
    pub n_sequences: usize,
    pub n_eval_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tmap: Option<TmapSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub otd: Option<OtdSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_event: Option<NextEventReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy: Option<EntropyReport>,
    pub metadata: ReportMetadata,
}

/// Aligns, then computes every requested metric.
pub fn evaluate(
    gts: &[GroundTruthSequence],
    preds: &[PredictionSet],
    cfg: &EvalConfig,
    metrics: &MetricSet,
) -> Result<MetricReport> {
    cfg.validate()?;
    let instances = align(gts, preds, cfg)?;
    evaluate_instances(&instances, gts.len(), cfg, metrics)
}

pub fn evaluate_instances(
    instances: &[EvalInstance<'_>],
    n_sequences: usize,
    cfg: &EvalConfig,
    metrics: &MetricSet,
) -> Result<MetricReport> {
    if instances.is_empty() {
        return Err(Error::EmptyEvaluation("no prediction sets to evaluate".into()));
    }
    let tmap = if metrics.contains(Metric::Tmap) {
        Some(TmapSummary::from(&tmap(instances, cfg)?))
    } else {
        None
    };
    let otd = if metrics.contains(Metric::Otd) {
        Some(otd_dataset(instances, cfg)?)
    } else {
        None
    };
    let next_event = if metrics.contains(Metric::Next) {
        Some(next_event_dataset(instances, cfg.num_classes)?)
    } else {
        None
    };
    let entropy = if metrics.contains(Metric::Entropy) {
        let windows: Vec<_> = instances.iter().map(|i| i.horizon(cfg)).collect();
        Some(entropy_report(&windows, cfg.num_classes)?)
    } else {
        None
    };
    Ok(MetricReport {
        config: cfg.clone(),
        n_sequences,
        n_eval_points: instances.len(),
        tmap,
        otd,
        next_event,
        entropy,
        metadata: ReportMetadata::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::PredictedEvent;

    fn cfg() -> EvalConfig {
        EvalConfig {
            num_classes: 2,
            horizon: 5.0,
            delta: 1.0,
            otd_prefix: 3,
            otd_insert_cost: 1.0,
            otd_delete_cost: 1.0,
            eval_stride: 1,
            min_history: 1,
        }
    }

    fn gt() -> GroundTruthSequence {
        let events = [0.0, 1.0, 1.0, 2.0, 3.0]
            .iter()
            .enumerate()
            .map(|(i, &t)| Event::new(t, i % 2))
            .collect();
        GroundTruthSequence::new("a", events).unwrap()
    }

    #[test]
    fn tied_eval_times_resolve_in_index_order() {
        let g = vec![gt()];
        let p = vec![
            PredictionSet::new("a", 1.0, vec![]).unwrap(),
            PredictionSet::new("a", 1.0, vec![]).unwrap(),
            PredictionSet::new("a", 3.0, vec![]).unwrap(),
        ];
        let inst = align(&g, &p, &cfg()).unwrap();
        let idx: Vec<usize> = inst.iter().map(|i| i.index).collect();
        assert_eq!(idx, vec![1, 2, 4]);
        assert!(inst[2].next_event().is_none());
        assert_eq!(inst[0].gt_future().len(), 3);
    }

    #[test]
    fn rejects_unknown_sequences_and_eval_times() {
        let g = vec![gt()];
        let bad_time = vec![PredictionSet::new("a", 0.5, vec![]).unwrap()];
        let err = align(&g, &bad_time, &cfg()).unwrap_err();
        assert_eq!(err.ingest_code(), Some(IngestCode::EvalTimeMismatch));
        // Index 0 is history-only under min_history = 1.
        let too_early = vec![PredictionSet::new("a", 0.0, vec![]).unwrap()];
        assert!(align(&g, &too_early, &cfg()).is_err());
        let unknown = vec![PredictionSet::new("b", 1.0, vec![]).unwrap()];
        assert!(align(&g, &unknown, &cfg()).is_err());
        let twice = vec![
            PredictionSet::new("a", 3.0, vec![]).unwrap(),
            PredictionSet::new("a", 3.0, vec![]).unwrap(),
        ];
        assert!(align(&g, &twice, &cfg()).is_err());
    }

    #[test]
    fn metric_names() {
        assert!("tmap,otd".parse::<MetricSet>().unwrap().contains(Metric::Otd));
        assert!("tmap,bogus".parse::<MetricSet>().is_err());
        assert!("".parse::<MetricSet>().is_err());
    }

    #[test]
    fn perfect_predictions_report() {
        let g = vec![gt()];
        let c = cfg();
        let preds: Vec<PredictionSet> = enumerate_eval_points(&g[0], &c)
            .iter()
            .map(|p| {
                let events = g[0].events[p.index + 1..]
                    .iter()
                    .map(|e| PredictedEvent::one_hot(e.t, e.label, 2))
                    .collect();
                PredictionSet::new("a", p.eval_time, events).unwrap()
            })
            .collect();
        let report = evaluate(&g, &preds, &c, &MetricSet::all()).unwrap();
        assert_eq!(report.tmap.as_ref().unwrap().macro_ap, 1.0);
        assert_eq!(report.tmap.as_ref().unwrap().weighted, 1.0);
        assert_eq!(report.otd.as_ref().unwrap().mean, 0.0);
        let next = report.next_event.unwrap();
        assert_eq!(next.accuracy, 1.0);
        assert_eq!(next.time_mae, 0.0);
    }
}
