//! Rule-based forecasters built from history statistics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{enumerate_eval_points, EvalConfig, Event, GroundTruthSequence, PredictedEvent, PredictionSet};
use crate::error::{Error, Result};

/// Upper bound on the number of grid events a density forecast emits.
pub const MAX_GRID_EVENTS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryStats {
    pub mean_step: f64,
    pub label_counts: Vec<usize>,
    /// Events of each class per unit of observed time.
    pub label_time_density: Vec<f64>,
}

impl HistoryStats {
    fn from_totals(counts: Vec<usize>, total_step: f64, n_steps: usize, duration: f64) -> Self {
        let mean_step = if n_steps == 0 { 0.0 } else { total_step / n_steps as f64 };
        // Zero observed duration (a single event or all ties) counts as one time unit.
        let duration = if duration > 0.0 { duration } else { 1.0 };
        let label_time_density = counts.iter().map(|&c| c as f64 / duration).collect();
        Self {
            mean_step: mean_step.max(0.0),
            label_counts: counts,
            label_time_density,
        }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let total: usize = self.label_counts.iter().sum();
        self.label_counts
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect()
    }
}

/// Statistics of one observed history. Labels must be below `num_classes`.
pub fn fit(history: &[Event], num_classes: usize) -> Result<HistoryStats> {
    let (first, last) = match (history.first(), history.last()) {
        (Some(f), Some(l)) => (f.t, l.t),
        _ => return Err(Error::EmptyEvaluation("cannot fit on an empty history".into())),
    };
    let mut counts = vec![0usize; num_classes];
    for e in history {
        counts[e.label] += 1;
    }
    let duration = last - first;
    Ok(HistoryStats::from_totals(counts, duration, history.len() - 1, duration))
}

/// Statistics pooled over whole sequences.
pub fn fit_global(sequences: &[GroundTruthSequence], num_classes: usize) -> Result<HistoryStats> {
    let mut counts = vec![0usize; num_classes];
    let mut total_step = 0.0;
    let mut n_steps = 0;
    for s in sequences {
        for e in &s.events {
            counts[e.label] += 1;
        }
        if let (Some(f), Some(l)) = (s.events.first(), s.events.last()) {
            total_step += l.t - f.t;
            n_steps += s.events.len() - 1;
        }
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::EmptyEvaluation("cannot fit on empty sequences".into()));
    }
    Ok(HistoryStats::from_totals(counts, total_step, n_steps, total_step))
}

/// Largest-remainder apportionment of `k` slots to classes by frequency.
/// Remainder ties go to the more frequent class, then the lower index.
pub fn apportion(counts: &[usize], k: usize) -> Vec<usize> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        let mut slots = vec![0; counts.len()];
        if let Some(first) = slots.first_mut() {
            *first = k;
        }
        return slots;
    }
    // Integer arithmetic: quota_l = k * c_l / total.
    let mut slots: Vec<usize> = counts.iter().map(|&c| k * c / total).collect();
    let assigned: usize = slots.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = (k * counts[a]) % total;
        let rb = (k * counts[b]) % total;
        rb.cmp(&ra).then(counts[b].cmp(&counts[a])).then(a.cmp(&b))
    });
    for &class in order.iter().take(k - assigned) {
        slots[class] += 1;
    }
    slots
}

/// Label sequence for the slots: most frequent class first, then round-robin
/// over classes in frequency order until every slot is used.
fn slot_labels(counts: &[usize], slots: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..slots.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let mut remaining = slots.to_vec();
    let mut labels = Vec::with_capacity(slots.iter().sum());
    while remaining.iter().any(|&r| r > 0) {
        for &class in &order {
            if remaining[class] > 0 {
                remaining[class] -= 1;
                labels.push(class);
            }
        }
    }
    labels
}

pub fn predict_most_popular(stats: &HistoryStats, seq_id: &str, eval_time: f64, k: usize) -> PredictionSet {
    let num_classes = stats.label_counts.len();
    let slots = apportion(&stats.label_counts, k);
    let events = slot_labels(&stats.label_counts, &slots)
        .into_iter()
        .enumerate()
        .map(|(i, label)| PredictedEvent::one_hot(eval_time + (i + 1) as f64 * stats.mean_step, label, num_classes))
        .collect();
    PredictionSet {
        seq_id: seq_id.to_string(),
        eval_time,
        events,
    }
}

/// Regular grid over the horizon; every event carries the expected per-class
/// counts of its grid cell (density times step) as soft scores.
pub fn predict_history_density(stats: &HistoryStats, seq_id: &str, eval_time: f64, horizon: f64) -> PredictionSet {
    let mut step = if stats.mean_step > 0.0 { stats.mean_step } else { horizon / 16.0 };
    if horizon / step > MAX_GRID_EVENTS as f64 {
        step = horizon / MAX_GRID_EVENTS as f64;
    }
    let scores: Vec<f64> = stats.label_time_density.iter().map(|d| d * step).collect();
    let end = eval_time + horizon;
    let n = ((horizon / step) * (1.0 + 1e-12)).floor() as usize;
    let events = (1..=n.min(MAX_GRID_EVENTS))
        .map(|i| PredictedEvent::new((eval_time + i as f64 * step).min(end), scores.clone()))
        .collect();
    PredictionSet {
        seq_id: seq_id.to_string(),
        eval_time,
        events,
    }
}

/// Single-label forecasts with a fixed step: 0, 1 or the history mean.
pub fn predict_toy(kind: BaselineKind, stats: &HistoryStats, seq_id: &str, eval_time: f64, k: usize) -> Result<PredictionSet> {
    let step = match kind {
        BaselineKind::ZeroStep => 0.0,
        BaselineKind::UnitStep => 1.0,
        BaselineKind::MeanStep => stats.mean_step,
        other => return Err(Error::config(format!("{other} is not a fixed-step baseline"))),
    };
    let num_classes = stats.label_counts.len();
    let label = crate::domain::hard_label(&stats.frequencies());
    let events = (1..=k)
        .map(|i| PredictedEvent::one_hot(eval_time + i as f64 * step, label, num_classes))
        .collect();
    Ok(PredictionSet {
        seq_id: seq_id.to_string(),
        eval_time,
        events,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineKind {
    MostPopular,
    HistoryDensity,
    ZeroStep,
    UnitStep,
    MeanStep,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 5] = [
        BaselineKind::MostPopular,
        BaselineKind::HistoryDensity,
        BaselineKind::ZeroStep,
        BaselineKind::UnitStep,
        BaselineKind::MeanStep,
    ];
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            BaselineKind::MostPopular => "MostPopular",
            BaselineKind::HistoryDensity => "HistoryDensity",
            BaselineKind::ZeroStep => "ZeroStep",
            BaselineKind::UnitStep => "UnitStep",
            BaselineKind::MeanStep => "MeanStep",
        };
        f.write_str(name)
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown baseline {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitMode {
    /// Fit on each sequence's own history up to the evaluation point.
    PerSequence,
    /// Use one set of statistics everywhere.
    Global(HistoryStats),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub kind: BaselineKind,
    /// Number of predicted events for fixed-length forecasters.
    pub length: usize,
    pub fit: FitMode,
}

impl Baseline {
    pub fn new(kind: BaselineKind, length: usize) -> Self {
        Self {
            kind,
            length,
            fit: FitMode::PerSequence,
        }
    }

    pub fn predict(&self, history: &[Event], seq_id: &str, eval_time: f64, cfg: &EvalConfig) -> Result<PredictionSet> {
        let fitted;
        let stats = match &self.fit {
            FitMode::PerSequence => {
                fitted = fit(history, cfg.num_classes)?;
                &fitted
            }
            FitMode::Global(stats) => stats,
        };
        match self.kind {
            BaselineKind::MostPopular => Ok(predict_most_popular(stats, seq_id, eval_time, self.length)),
            BaselineKind::HistoryDensity => Ok(predict_history_density(stats, seq_id, eval_time, cfg.horizon)),
            toy => predict_toy(toy, stats, seq_id, eval_time, self.length),
        }
    }

    /// One prediction set per evaluation point of every sequence, in order.
    pub fn run(&self, sequences: &[GroundTruthSequence], cfg: &EvalConfig) -> Result<Vec<PredictionSet>> {
        let mut out = Vec::new();
        for seq in sequences {
            for point in enumerate_eval_points(seq, cfg) {
                let history = &seq.events[..=point.index];
                out.push(self.predict(history, &seq.seq_id, point.eval_time, cfg)?);
            }
        }
        Ok(out)
    }
}
