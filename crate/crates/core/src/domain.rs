//! Event sequences, prediction sets, evaluation config and horizon windowing.
//!
//! Every sequence in this crate is time-sorted (non-decreasing), so the horizon
//! window after an evaluation point is a contiguous sub-slice and is returned
//! by reference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, IngestCode, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub label: usize,
}

impl Event {
    pub fn new(t: f64, label: usize) -> Self {
        Self { t, label }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthSequence {
    pub seq_id: String,
    pub events: Vec<Event>,
}

impl GroundTruthSequence {
    /// Builds a sequence, rejecting non-finite or decreasing timestamps.
    pub fn new(seq_id: impl Into<String>, events: Vec<Event>) -> Result<Self> {
        let seq = Self {
            seq_id: seq_id.into(),
            events,
        };
        seq.check_times()?;
        Ok(seq)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().map(|e| e.t)
    }

    fn check_times(&self) -> Result<()> {
        check_sorted(self.times()).map_err(|i| {
            Error::invalid(IngestCode::UnsortedTimes, format!(
                "sequence {:?}: timestamp at position {i} is non-finite or decreasing",
                self.seq_id
            ))
        })
    }

    pub fn check_labels(&self, num_classes: usize) -> Result<()> {
        match self.events.iter().position(|e| e.label >= num_classes) {
            Some(i) => Err(Error::invalid(IngestCode::LabelOutOfRange, format!(
                "sequence {:?}: label {} at position {i} is outside [0, {num_classes})",
                self.seq_id, self.events[i].label
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedEvent {
    pub t: f64,
    pub scores: Vec<f64>,
}

impl PredictedEvent {
    pub fn new(t: f64, scores: Vec<f64>) -> Self {
        Self { t, scores }
    }

    /// One-hot score vector for a hard label.
    pub fn one_hot(t: f64, label: usize, num_classes: usize) -> Self {
        let mut scores = vec![0.0; num_classes];
        scores[label] = 1.0;
        Self { t, scores }
    }

    pub fn hard_label(&self) -> usize {
        hard_label(&self.scores)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub seq_id: String,
    /// Timestamp of the last observed event.
    pub eval_time: f64,
    pub events: Vec<PredictedEvent>,
}

impl PredictionSet {
    pub fn new(seq_id: impl Into<String>, eval_time: f64, events: Vec<PredictedEvent>) -> Result<Self> {
        let set = Self {
            seq_id: seq_id.into(),
            eval_time,
            events,
        };
        if !eval_time.is_finite() {
            return Err(Error::invalid(IngestCode::UnsortedTimes, format!(
                "prediction set {:?}: eval_time is not finite",
                set.seq_id
            )));
        }
        check_sorted(set.events.iter().map(|e| e.t)).map_err(|i| {
            Error::invalid(IngestCode::UnsortedTimes, format!(
                "prediction set {:?}: timestamp at position {i} is non-finite or decreasing",
                set.seq_id
            ))
        })?;
        if let Some(i) = set.events.iter().position(|e| e.t < eval_time) {
            return Err(Error::invalid(IngestCode::UnsortedTimes, format!(
                "prediction set {:?}: event {i} precedes eval_time",
                set.seq_id
            )));
        }
        Ok(set)
    }

    pub fn check_scores(&self, num_classes: usize) -> Result<()> {
        for (i, e) in self.events.iter().enumerate() {
            if e.scores.len() != num_classes {
                return Err(Error::invalid(IngestCode::ScoresLength, format!(
                    "prediction set {:?}: event {i} has {} scores, expected {num_classes}",
                    self.seq_id,
                    e.scores.len()
                )));
            }
            if e.scores.iter().any(|s| !s.is_finite()) {
                return Err(Error::invalid(IngestCode::Schema, format!(
                    "prediction set {:?}: event {i} has a non-finite score",
                    self.seq_id
                )));
            }
        }
        Ok(())
    }
}

/// Index of the largest score; ties resolve to the lowest class index.
pub fn hard_label(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Returns the position of the first offending value.
fn check_sorted(times: impl Iterator<Item = f64>) -> std::result::Result<(), usize> {
    let mut prev = f64::NEG_INFINITY;
    for (i, t) in times.enumerate() {
        if !t.is_finite() || t < prev {
            return Err(i);
        }
        prev = t;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub num_classes: usize,
    /// Horizon length T.
    pub horizon: f64,
    /// Maximum |Δt| for a prediction to be matchable to a ground-truth event.
    pub delta: f64,
    /// OTD prefix length K.
    pub otd_prefix: usize,
    pub otd_insert_cost: f64,
    pub otd_delete_cost: f64,
    #[serde(default = "default_one")]
    pub eval_stride: usize,
    #[serde(default = "default_one")]
    pub min_history: usize,
}

fn default_one() -> usize {
    1
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::config(msg));
        if self.num_classes == 0 {
            return fail("num_classes must be at least 1".into());
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return fail(format!("delta must be positive, got {}", self.delta));
        }
        if !(self.horizon.is_finite() && self.horizon > self.delta) {
            return fail(format!(
                "horizon ({}) must be larger than delta ({})",
                self.horizon, self.delta
            ));
        }
        if self.otd_prefix == 0 {
            return fail("otd_prefix must be at least 1".into());
        }
        for (name, c) in [
            ("otd_insert_cost", self.otd_insert_cost),
            ("otd_delete_cost", self.otd_delete_cost),
        ] {
            if !(c.is_finite() && c >= 0.0) {
                return fail(format!("{name} must be a non-negative number, got {c}"));
            }
        }
        if self.eval_stride == 0 {
            return fail("eval_stride must be at least 1".into());
        }
        if self.min_history == 0 {
            return fail("min_history must be at least 1".into());
        }
        Ok(())
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self {
            delta,
            ..self.clone()
        }
    }
}

/// Ground-truth and predicted events inside `(eval_time, eval_time + T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonSlice<'a> {
    pub eval_time: f64,
    pub gt_window: &'a [Event],
    pub pred_window: &'a [PredictedEvent],
}

fn window<T>(items: &[T], time: impl Fn(&T) -> f64, start: f64, end: f64) -> &[T] {
    let lo = items.partition_point(|e| time(e) <= start);
    let hi = items.partition_point(|e| time(e) <= end);
    &items[lo..hi.max(lo)]
}

pub fn slice_horizon<'a>(
    gt: &'a GroundTruthSequence,
    pred: &'a PredictionSet,
    cfg: &EvalConfig,
) -> HorizonSlice<'a> {
    slice_horizon_events(&gt.events, pred, cfg.horizon)
}

pub fn slice_horizon_events<'a>(
    gt_events: &'a [Event],
    pred: &'a PredictionSet,
    horizon: f64,
) -> HorizonSlice<'a> {
    let start = pred.eval_time;
    let end = start + horizon;
    HorizonSlice {
        eval_time: start,
        gt_window: window(gt_events, |e| e.t, start, end),
        pred_window: window(&pred.events, |e| e.t, start, end),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub index: usize,
    pub eval_time: f64,
}

/// Indices `min_history, min_history + stride, ...` up to the last event.
pub fn enumerate_eval_points(gt: &GroundTruthSequence, cfg: &EvalConfig) -> Vec<EvalPoint> {
    let stride = cfg.eval_stride.max(1);
    (cfg.min_history..gt.len())
        .step_by(stride)
        .map(|index| EvalPoint {
            index,
            eval_time: gt.events[index].t,
        })
        .collect()
}

/// The first `min(k, len)` items.
pub fn prefix<T>(events: &[T], k: usize) -> &[T] {
    &events[..k.min(events.len())]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(horizon: f64) -> EvalConfig {
        EvalConfig {
            num_classes: 2,
            horizon,
            delta: 1.0,
            otd_prefix: 5,
            otd_insert_cost: 1.0,
            otd_delete_cost: 1.0,
            eval_stride: 1,
            min_history: 1,
        }
    }

    fn gt(times: &[f64]) -> GroundTruthSequence {
        GroundTruthSequence::new("s", times.iter().map(|&t| Event::new(t, 0)).collect()).unwrap()
    }

    fn pred(eval_time: f64, times: &[f64]) -> PredictionSet {
        let events = times.iter().map(|&t| PredictedEvent::new(t, vec![1.0, 0.0])).collect();
        PredictionSet::new("s", eval_time, events).unwrap()
    }

    #[test]
    fn horizon_window_is_left_open_right_closed() {
        let g = gt(&[5.0, 6.0, 9.0, 20.0]);
        let p = pred(5.0, &[]);
        let s = slice_horizon(&g, &p, &cfg(10.0));
        let times: Vec<f64> = s.gt_window.iter().map(|e| e.t).collect();
        assert_eq!(times, vec![6.0, 9.0]);
        assert!(s.pred_window.is_empty());

        let g = gt(&[5.0, 6.0, 15.0, 15.5]);
        let s = slice_horizon(&g, &p, &cfg(10.0));
        assert_eq!(s.gt_window.last().unwrap().t, 15.0);
    }

    #[test]
    fn predictions_at_eval_time_fall_outside_the_window() {
        let g = gt(&[0.0, 1.0]);
        let p = pred(1.0, &[1.0, 1.0, 2.0]);
        let s = slice_horizon(&g, &p, &cfg(3.0));
        assert_eq!(s.pred_window.len(), 1);
        assert_eq!(s.pred_window[0].t, 2.0);
    }

    #[test]
    fn eval_points_follow_stride() {
        let g = gt(&(0..10).map(f64::from).collect::<Vec<_>>());
        let mut c = cfg(5.0);
        c.min_history = 4;
        c.eval_stride = 3;
        let idx: Vec<usize> = enumerate_eval_points(&g, &c).iter().map(|p| p.index).collect();
        assert_eq!(idx, vec![4, 7]);

        let short = gt(&[0.0, 1.0, 2.0]);
        assert!(enumerate_eval_points(&short, &c).is_empty());

        let five = gt(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let idx: Vec<usize> = enumerate_eval_points(&five, &cfg(5.0)).iter().map(|p| p.index).collect();
        assert_eq!(idx, vec![1, 2, 3, 4]);
    }

    #[test]
    fn prefix_truncates() {
        let v: Vec<usize> = (0..7).collect();
        assert_eq!(prefix(&v, 5), &[0, 1, 2, 3, 4]);
        assert_eq!(prefix(&v[..3], 5), &[0, 1, 2]);
    }

    #[test]
    fn config_validation() {
        assert!(cfg(5.0).validate().is_ok());
        let mut c = cfg(5.0);
        c.otd_prefix = 0;
        assert!(c.validate().is_err());
        let mut c = cfg(5.0);
        c.eval_stride = 0;
        assert!(c.validate().is_err());
        assert!(cfg(1.0).validate().is_err());
        let mut c = cfg(5.0);
        c.delta = 0.0;
        assert!(c.validate().is_err());
        let mut c = cfg(5.0);
        c.otd_delete_cost = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn hard_label_prefers_lowest_index_on_ties() {
        assert_eq!(hard_label(&[0.2, 0.5, 0.5]), 1);
        assert_eq!(hard_label(&[1.0, 1.0, 1.0]), 0);
        assert_eq!(hard_label(&[-3.0, -1.0]), 1);
    }

    #[test]
    fn sequences_reject_decreasing_times() {
        assert!(GroundTruthSequence::new("x", vec![Event::new(1.0, 0), Event::new(0.5, 0)]).is_err());
        assert!(GroundTruthSequence::new("x", vec![Event::new(1.0, 0), Event::new(1.0, 1)]).is_ok());
        assert!(PredictionSet::new("x", 2.0, vec![PredictedEvent::new(1.0, vec![0.0])]).is_err());
    }
}
