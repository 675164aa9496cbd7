#![allow(dead_code)]

use horizon_eval::domain::{enumerate_eval_points, EvalConfig, Event, GroundTruthSequence, PredictedEvent, PredictionSet};
use horizon_eval::evaluate::{align, EvalInstance};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn config(num_classes: usize, horizon: f64, delta: f64) -> EvalConfig {
    EvalConfig {
        num_classes,
        horizon,
        delta,
        otd_prefix: 5,
        otd_insert_cost: 1.0,
        otd_delete_cost: 1.0,
        eval_stride: 1,
        min_history: 1,
    }
}

pub struct Dataset {
    pub gts: Vec<GroundTruthSequence>,
    pub preds: Vec<PredictionSet>,
    pub cfg: EvalConfig,
}

impl Dataset {
    pub fn instances(&self) -> Vec<EvalInstance<'_>> {
        align(&self.gts, &self.preds, &self.cfg).expect("generated datasets align")
    }

    pub fn map_scores(&self, f: impl Fn(f64) -> f64) -> Dataset {
        let preds = self
            .preds
            .iter()
            .map(|p| PredictionSet {
                events: p
                    .events
                    .iter()
                    .map(|e| PredictedEvent::new(e.t, e.scores.iter().map(|&s| f(s)).collect()))
                    .collect(),
                ..p.clone()
            })
            .collect();
        Dataset {
            gts: self.gts.clone(),
            preds,
            cfg: self.cfg.clone(),
        }
    }
}

fn sorted_times(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64, tie_grid: Option<f64>) -> Vec<f64> {
    let mut ts: Vec<f64> = (0..n)
        .map(|_| {
            let t = rng.random_range(lo..hi);
            match tie_grid {
                Some(g) => ((t / g).ceil() * g).min(hi),
                None => t,
            }
        })
        .collect();
    ts.sort_by(f64::total_cmp);
    ts
}

fn scores(rng: &mut ChaCha8Rng, num_classes: usize, tied: bool) -> Vec<f64> {
    (0..num_classes)
        .map(|_| {
            if tied {
                rng.random_range(0..4) as f64 * 0.25
            } else {
                rng.random::<f64>()
            }
        })
        .collect()
}

/// One evaluation point per sequence at `t = 0`, with at most `max_events`
/// ground-truth and predicted events inside the horizon. `tied` quantizes
/// scores and times so that ties are common.
pub fn small_dataset(rng: &mut ChaCha8Rng, n_pairs: usize, num_classes: usize, max_events: usize, tied: bool) -> Dataset {
    let horizon = 5.0;
    let delta = rng.random_range(0.3..2.0);
    let grid = tied.then_some(0.5);
    let mut cfg = config(num_classes, horizon, delta);
    cfg.eval_stride = usize::MAX;

    let mut gts = Vec::with_capacity(n_pairs);
    let mut preds = Vec::with_capacity(n_pairs);
    for s in 0..n_pairs {
        let seq_id = format!("s{s}");
        let n_gt = rng.random_range(0..=max_events);
        let n_pred = rng.random_range(0..=max_events);
        let mut events = vec![Event::new(0.0, 0), Event::new(0.0, 0)];
        for t in sorted_times(rng, n_gt, 1e-3, horizon, grid) {
            events.push(Event::new(t, rng.random_range(0..num_classes)));
        }
        let pred_events = sorted_times(rng, n_pred, 1e-3, horizon, grid)
            .into_iter()
            .map(|t| PredictedEvent::new(t, scores(rng, num_classes, tied)))
            .collect();
        gts.push(GroundTruthSequence::new(seq_id.clone(), events).unwrap());
        preds.push(PredictionSet::new(seq_id, 0.0, pred_events).unwrap());
    }
    Dataset { gts, preds, cfg }
}

pub fn random_sequences(rng: &mut ChaCha8Rng, n_seq: usize, seq_len: usize, num_classes: usize) -> Vec<GroundTruthSequence> {
    (0..n_seq)
        .map(|s| {
            let mut t = 0.0;
            let events = (0..seq_len)
                .map(|i| {
                    if i > 0 {
                        t += -(1.0 - rng.random::<f64>()).ln();
                    }
                    Event::new(t, rng.random_range(0..num_classes))
                })
                .collect();
            GroundTruthSequence::new(format!("s{s}"), events).unwrap()
        })
        .collect()
}

/// Noisy forecasts at every evaluation point: each future ground-truth event in
/// the horizon is reproduced with probability 0.7 with jittered time and a
/// score bump on its class, plus a few spurious events.
pub fn noisy_predictions(rng: &mut ChaCha8Rng, gts: &[GroundTruthSequence], cfg: &EvalConfig) -> Vec<PredictionSet> {
    let mut out = Vec::new();
    for g in gts {
        for point in enumerate_eval_points(g, cfg) {
            let t0 = point.eval_time;
            let mut events: Vec<PredictedEvent> = Vec::new();
            for e in &g.events[point.index + 1..] {
                if e.t > t0 + cfg.horizon {
                    break;
                }
                if rng.random::<f64>() < 0.7 {
                    let mut s = scores(rng, cfg.num_classes, false);
                    s[e.label] += rng.random_range(0.0..1.5);
                    let t = (e.t + rng.random_range(-0.5..0.5) * cfg.delta).max(t0);
                    events.push(PredictedEvent::new(t, s));
                }
            }
            for _ in 0..rng.random_range(0..3) {
                let t = t0 + rng.random_range(0.0..cfg.horizon);
                events.push(PredictedEvent::new(t, scores(rng, cfg.num_classes, false)));
            }
            events.sort_by(|a, b| a.t.total_cmp(&b.t));
            out.push(PredictionSet::new(g.seq_id.clone(), t0, events).unwrap());
        }
    }
    out
}

pub fn noisy_dataset(rng: &mut ChaCha8Rng, n_seq: usize, seq_len: usize, cfg: EvalConfig) -> Dataset {
    let gts = random_sequences(rng, n_seq, seq_len, cfg.num_classes);
    let preds = noisy_predictions(rng, &gts, &cfg);
    Dataset { gts, preds, cfg }
}
