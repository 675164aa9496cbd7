//! Next-event label accuracy, label mAP and time MAE.

use serde::{Deserialize, Serialize};

use crate::domain::{Event, PredictedEvent};
use crate::error::{Error, Result};
use crate::evaluate::EvalInstance;
use crate::tmap::{ap_from_matches, ClassMatchResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextEventReport {
    pub accuracy: f64,
    /// Macro one-vs-rest average precision over classes that occur as a next event.
    pub label_map: f64,
    pub time_mae: f64,
    pub n_points: usize,
}

/// Scores `(first predicted event, true next event)` pairs.
pub fn next_event_metrics(pairs: &[(&PredictedEvent, &Event)], num_classes: usize) -> Result<NextEventReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyEvaluation("no next-event pairs".into()));
    }
    let n = pairs.len() as f64;
    let correct = pairs.iter().filter(|(p, e)| p.hard_label() == e.label).count();
    let abs_err: f64 = pairs.iter().map(|(p, e)| (p.t - e.t).abs()).sum();

    // Each point is its own single-event "window": positive for its true class.
    let mut aps = Vec::new();
    for class in 0..num_classes {
        let results: Vec<ClassMatchResult> = pairs
            .iter()
            .map(|(p, e)| {
                let s = p.scores[class];
                if e.label == class {
                    ClassMatchResult {
                        matched_scores: vec![s],
                        unmatched_pred_scores: Vec::new(),
                        n_unmatched_gt: 0,
                        n_gt: 1,
                    }
                } else {
                    ClassMatchResult {
                        matched_scores: Vec::new(),
                        unmatched_pred_scores: vec![s],
                        n_unmatched_gt: 0,
                        n_gt: 0,
                    }
                }
            })
            .collect();
        if let Some(ap) = ap_from_matches(&results) {
            aps.push(ap);
        }
    }

    Ok(NextEventReport {
        accuracy: correct as f64 / n,
        label_map: aps.iter().sum::<f64>() / aps.len() as f64,
        time_mae: abs_err / n,
        n_points: pairs.len(),
    })
}

/// Uses every instance that has both a predicted event and a true next event.
pub fn next_event_dataset(instances: &[EvalInstance<'_>], num_classes: usize) -> Result<NextEventReport> {
    let pairs: Vec<(&PredictedEvent, &Event)> = instances
        .iter()
        .filter_map(|inst| Some((inst.pred.events.first()?, inst.next_event()?)))
        .collect();
    next_event_metrics(&pairs, num_classes)
}
