//! Optimal transport distance between a predicted prefix and a ground-truth
//! prefix: the cheapest label-preserving matching, paying `|Δt|` per matched
//! pair, the delete cost per unmatched prediction and the insert cost per
//! unmatched ground-truth event.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::{min_cost_assignment, CostMatrix, Matching};
use crate::domain::{prefix, EvalConfig, Event};
use crate::error::{Error, Result};
use crate::evaluate::EvalInstance;

#[derive(Debug, Clone, Copy)]
pub struct OtdInput<'a> {
    /// Predicted events with hard labels.
    pub pred: &'a [Event],
    pub gt: &'a [Event],
    pub insert_cost: f64,
    pub delete_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OtdValue {
    pub cost: f64,
    /// `(prediction, ground truth)` pairs of the optimal transport plan.
    pub matching: Matching,
}

/// Exact OTD via an `(n_p + n_gt)`-square assignment: the extra rows and
/// columns absorb insertions and deletions.
pub fn otd(input: &OtdInput<'_>) -> OtdValue {
    let np = input.pred.len();
    let ng = input.gt.len();
    let n = np + ng;
    if n == 0 {
        return OtdValue {
            cost: 0.0,
            matching: Matching::default(),
        };
    }

    let mut costs = CostMatrix::filled(n, n, 0.0);
    for (i, p) in input.pred.iter().enumerate() {
        for (j, g) in input.gt.iter().enumerate() {
            let c = if p.label == g.label {
                (p.t - g.t).abs()
            } else {
                f64::INFINITY
            };
            costs.set(i, j, c);
        }
        for j in ng..n {
            costs.set(i, j, input.delete_cost);
        }
    }
    for i in np..n {
        for j in 0..ng {
            costs.set(i, j, input.insert_cost);
        }
    }

    let assignment = min_cost_assignment(&costs);
    let solved: Vec<(usize, usize)> = assignment[..np]
        .iter()
        .enumerate()
        .filter(|&(_, &j)| j < ng)
        .map(|(i, &j)| (i, j))
        .collect();
    let pairs = monotone_pairs(input, &solved);
    // Summed in sorted order so that swapping the two sides gives the same bits.
    let mut moves: Vec<f64> = pairs
        .iter()
        .map(|&(i, j)| (input.pred[i].t - input.gt[j].t).abs())
        .collect();
    moves.sort_by(f64::total_cmp);
    let transport: f64 = moves.iter().sum();
    let matched = pairs.len();
    let edits = input.delete_cost * (np - matched) as f64 + input.insert_cost * (ng - matched) as f64;
    let cost = transport + edits;
    OtdValue {
        cost,
        matching: Matching { pairs },
    }
}

/// Re-pairs the matched events of each label in time order. On a line this
/// pairing is optimal for the same matched sets, and it is the same whichever
/// side is called the prediction, so tied optimal plans yield identical sums.
fn monotone_pairs(input: &OtdInput<'_>, solved: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let by_time = |events: &[Event], idx: &mut Vec<usize>| {
        idx.sort_by(|&a, &b| events[a].t.total_cmp(&events[b].t).then(a.cmp(&b)));
    };
    let mut labels: Vec<usize> = solved.iter().map(|&(i, _)| input.pred[i].label).collect();
    labels.sort_unstable();
    labels.dedup();
    let mut pairs = Vec::with_capacity(solved.len());
    for label in labels {
        let (mut p, mut g): (Vec<usize>, Vec<usize>) = solved
            .iter()
            .filter(|&&(i, _)| input.pred[i].label == label)
            .copied()
            .unzip();
        by_time(input.pred, &mut p);
        by_time(input.gt, &mut g);
        pairs.extend(p.into_iter().zip(g));
    }
    pairs.sort_unstable();
    pairs
}

/// Largest prefix accepted by [`otd_bruteforce`].
pub const OTD_BRUTEFORCE_MAX: usize = 6;

/// OTD by exhaustive enumeration of label-compatible matchings.
pub fn otd_bruteforce(input: &OtdInput<'_>) -> Result<f64> {
    let side = input.pred.len().max(input.gt.len());
    if side > OTD_BRUTEFORCE_MAX {
        return Err(Error::SizeGuard {
            size: side,
            limit: OTD_BRUTEFORCE_MAX,
        });
    }

    fn walk(input: &OtdInput<'_>, i: usize, used: u32, matched: usize, transport: f64, best: &mut f64) {
        if i == input.pred.len() {
            let cost = transport
                + input.delete_cost * (input.pred.len() - matched) as f64
                + input.insert_cost * (input.gt.len() - matched) as f64;
            if cost < *best {
                *best = cost;
            }
            return;
        }
        walk(input, i + 1, used, matched, transport, best);
        let p = input.pred[i];
        for (j, g) in input.gt.iter().enumerate() {
            if used & (1 << j) == 0 && g.label == p.label {
                walk(input, i + 1, used | (1 << j), matched + 1, transport + (p.t - g.t).abs(), best);
            }
        }
    }

    let mut best = f64::INFINITY;
    walk(input, 0, 0, 0, 0.0, &mut best);
    Ok(best)
}

/// Hard-labelled prediction prefix and ground-truth prefix after the evaluation point.
pub fn instance_prefixes<'a>(instance: &EvalInstance<'a>, k: usize) -> (Vec<Event>, &'a [Event]) {
    let pred = prefix(&instance.pred.events, k)
        .iter()
        .map(|e| Event::new(e.t, e.hard_label()))
        .collect();
    (pred, prefix(instance.gt_future(), k))
}

pub fn instance_otd(instance: &EvalInstance<'_>, cfg: &EvalConfig) -> f64 {
    let (pred, gt) = instance_prefixes(instance, cfg.otd_prefix);
    otd(&OtdInput {
        pred: &pred,
        gt,
        insert_cost: cfg.otd_insert_cost,
        delete_cost: cfg.otd_delete_cost,
    })
    .cost
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtdSummary {
    pub mean: f64,
    pub n_pairs: usize,
}

/// Mean OTD over every `(sequence, evaluation point)` pair.
pub fn otd_dataset(instances: &[EvalInstance<'_>], cfg: &EvalConfig) -> Result<OtdSummary> {
    if instances.is_empty() {
        return Err(Error::EmptyEvaluation("no evaluation points for OTD".into()));
    }
    let values: Vec<f64> = instances.par_iter().map(|inst| instance_otd(inst, cfg)).collect();
    // Fixed-order sum keeps the mean independent of the thread count.
    let total: f64 = values.iter().sum();
    Ok(OtdSummary {
        mean: total / values.len() as f64,
        n_pairs: values.len(),
    })
}
