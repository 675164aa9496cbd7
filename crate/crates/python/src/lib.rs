//! Python bindings over in-memory arrays.
//!
//! Every argument is copied once into owned Rust vectors when the call
//! starts; the metrics then run with the interpreter lock released. Sequence
//! `i` of the ground truth is addressed by its position, so prediction rows
//! carry `seq_index` instead of a string id.

use std::collections::BTreeMap;

use horizon_eval::baselines::{fit_global, Baseline, BaselineKind, FitMode};
use horizon_eval::diagnostics;
use horizon_eval::domain::{EvalConfig, Event, GroundTruthSequence, PredictedEvent, PredictionSet};
use horizon_eval::error::{Error, IngestCode, Result};
use horizon_eval::evaluate::{evaluate, MetricReport, MetricSet};
use horizon_eval::ingest::{config_from_json, load_config, to_json_document};
use horizon_eval::next_event;
use horizon_eval::otd::{self as otd_mod, OtdInput};
use horizon_eval::synth::{self, SynthKind, SynthSpec};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyString;

create_exception!(horizon_eval_py, HorizonEvalError, PyValueError);
create_exception!(horizon_eval_py, ConfigError, HorizonEvalError);
create_exception!(horizon_eval_py, InputError, HorizonEvalError);

/// `(times, labels)` per sequence.
pub type GtArrays = Vec<(Vec<f64>, Vec<usize>)>;
/// `(seq_index, eval_time, times, score rows)` per forecast.
pub type PredArrays = Vec<(usize, f64, Vec<f64>, Vec<Vec<f64>>)>;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) => ConfigError::new_err(e.to_string()),
        _ => InputError::new_err(e.to_string()),
    }
}

pub fn seq_id(index: usize) -> String {
    index.to_string()
}

pub fn build_ground_truth(gt: GtArrays, num_classes: usize) -> Result<Vec<GroundTruthSequence>> {
    gt.into_iter()
        .enumerate()
        .map(|(i, (times, labels))| {
            if times.len() != labels.len() {
                return Err(Error::invalid(
                    IngestCode::Schema,
                    format!("gt[{i}]: {} times but {} labels", times.len(), labels.len()),
                ));
            }
            if let Some(l) = labels.iter().find(|&&l| l >= num_classes) {
                return Err(Error::invalid(
                    IngestCode::LabelOutOfRange,
                    format!("gt[{i}]: label {l} is outside [0, {num_classes})"),
                ));
            }
            let events = times.into_iter().zip(labels).map(|(t, l)| Event::new(t, l)).collect();
            GroundTruthSequence::new(seq_id(i), events)
        })
        .collect()
}

pub fn build_predictions(preds: PredArrays, n_sequences: usize, num_classes: usize) -> Result<Vec<PredictionSet>> {
    preds
        .into_iter()
        .enumerate()
        .map(|(k, (seq, eval_time, times, scores))| {
            if seq >= n_sequences {
                return Err(Error::invalid(
                    IngestCode::Schema,
                    format!("preds[{k}]: seq_index {seq} but only {n_sequences} sequences"),
                ));
            }
            if times.len() != scores.len() {
                return Err(Error::invalid(
                    IngestCode::Schema,
                    format!("preds[{k}]: {} times but {} score rows", times.len(), scores.len()),
                ));
            }
            if let Some(j) = scores.iter().position(|row| row.len() != num_classes) {
                return Err(Error::invalid(
                    IngestCode::ScoresLength,
                    format!(
                        "preds[{k}].scores[{j}]: expected {num_classes} scores, found {}",
                        scores[j].len()
                    ),
                ));
            }
            let events = times.into_iter().zip(scores).map(|(t, s)| PredictedEvent::new(t, s)).collect();
            let set = PredictionSet::new(seq_id(seq), eval_time, events)?;
            set.check_scores(num_classes)?;
            Ok(set)
        })
        .collect()
}

pub fn evaluate_report(gt: GtArrays, preds: PredArrays, cfg: &EvalConfig, metrics: &MetricSet) -> Result<MetricReport> {
    cfg.validate()?;
    let gts = build_ground_truth(gt, cfg.num_classes)?;
    let sets = build_predictions(preds, gts.len(), cfg.num_classes)?;
    evaluate(&gts, &sets, cfg, metrics)
}

/// Flat `metric name -> value` view of a report.
pub fn flatten(report: &MetricReport) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    out.insert("n_eval_points".into(), report.n_eval_points as f64);
    if let Some(t) = &report.tmap {
        out.insert("tmap_macro".into(), t.macro_ap);
        out.insert("tmap_weighted".into(), t.weighted);
    }
    if let Some(o) = &report.otd {
        out.insert("otd_mean".into(), o.mean);
    }
    if let Some(n) = &report.next_event {
        out.insert("next_accuracy".into(), n.accuracy);
        out.insert("next_label_map".into(), n.label_map);
        out.insert("next_time_mae".into(), n.time_mae);
    }
    if let Some(e) = &report.entropy {
        out.insert("entropy_pred".into(), e.predicted_entropy);
        out.insert("entropy_gt".into(), e.gt_entropy);
    }
    out
}

fn parse_metrics(metrics: Option<&str>) -> Result<MetricSet> {
    metrics.map_or(Ok(MetricSet::all()), str::parse)
}

/// A preset name, a config file path, or a mapping understood like a JSON config.
fn extract_config(config: &Bound<'_, PyAny>) -> PyResult<EvalConfig> {
    if let Ok(name) = config.cast::<PyString>() {
        return load_config(name.to_str()?).map_err(to_py_err);
    }
    let json = config.py().import("json")?.call_method1("dumps", (config,))?;
    config_from_json(json.extract::<&str>()?).map_err(to_py_err)
}

/// Flat metric mapping, e.g. `{"tmap_macro": ..., "otd_mean": ...}`.
#[pyfunction]
#[pyo3(signature = (gt, preds, config, metrics=None))]
fn evaluate_arrays(
    py: Python<'_>,
    gt: GtArrays,
    preds: PredArrays,
    config: &Bound<'_, PyAny>,
    metrics: Option<&str>,
) -> PyResult<BTreeMap<String, f64>> {
    let cfg = extract_config(config)?;
    let metrics = parse_metrics(metrics).map_err(to_py_err)?;
    py.detach(|| evaluate_report(gt, preds, &cfg, &metrics).map(|r| flatten(&r)))
        .map_err(to_py_err)
}

/// The full report as a JSON string, identical to the file the CLI writes.
#[pyfunction]
#[pyo3(signature = (gt, preds, config, metrics=None))]
fn evaluate_json(
    py: Python<'_>,
    gt: GtArrays,
    preds: PredArrays,
    config: &Bound<'_, PyAny>,
    metrics: Option<&str>,
) -> PyResult<String> {
    let cfg = extract_config(config)?;
    let metrics = parse_metrics(metrics).map_err(to_py_err)?;
    py.detach(|| evaluate_report(gt, preds, &cfg, &metrics).map(|r| to_json_document(&r)))
        .map_err(to_py_err)
}

/// OTD between two hard-labelled event lists.
#[pyfunction]
#[pyo3(signature = (pred_times, pred_labels, gt_times, gt_labels, insert_cost=1.0, delete_cost=1.0))]
fn otd(
    pred_times: Vec<f64>,
    pred_labels: Vec<usize>,
    gt_times: Vec<f64>,
    gt_labels: Vec<usize>,
    insert_cost: f64,
    delete_cost: f64,
) -> PyResult<f64> {
    if pred_times.len() != pred_labels.len() || gt_times.len() != gt_labels.len() {
        return Err(to_py_err(Error::invalid(IngestCode::Schema, "times and labels differ in length")));
    }
    let pred: Vec<Event> = pred_times.into_iter().zip(pred_labels).map(|(t, l)| Event::new(t, l)).collect();
    let gt: Vec<Event> = gt_times.into_iter().zip(gt_labels).map(|(t, l)| Event::new(t, l)).collect();
    Ok(otd_mod::otd(&OtdInput {
        pred: &pred,
        gt: &gt,
        insert_cost,
        delete_cost,
    })
    .cost)
}

/// Accuracy, label mAP and time MAE of `(prediction, true next event)` pairs.
#[pyfunction]
fn next_event_metrics(
    pred_times: Vec<f64>,
    pred_scores: Vec<Vec<f64>>,
    true_times: Vec<f64>,
    true_labels: Vec<usize>,
    num_classes: usize,
) -> PyResult<BTreeMap<String, f64>> {
    let n = pred_times.len();
    if pred_scores.len() != n || true_times.len() != n || true_labels.len() != n {
        return Err(to_py_err(Error::invalid(IngestCode::Schema, "all arrays must have the same length")));
    }
    if pred_scores.iter().any(|s| s.len() != num_classes) {
        return Err(to_py_err(Error::invalid(
            IngestCode::ScoresLength,
            format!("every score row needs {num_classes} entries"),
        )));
    }
    if true_labels.iter().any(|&l| l >= num_classes) {
        return Err(to_py_err(Error::invalid(IngestCode::LabelOutOfRange, "label outside [0, num_classes)")));
    }
    let preds: Vec<PredictedEvent> = pred_times.into_iter().zip(pred_scores).map(|(t, s)| PredictedEvent::new(t, s)).collect();
    let truth: Vec<Event> = true_times.into_iter().zip(true_labels).map(|(t, l)| Event::new(t, l)).collect();
    let pairs: Vec<_> = preds.iter().zip(&truth).collect();
    let r = next_event::next_event_metrics(&pairs, num_classes).map_err(to_py_err)?;
    Ok(BTreeMap::from([
        ("accuracy".to_string(), r.accuracy),
        ("label_map".to_string(), r.label_map),
        ("time_mae".to_string(), r.time_mae),
    ]))
}

/// Shannon entropy (nats) of a label histogram.
#[pyfunction]
fn entropy(counts: Vec<usize>) -> f64 {
    diagnostics::entropy(&counts)
}

/// Baseline forecasts at every evaluation point, in the `preds` array layout.
#[pyfunction]
#[pyo3(signature = (gt, kind, config, length=None, global_fit=false))]
fn baseline(
    py: Python<'_>,
    gt: GtArrays,
    kind: &str,
    config: &Bound<'_, PyAny>,
    length: Option<usize>,
    global_fit: bool,
) -> PyResult<PredArrays> {
    let cfg = extract_config(config)?;
    let kind: BaselineKind = kind.parse().map_err(to_py_err)?;
    py.detach(|| -> Result<PredArrays> {
        let gts = build_ground_truth(gt, cfg.num_classes)?;
        let mut b = Baseline::new(kind, length.unwrap_or(cfg.otd_prefix));
        if global_fit {
            b.fit = FitMode::Global(fit_global(&gts, cfg.num_classes)?);
        }
        let sets = b.run(&gts, &cfg)?;
        Ok(sets
            .into_iter()
            .map(|s| {
                let index = s.seq_id.parse().expect("ids are positions");
                let (times, scores) = s.events.into_iter().map(|e| (e.t, e.scores)).unzip();
                (index, s.eval_time, times, scores)
            })
            .collect())
    })
    .map_err(to_py_err)
}

/// Seeded synthetic ground truth in the `gt` array layout.
#[pyfunction]
#[pyo3(signature = (kind, n_sequences, seq_len, seed, p_one=0.05, num_classes=20, exponent=1.5))]
fn synthesize(
    kind: &str,
    n_sequences: usize,
    seq_len: usize,
    seed: u64,
    p_one: f64,
    num_classes: usize,
    exponent: f64,
) -> PyResult<GtArrays> {
    let kind = match kind {
        "IrregularToy" => SynthKind::IrregularToy { p_one },
        "ZipfLabels" => SynthKind::ZipfLabels { num_classes, exponent },
        other => return Err(ConfigError::new_err(format!("unknown synthetic kind {other:?}"))),
    };
    let spec = SynthSpec {
        kind,
        n_sequences,
        seq_len,
        seed,
    };
    let seqs = synth::generate(&spec).map_err(to_py_err)?;
    Ok(seqs
        .into_iter()
        .map(|s| s.events.into_iter().map(|e| (e.t, e.label)).unzip())
        .collect())
}

#[pymodule]
fn horizon_eval_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HorizonEvalError", m.py().get_type::<HorizonEvalError>())?;
    m.add("ConfigError", m.py().get_type::<ConfigError>())?;
    m.add("InputError", m.py().get_type::<InputError>())?;
    m.add_function(wrap_pyfunction!(evaluate_arrays, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_json, m)?)?;
    m.add_function(wrap_pyfunction!(otd, m)?)?;
    m.add_function(wrap_pyfunction!(next_event_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(baseline, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    Ok(())
}
