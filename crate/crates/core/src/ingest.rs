//! JSON Lines readers and writers, config presets and report output.
//!
//! Ground truth, one sequence per line:
//! `{"seq_id": "a", "events": [{"t": 0.5, "label": 2}, ...]}`
//!
//! Predictions, one forecast per line:
//! `{"seq_id": "a", "eval_time": 0.5, "events": [{"t": 1.0, "scores": [..L..]}, ...]}`

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::marker::PhantomData;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::domain::{EvalConfig, Event, GroundTruthSequence, PredictedEvent, PredictionSet};
use crate::error::{Error, IngestCode, Result};
use crate::evaluate::TmapSummary;

/// Streams one JSON record per non-blank line, tagging failures with the line number.
pub struct JsonLines<R, T> {
    reader: R,
    buf: String,
    line: usize,
    _record: PhantomData<T>,
}

impl<R: BufRead, T: DeserializeOwned> JsonLines<R, T> {
    pub fn new(reader: R) -> Self {
        Self {
            reader,
            buf: String::new(),
            line: 0,
            _record: PhantomData,
        }
    }
}

impl<R: BufRead, T: DeserializeOwned> Iterator for JsonLines<R, T> {
    type Item = Result<(usize, T)>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            self.line += 1;
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(Error::io(format!("reading line {}", self.line), e))),
            }
            let text = self.buf.trim();
            if text.is_empty() {
                continue;
            }
            return Some(
                serde_json::from_str(text)
                    .map(|record| (self.line, record))
                    .map_err(|e| {
                        let code = if e.is_data() {
                            IngestCode::Schema
                        } else {
                            IngestCode::Syntax
                        };
                        Error::input(code, self.line, e.to_string())
                    }),
            );
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceRecord {
    seq_id: String,
    events: Vec<EventRecord>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventRecord {
    t: f64,
    label: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionRecord {
    seq_id: String,
    eval_time: f64,
    events: Vec<PredictedEventRecord>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictedEventRecord {
    t: f64,
    scores: Vec<f64>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))
}

fn sequence_from_record(line: usize, rec: SequenceRecord, num_classes: usize) -> Result<GroundTruthSequence> {
    let mut prev = f64::NEG_INFINITY;
    for (i, e) in rec.events.iter().enumerate() {
        if e.label >= num_classes {
            return Err(Error::input(
                IngestCode::LabelOutOfRange,
                line,
                format!("field events[{i}].label: {} is outside [0, {num_classes})", e.label),
            ));
        }
        if e.t < prev {
            return Err(Error::input(
                IngestCode::UnsortedTimes,
                line,
                format!("field events[{i}].t: {} precedes the previous timestamp {prev}", e.t),
            ));
        }
        prev = e.t;
    }
    Ok(GroundTruthSequence {
        seq_id: rec.seq_id,
        events: rec.events.into_iter().map(|e| Event::new(e.t, e.label)).collect(),
    })
}

fn prediction_from_record(line: usize, rec: PredictionRecord, num_classes: usize) -> Result<PredictionSet> {
    let mut prev = rec.eval_time;
    for (i, e) in rec.events.iter().enumerate() {
        if e.scores.len() != num_classes {
            return Err(Error::input(
                IngestCode::ScoresLength,
                line,
                format!(
                    "field events[{i}].scores: expected {num_classes} scores, found {}",
                    e.scores.len()
                ),
            ));
        }
        if e.t < prev {
            return Err(Error::input(
                IngestCode::UnsortedTimes,
                line,
                format!(
                    "field events[{i}].t: {} precedes eval_time or the previous prediction ({prev})",
                    e.t
                ),
            ));
        }
        prev = e.t;
    }
    Ok(PredictionSet {
        seq_id: rec.seq_id,
        eval_time: rec.eval_time,
        events: rec
            .events
            .into_iter()
            .map(|e| PredictedEvent::new(e.t, e.scores))
            .collect(),
    })
}

pub fn parse_dataset(reader: impl BufRead, num_classes: usize) -> Result<Vec<GroundTruthSequence>> {
    JsonLines::<_, SequenceRecord>::new(reader)
        .map(|item| item.and_then(|(line, rec)| sequence_from_record(line, rec, num_classes)))
        .collect()
}

pub fn parse_predictions(reader: impl BufRead, num_classes: usize) -> Result<Vec<PredictionSet>> {
    JsonLines::<_, PredictionRecord>::new(reader)
        .map(|item| item.and_then(|(line, rec)| prediction_from_record(line, rec, num_classes)))
        .collect()
}

pub fn read_dataset(path: impl AsRef<Path>, num_classes: usize) -> Result<Vec<GroundTruthSequence>> {
    parse_dataset(open(path.as_ref())?, num_classes)
}

pub fn read_predictions(path: impl AsRef<Path>, num_classes: usize) -> Result<Vec<PredictionSet>> {
    parse_predictions(open(path.as_ref())?, num_classes)
}

fn write_lines<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<()> {
    let context = || format!("writing {}", path.display());
    let file = File::create(path).map_err(|e| Error::io(context(), e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut out, &r).map_err(|e| Error::io(context(), e.into()))?;
        out.write_all(b"\n").map_err(|e| Error::io(context(), e))?;
    }
    out.flush().map_err(|e| Error::io(context(), e))
}

pub fn write_dataset(path: impl AsRef<Path>, sequences: &[GroundTruthSequence]) -> Result<()> {
    write_lines(path.as_ref(), sequences)
}

pub fn write_predictions(path: impl AsRef<Path>, predictions: &[PredictionSet]) -> Result<()> {
    write_lines(path.as_ref(), predictions)
}

/// Pretty-printed JSON document with a trailing newline.
pub fn to_json_document<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types always serialize");
    s.push('\n');
    s
}

pub fn write_report<T: Serialize>(report: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json_document(report)).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Flat per-class T-mAP table: `class,n_gt,weight,ap` with an empty `ap` for absent classes.
pub fn write_class_csv(summary: &TmapSummary, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let context = || format!("writing {}", path.display());
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(context(), e.into()))?;
    w.write_record(["class", "n_gt", "weight", "ap"])
        .map_err(|e| Error::io(context(), e.into()))?;
    for c in &summary.per_class {
        let ap = c.ap.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([c.class.to_string(), c.n_gt.to_string(), c.weight.to_string(), ap])
            .map_err(|e| Error::io(context(), e.into()))?;
    }
    w.flush().map_err(|e| Error::io(context(), e))
}

/// Dataset presets: `(name, classes, OTD steps, OTD cost, delta, horizon)`.
pub const PRESETS: [(&str, usize, usize, f64, f64, f64); 5] = [
    ("transactions", 203, 5, 1.0, 2.0, 7.0),
    ("mimic-iv", 34, 5, 2.0, 4.0, 28.0),
    ("retweet", 3, 10, 15.0, 30.0, 180.0),
    ("amazon", 16, 5, 1.0, 2.0, 10.0),
    ("stackoverflow", 22, 10, 1.0, 2.0, 10.0),
];

pub fn preset(name: &str) -> Option<EvalConfig> {
    PRESETS
        .iter()
        .find(|p| p.0.eq_ignore_ascii_case(name))
        .map(|&(_, num_classes, otd_prefix, cost, delta, horizon)| EvalConfig {
            num_classes,
            horizon,
            delta,
            otd_prefix,
            otd_insert_cost: cost,
            otd_delete_cost: cost,
            eval_stride: 1,
            min_history: 1,
        })
}

/// Builds a config from a JSON document: either a full config, or
/// `{"preset": name, ...}` where the remaining keys override the preset.
pub fn config_from_json(text: &str) -> Result<EvalConfig> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| Error::config(format!("config is not valid JSON: {e}")))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Error::config("config must be a JSON object"))?;
    if let Some(name) = obj.remove("preset") {
        let name = name
            .as_str()
            .ok_or_else(|| Error::config("preset must be a string"))?
            .to_string();
        let base = preset(&name).ok_or_else(|| Error::config(format!("unknown preset {name:?}")))?;
        let Value::Object(mut merged) = serde_json::to_value(base).expect("config serializes") else {
            unreachable!("configs serialize to objects");
        };
        merged.extend(std::mem::take(obj));
        value = Value::Object(merged);
    }
    let cfg: EvalConfig = serde_json::from_value(value).map_err(|e| Error::config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Resolves a `--config` argument: a preset name or a path to a JSON config.
pub fn load_config(arg: &str) -> Result<EvalConfig> {
    if let Some(cfg) = preset(arg) {
        return Ok(cfg);
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| Error::config(format!("{arg:?} is neither a preset nor a readable config file: {e}")))?;
    config_from_json(&text)
}
