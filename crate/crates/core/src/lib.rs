//! Evaluation of long-horizon forecasts for marked temporal point processes.
//!
//! Forecasts are scored over a time horizon with T-mAP (threshold-free,
//! matching-based average precision) and OTD (optimal transport distance
//! over fixed-length prefixes), plus next-event metrics and entropy
//! diagnostics. Reference baselines and seeded synthetic generators are
//! included for calibration studies.

pub mod assignment;
pub mod baselines;
pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod evaluate;
pub mod ingest;
pub mod next_event;
pub mod otd;
pub mod synth;
pub mod tmap;

pub use assignment::{solve_optimal, BipartiteCostGraph, Edge, Matching};
pub use baselines::{Baseline, BaselineKind, FitMode, HistoryStats};
pub use diagnostics::{entropy_report, EntropyReport};
pub use domain::{
    enumerate_eval_points, slice_horizon, EvalConfig, EvalPoint, Event, GroundTruthSequence, HorizonSlice,
    PredictedEvent, PredictionSet,
};
pub use error::{Error, IngestCode, Result};
pub use evaluate::{align, evaluate, evaluate_instances, EvalInstance, Metric, MetricReport, MetricSet};
pub use next_event::{next_event_dataset, NextEventReport};
pub use otd::{otd, otd_dataset, OtdInput, OtdSummary, OtdValue};
pub use synth::{generate, SynthKind, SynthSpec};
pub use tmap::{delta_sweep, tmap, DeltaPoint, TmapReport};
