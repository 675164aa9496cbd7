use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use horizon_eval::baselines::{fit_global, Baseline, BaselineKind, FitMode};
use horizon_eval::domain::{EvalConfig, GroundTruthSequence, PredictionSet};
use horizon_eval::error::{Error, Result};
use horizon_eval::evaluate::{align, evaluate, EvalInstance, MetricSet};
use horizon_eval::ingest::{
    load_config, read_dataset, read_predictions, to_json_document, write_class_csv, write_dataset, write_predictions,
    write_report,
};
use horizon_eval::otd::{instance_prefixes, otd, otd_bruteforce, OtdInput, OTD_BRUTEFORCE_MAX};
use horizon_eval::synth::{generate, SynthKind, SynthSpec};
use horizon_eval::tmap::{delta_sweep, tmap, tmap_bruteforce, DeltaPoint};

#[derive(Parser)]
#[command(name = "horizon-eval", version, about = "Long-horizon evaluation of marked event forecasts")]
struct Cli {
    /// Worker threads (defaults to HORIZON_EVAL_THREADS, then all cores).
    #[arg(long, global = true, env = "HORIZON_EVAL_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Preset name or path to a JSON config.
    #[arg(long)]
    config: String,
    /// Override the evaluation stride.
    #[arg(long)]
    stride: Option<usize>,
    /// Override the minimum history length.
    #[arg(long)]
    min_history: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<EvalConfig> {
        let mut cfg = load_config(&self.config)?;
        if let Some(s) = self.stride {
            cfg.eval_stride = s;
        }
        if let Some(m) = self.min_history {
            cfg.min_history = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FitArg {
    PerSequence,
    Global,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthArg {
    #[value(name = "IrregularToy", alias = "irregular-toy")]
    IrregularToy,
    #[value(name = "ZipfLabels", alias = "zipf-labels")]
    ZipfLabels,
}

#[derive(Subcommand)]
enum Command {
    /// Score predictions against ground truth and write a JSON report.
    Evaluate {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated subset of tmap,otd,next,entropy.
        #[arg(long, default_value = "tmap,otd,next,entropy")]
        metrics: String,
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-class T-mAP table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Emit baseline predictions at every evaluation point.
    Baseline {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        kind: BaselineKind,
        #[command(flatten)]
        config: ConfigArgs,
        /// Events per forecast for fixed-length baselines (defaults to the OTD prefix length).
        #[arg(long)]
        length: Option<usize>,
        #[arg(long, value_enum, default_value = "per-sequence")]
        fit: FitArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a seeded synthetic dataset.
    Synth {
        #[arg(long, value_enum)]
        kind: SynthArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        n_sequences: usize,
        #[arg(long, default_value_t = 100)]
        seq_len: usize,
        /// IrregularToy: probability of a unit interval.
        #[arg(long, default_value_t = 0.05)]
        p_one: f64,
        /// ZipfLabels: number of classes.
        #[arg(long, default_value_t = 20)]
        num_classes: usize,
        /// ZipfLabels: exponent.
        #[arg(long, default_value_t = 1.5)]
        exponent: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Macro and weighted T-mAP for several matching tolerances.
    SweepDelta {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated tolerances.
        #[arg(long, value_delimiter = ',', required = true)]
        deltas: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the fast metrics with exhaustive enumeration on small windows.
    OracleCheck {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Windows or prefixes with more events per side are skipped.
        #[arg(long, default_value_t = 6)]
        max_events: usize,
    },
}

#[derive(Serialize)]
struct SweepReport {
    config: EvalConfig,
    n_eval_points: usize,
    points: Vec<DeltaPoint>,
    non_decreasing: bool,
}

#[derive(Serialize)]
struct OracleReport {
    tmap_instances: usize,
    tmap_max_abs_diff: Option<f64>,
    otd_instances: usize,
    otd_max_abs_diff: Option<f64>,
}

fn load_inputs(
    gt: &PathBuf,
    pred: &PathBuf,
    cfg: &EvalConfig,
) -> Result<(Vec<GroundTruthSequence>, Vec<PredictionSet>)> {
    Ok((read_dataset(gt, cfg.num_classes)?, read_predictions(pred, cfg.num_classes)?))
}

fn oracle_check(instances: &[EvalInstance<'_>], cfg: &EvalConfig, max_events: usize) -> Result<OracleReport> {
    if max_events > OTD_BRUTEFORCE_MAX {
        return Err(Error::config(format!(
            "--max-events must not exceed {OTD_BRUTEFORCE_MAX}"
        )));
    }
    let small: Vec<EvalInstance<'_>> = instances
        .iter()
        .filter(|inst| {
            let w = inst.horizon(cfg);
            w.gt_window.len() <= max_events && w.pred_window.len() <= max_events
        })
        .copied()
        .collect();
    let tmap_max_abs_diff = match (tmap(&small, cfg), tmap_bruteforce(&small, cfg)) {
        (Ok(a), Ok(b)) => {
            let mut d = (a.macro_ap - b.macro_ap).abs().max((a.weighted - b.weighted).abs());
            for (x, y) in a.per_class_ap.iter().zip(&b.per_class_ap) {
                match (x, y) {
                    (Some(x), Some(y)) => d = d.max((x - y).abs()),
                    (None, None) => {}
                    _ => d = f64::INFINITY,
                }
            }
            Some(d)
        }
        (Err(Error::EmptyEvaluation(_)), _) => None,
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };

    let mut otd_instances = 0;
    let mut otd_diff: Option<f64> = None;
    for inst in instances {
        let (pred, gt) = instance_prefixes(inst, cfg.otd_prefix);
        if pred.len() > max_events || gt.len() > max_events {
            continue;
        }
        let input = OtdInput {
            pred: &pred,
            gt,
            insert_cost: cfg.otd_insert_cost,
            delete_cost: cfg.otd_delete_cost,
        };
        let d = (otd(&input).cost - otd_bruteforce(&input)?).abs();
        otd_diff = Some(otd_diff.map_or(d, |m| m.max(d)));
        otd_instances += 1;
    }
    Ok(OracleReport {
        tmap_instances: small.len(),
        tmap_max_abs_diff,
        otd_instances,
        otd_max_abs_diff: otd_diff,
    })
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Evaluate {
            gt,
            pred,
            config,
            metrics,
            out,
            csv,
        } => {
            let cfg = config.resolve()?;
            let metrics: MetricSet = metrics.parse()?;
            let (gts, preds) = load_inputs(&gt, &pred, &cfg)?;
            let report = evaluate(&gts, &preds, &cfg, &metrics)?;
            write_report(&report, &out)?;
            if let (Some(path), Some(summary)) = (csv, &report.tmap) {
                write_class_csv(summary, path)?;
            }
        }
        Command::Baseline {
            gt,
            kind,
            config,
            length,
            fit,
            out,
        } => {
            let cfg = config.resolve()?;
            let gts = read_dataset(&gt, cfg.num_classes)?;
            let mut baseline = Baseline::new(kind, length.unwrap_or(cfg.otd_prefix));
            if let FitArg::Global = fit {
                baseline.fit = FitMode::Global(fit_global(&gts, cfg.num_classes)?);
            }
            write_predictions(&out, &baseline.run(&gts, &cfg)?)?;
        }
        Command::Synth {
            kind,
            seed,
            n_sequences,
            seq_len,
            p_one,
            num_classes,
            exponent,
            out,
        } => {
            let kind = match kind {
                SynthArg::IrregularToy => SynthKind::IrregularToy { p_one },
                SynthArg::ZipfLabels => SynthKind::ZipfLabels { num_classes, exponent },
            };
            let spec = SynthSpec {
                kind,
                n_sequences,
                seq_len,
                seed,
            };
            write_dataset(&out, &generate(&spec)?)?;
        }
        Command::SweepDelta {
            gt,
            pred,
            config,
            deltas,
            out,
        } => {
            let cfg = config.resolve()?;
            let (gts, preds) = load_inputs(&gt, &pred, &cfg)?;
            let instances = align(&gts, &preds, &cfg)?;
            let points = delta_sweep(&instances, &cfg, &deltas)?;
            let report = SweepReport {
                non_decreasing: horizon_eval::tmap::is_non_decreasing(&points),
                config: cfg,
                n_eval_points: instances.len(),
                points,
            };
            write_report(&report, &out)?;
        }
        Command::OracleCheck {
            gt,
            pred,
            config,
            max_events,
        } => {
            let cfg = config.resolve()?;
            let (gts, preds) = load_inputs(&gt, &pred, &cfg)?;
            let instances = align(&gts, &preds, &cfg)?;
            let report = oracle_check(&instances, &cfg, max_events)?;
            print!("{}", to_json_document(&report));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: invalid config: --threads must be positive");
            return ExitCode::from(3);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
