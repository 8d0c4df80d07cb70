// SPDX-License-Identifier: Apache-2.0

//! `eegad synth|train|eval|ablate|sweep --config <path> [--set k=v]... [--seed N]`
//!
//! Each command reads one [`RunConfig`], runs its stage and writes its
//! outputs atomically. Wall-clock timings only ever go to `*timing*.csv`
//! sidecars, so every other output is byte-identical for a fixed config.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::dataset::{Dataset, EegSegment, Label};
use crate::detector::encode_detector;
use crate::error::{Error, Result};
use crate::eval::{plan_runs, run_experiment_with, train_run, EvalReport, Progress, RunOptions};
use crate::io::{encode_eseg, read_segment, write_atomic};
use crate::nn::encode_model;
use crate::rng::RandomSource;
use crate::synth::generate_dataset;

#[derive(Debug, Parser)]
#[command(name = "eegad", version, about = "Self-supervised EEG anomaly detection")]
pub struct Cli {
    /// Suppress progress messages on stderr.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic segments and a manifest into `paths.data_dir`.
    Synth(CommonArgs),
    /// Train one feature extractor and fit its detector.
    Train(CommonArgs),
    /// Run the full experiment and write report, ROC and score tables.
    Eval(CommonArgs),
    /// Evaluate every anomaly-class / branch / kernel combination.
    Ablate(CommonArgs),
    /// Sweep the augmentation ranges and the fake-abnormal fraction.
    Sweep(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Override one config field, e.g. `--set train.max_epochs=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl CommonArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?.with_overrides(&self.set)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Worker cap: `EEGAD_THREADS` if set, else the available parallelism.
pub fn thread_limit() -> Result<usize> {
    match std::env::var("EEGAD_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!(
                "EEGAD_THREADS must be a positive integer, got `{v}`"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let log = |msg: &str| eprintln!("{msg}");
    let progress: Option<Progress> = if cli.quiet { None } else { Some(&log) };
    // a malformed EEGAD_THREADS is a configuration error before any data is touched
    thread_limit()?;
    match &cli.command {
        Command::Synth(a) => cmd_synth(&a.resolve()?).map(drop),
        Command::Train(a) => cmd_train(&a.resolve()?, progress),
        Command::Eval(a) => cmd_eval(&a.resolve()?, progress).map(drop),
        Command::Ablate(a) => cmd_ablate(&a.resolve()?, progress).map(drop),
        Command::Sweep(a) => cmd_sweep(&a.resolve()?, progress).map(drop),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub const MANIFEST: &str = "manifest.csv";

/// Writes every segment as ESEG plus `manifest.csv`
/// (`file,label,patient_id,seed`) and returns the manifest path.
pub fn cmd_synth(cfg: &RunConfig) -> Result<PathBuf> {
    let data = generate_dataset(&cfg.synth, &cfg.dataset, &mut RandomSource::new(cfg.seed))
        .map_err(|e| e.in_stage("synth"))?;
    let dir = &cfg.paths.data_dir;
    ensure_dir(dir)?;
    let mut manifest = String::from("file,label,patient_id,seed\n");
    for (i, seg) in data.segments.iter().enumerate() {
        let name = format!("{}_{i:06}.eseg", seg.label.name());
        write_atomic(&dir.join(&name), &encode_eseg(seg))?;
        writeln!(
            manifest,
            "{name},{},{},{}",
            seg.label.name(),
            seg.patient_id,
            cfg.seed
        )
        .expect("string write");
    }
    let path = dir.join(MANIFEST);
    write_atomic(&path, manifest.as_bytes())?;
    Ok(path)
}

/// Reads the segments listed in `<dir>/manifest.csv`, checking that each
/// file's label matches its manifest row.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("file,label,patient_id,seed") {
        return Err(Error::InvalidInput(format!(
            "{}: unexpected manifest header",
            path.display()
        )));
    }
    let mut segments: Vec<EegSegment> = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        let bad = || Error::InvalidInput(format!("{}:{}: malformed row `{line}`", path.display(), n + 2));
        let [file, label, _, _] = cols[..] else {
            return Err(bad());
        };
        let label = Label::from_name(label).ok_or_else(bad)?;
        let seg = read_segment(&dir.join(file))?;
        if seg.label != label {
            return Err(Error::InvalidInput(format!(
                "{file}: manifest says {} but file holds {}",
                label.name(),
                seg.label.name()
            )));
        }
        segments.push(seg);
    }
    let Some(first) = segments.first() else {
        return Err(Error::InsufficientData(format!(
            "{} lists no segments",
            path.display()
        )));
    };
    let duration = first.len() as f64 / first.sample_rate as f64;
    Dataset::new(segments, duration)
}

fn load_checked(cfg: &RunConfig) -> Result<Dataset> {
    let data = load_dataset(&cfg.paths.data_dir).map_err(|e| e.in_stage("load"))?;
    if let Some((k, l)) = data.shape() {
        if (k, l) != (cfg.arch.channels, cfg.arch.length) {
            return Err(Error::InvalidInput(format!(
                "data in {} is {k}x{l} but the config expects {}x{}",
                cfg.paths.data_dir.display(),
                cfg.arch.channels,
                cfg.arch.length
            )));
        }
    }
    Ok(data)
}

/// Trains on the training fold of the first run, then writes the model,
/// the detector, the normalization range and the training log.
pub fn cmd_train(cfg: &RunConfig, progress: Option<Progress>) -> Result<()> {
    let data = load_checked(cfg)?;
    let spec = cfg.experiment();
    let first = plan_runs(&data, &spec)?
        .into_iter()
        .next()
        .expect("at least one run");
    let trained = train_run(&data, &spec, &first, progress)?;
    let out = &cfg.paths.output_dir;
    ensure_dir(out)?;
    for p in [&cfg.paths.model_file, &cfg.paths.detector_file] {
        if let Some(parent) = p.parent().filter(|p| !p.as_os_str().is_empty()) {
            ensure_dir(parent)?;
        }
    }
    write_atomic(&cfg.paths.model_file, &encode_model(&trained.model))?;
    write_atomic(&cfg.paths.detector_file, &encode_detector(&trained.detector))?;
    let (lo, hi) = trained.norm_range;
    write_atomic(
        &out.join("normalization.csv"),
        format!("norm_min,norm_max\n{lo},{hi}\n").as_bytes(),
    )?;
    write_atomic(&out.join("train_log.csv"), trained.log.to_csv().as_bytes())?;
    write_atomic(&out.join("train_timing.csv"), trained.log.timing_csv().as_bytes())?;
    Ok(())
}

fn experiment(cfg: &RunConfig, data: &Dataset, progress: Option<Progress>) -> Result<EvalReport> {
    let options = RunOptions {
        threads: thread_limit()?,
        progress,
    };
    run_experiment_with(data, &cfg.experiment(), options)
}

/// `report.csv`, `roc.csv`, `scores.csv` and per-run training logs.
pub fn cmd_eval(cfg: &RunConfig, progress: Option<Progress>) -> Result<EvalReport> {
    let data = load_checked(cfg)?;
    let report = experiment(cfg, &data, progress)?;
    let out = &cfg.paths.output_dir;
    ensure_dir(out)?;
    write_atomic(&out.join("report.csv"), report.to_csv().as_bytes())?;
    write_atomic(&out.join("roc.csv"), report.roc_csv()?.as_bytes())?;
    write_atomic(&out.join("scores.csv"), report.scores_csv().as_bytes())?;
    let mut timing = String::from("run,fold,epoch,wall_time_s\n");
    for r in &report.runs {
        let name = format!("train_log_run{}_fold{}.csv", r.run, r.fold);
        write_atomic(&out.join(name), r.log.to_csv().as_bytes())?;
        for e in &r.log.epochs {
            writeln!(timing, "{},{},{},{}", r.run, r.fold, e.epoch, e.wall_time_s).expect("string write");
        }
    }
    write_atomic(&out.join("eval_timing.csv"), timing.as_bytes())?;
    Ok(report)
}

/// One ablation configuration and its results.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub amplitude_class: bool,
    pub frequency_class: bool,
    pub branch: bool,
    pub kernel: usize,
    pub report: SummaryMetrics,
}

/// Means and AUC spread of a report, the part the grid tables keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryMetrics {
    pub auc_mean: f64,
    pub auc_std: f64,
    pub eer_mean: f64,
    pub f1_mean: f64,
    pub baseline_auc: f64,
}

impl From<&EvalReport> for SummaryMetrics {
    fn from(r: &EvalReport) -> Self {
        Self {
            auc_mean: r.mean.auc,
            auc_std: r.std.auc,
            eer_mean: r.mean.eer,
            f1_mean: r.mean.f1,
            baseline_auc: r.baseline_mean.auc,
        }
    }
}

/// Toggle vectors `(amplitude_class, frequency_class, branch, kernel)`. The
/// combination with no anomaly class has no defined training task and is
/// left out; the all-on default comes first.
pub fn ablation_grid() -> Vec<(bool, bool, bool, usize)> {
    let mut grid = Vec::new();
    for (amp, freq) in [(true, true), (true, false), (false, true)] {
        for branch in [true, false] {
            for kernel in [7, 3] {
                grid.push((amp, freq, branch, kernel));
            }
        }
    }
    grid
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = format!(
        "# configurations={}\namplitude_class,frequency_class,branch,kernel,auc_mean,auc_std,eer_mean,f1_mean,baseline_auc\n",
        rows.len()
    );
    for r in rows {
        let m = &r.report;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.amplitude_class,
            r.frequency_class,
            r.branch,
            r.kernel,
            m.auc_mean,
            m.auc_std,
            m.eer_mean,
            m.f1_mean,
            m.baseline_auc
        )
        .expect("string write");
    }
    out
}

pub fn cmd_ablate(cfg: &RunConfig, progress: Option<Progress>) -> Result<Vec<AblationRow>> {
    let data = load_checked(cfg)?;
    let mut rows = Vec::new();
    for (amp, freq, branch, kernel) in ablation_grid() {
        let mut c = cfg.clone();
        c.augment.amplitude_class = amp;
        c.augment.frequency_class = freq;
        c.arch.branch_enabled = branch;
        c.arch.main_kernel = kernel;
        if let Some(p) = progress {
            p(&format!(
                "ablation: amplitude={amp} frequency={freq} branch={branch} kernel={kernel}"
            ));
        }
        let report = experiment(&c, &data, progress)?;
        rows.push(AblationRow {
            amplitude_class: amp,
            frequency_class: freq,
            branch,
            kernel,
            report: SummaryMetrics::from(&report),
        });
    }
    write_atomic_in(&cfg.paths.output_dir, "ablation.csv", &ablation_csv(&rows))?;
    Ok(rows)
}

fn write_atomic_in(dir: &Path, name: &str, text: &str) -> Result<()> {
    ensure_dir(dir)?;
    write_atomic(&dir.join(name), text.as_bytes())
}

/// One swept value and its results.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub grid: &'static str,
    pub value: f64,
    pub is_default: bool,
    pub report: SummaryMetrics,
}

/// The five sweep grids for segments of length `len`; each changes one
/// range's upper end (or the fake fraction) and includes the default.
pub fn sweep_grids(len: usize) -> Vec<(&'static str, Vec<f64>)> {
    vec![
        ("amp_upper", vec![3.0, 4.0, 5.0, 6.0, 7.0]),
        ("window_upper", (1..=5).map(|k| (k * len / 5) as f64).collect()),
        ("lowfreq_upper", vec![3.0, 4.0, 5.0, 6.0, 7.0]),
        ("highfreq_upper", vec![0.4, 0.5, 0.6, 0.7, 0.8]),
        ("fake_fraction", vec![0.0, 0.05, 0.10, 0.15, 0.20]),
    ]
}

/// `cfg` with one grid value applied.
pub fn apply_sweep(cfg: &RunConfig, grid: &str, value: f64) -> Result<RunConfig> {
    let mut c = cfg.clone();
    let a = &mut c.augment;
    match grid {
        "amp_upper" => a.amp_range[1] = value,
        "window_upper" => a.window_range.1 = Some(value as usize),
        "lowfreq_upper" => a.lowfreq_range[1] = value,
        "highfreq_upper" => a.highfreq_range[1] = value,
        "fake_fraction" => a.fake_fraction = value,
        other => return Err(Error::Config(format!("unknown sweep grid `{other}`"))),
    }
    Ok(c)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("grid,value,is_default,auc_mean,auc_std,eer_mean,f1_mean,baseline_auc\n");
    for r in rows {
        let m = &r.report;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.grid, r.value, r.is_default, m.auc_mean, m.auc_std, m.eer_mean, m.f1_mean, m.baseline_auc
        )
        .expect("string write");
    }
    out
}

/// Runs every grid point; settings equivalent to an earlier one (notably the
/// shared default) are evaluated once and reused.
pub fn cmd_sweep(cfg: &RunConfig, progress: Option<Progress>) -> Result<Vec<SweepRow>> {
    let data = load_checked(cfg)?;
    let len = cfg.arch.length;
    let default_augment = cfg.augment.clone();
    let mut cache: BTreeMap<String, SummaryMetrics> = BTreeMap::new();
    let mut rows = Vec::new();
    for (grid, values) in sweep_grids(len) {
        for value in values {
            let c = apply_sweep(cfg, grid, value)?;
            // the default window upper end is "whole segment"
            let is_default = c.augment.window_max(len) == default_augment.window_max(len)
                && c.augment.amp_range == default_augment.amp_range
                && c.augment.lowfreq_range == default_augment.lowfreq_range
                && c.augment.highfreq_range == default_augment.highfreq_range
                && c.augment.fake_fraction == default_augment.fake_fraction;
            let mut key_cfg = c.augment.clone();
            key_cfg.window_range.1 = Some(key_cfg.window_max(len));
            let key = serde_json::to_string(&key_cfg).expect("config serializes");
            let report = match cache.get(&key) {
                Some(m) => *m,
                None => {
                    if let Some(p) = progress {
                        p(&format!("sweep: {grid}={value}"));
                    }
                    let m = SummaryMetrics::from(&experiment(&c, &data, progress)?);
                    cache.insert(key, m);
                    m
                }
            };
            rows.push(SweepRow {
                grid,
                value,
                is_default,
                report,
            });
        }
    }
    write_atomic_in(&cfg.paths.output_dir, "sweep.csv", &sweep_csv(&rows))?;
    Ok(rows)
}
