// SPDX-License-Identifier: Apache-2.0

//! One experiment = several independent runs (Setting I) or repeated
//! patient-level cross-validation (Setting II). Each run splits, fits the
//! normalization range on its training normals, trains a feature extractor,
//! fits the Gaussian detector on training features and scores the test set.
//! The raw-signal baseline is scored on the same split.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::metrics::{roc_curve, Metrics, RocPoint};
use super::split::{default_fold_count, split_setting1, split_setting2, Fold, Setting};
use crate::augment::AugmentConfig;
use crate::dataset::{fit_normalization, normalize_dataset, Dataset, Label};
use crate::detector::{GaussianDetector, RawBaseline, ShrinkagePolicy};
use crate::error::{Error, Result};
use crate::nn::{train_with_progress, ArchConfig, TrainConfig, TrainingLog, TwoBranchModel};
use crate::rng::RandomSource;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub setting: Setting,
    /// Setting II only; `None` picks one fold per patient up to ten, else five.
    pub fold_count: Option<usize>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            setting: Setting::I,
            fold_count: None,
        }
    }
}

/// Everything one experiment needs besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub arch: ArchConfig,
    pub train: TrainConfig,
    pub augment: AugmentConfig,
    pub shrinkage: ShrinkagePolicy,
    pub split: SplitConfig,
    pub n_runs: usize,
    pub seed: u64,
}

pub type Progress<'a> = &'a (dyn Fn(&str) + Sync);

#[derive(Clone, Copy)]
pub struct RunOptions<'a> {
    /// Upper bound on concurrently executing runs.
    pub threads: usize,
    pub progress: Option<Progress<'a>>,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        Self {
            threads: 1,
            progress: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSegment {
    /// Index into the experiment's dataset.
    pub segment_id: usize,
    pub patient_id: String,
    pub label: Label,
    pub score: f64,
}

/// `segment_id,patient_id,true_label,score`.
pub fn scores_csv(scores: &[ScoredSegment]) -> String {
    let mut out = String::from("segment_id,patient_id,true_label,score\n");
    for s in scores {
        out.push_str(&format!(
            "{},{},{},{}\n",
            s.segment_id,
            s.patient_id,
            s.label.name(),
            s.score
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub run: usize,
    pub fold: usize,
    pub metrics: Metrics,
    pub baseline: Metrics,
    pub n_train: usize,
    pub n_normal: usize,
    pub n_abnormal: usize,
    pub scores: Vec<ScoredSegment>,
    pub baseline_scores: Vec<ScoredSegment>,
    pub log: TrainingLog,
}

impl RunOutcome {
    pub fn roc(&self) -> Result<Vec<RocPoint>> {
        let (n, a) = split_scores(&self.scores);
        roc_curve(&n, &a)
    }
}

fn split_scores(scores: &[ScoredSegment]) -> (Vec<f64>, Vec<f64>) {
    let mut n = Vec::new();
    let mut a = Vec::new();
    for s in scores {
        if s.label.is_abnormal() {
            a.push(s.score);
        } else {
            n.push(s.score);
        }
    }
    (n, a)
}

/// Per-run rows sorted by `(run, fold)` plus their mean and sample standard
/// deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub runs: Vec<RunOutcome>,
    pub mean: Metrics,
    pub std: Metrics,
    pub baseline_mean: Metrics,
    pub baseline_std: Metrics,
    /// False for a single row, whose standard deviation is reported as 0.
    pub std_defined: bool,
}

fn mean_std(rows: &[Metrics]) -> (Metrics, Metrics) {
    let n = rows.len() as f64;
    let pick = |f: fn(&Metrics) -> f64| -> (f64, f64) {
        let m = rows.iter().map(f).sum::<f64>() / n;
        let s = if rows.len() < 2 {
            0.0
        } else {
            (rows.iter().map(|r| (f(r) - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        (m, s)
    };
    let (auc, eer, thr, f1) = (
        pick(|m| m.auc),
        pick(|m| m.eer),
        pick(|m| m.eer_threshold),
        pick(|m| m.f1),
    );
    (
        Metrics {
            auc: auc.0,
            eer: eer.0,
            eer_threshold: thr.0,
            f1: f1.0,
        },
        Metrics {
            auc: auc.1,
            eer: eer.1,
            eer_threshold: thr.1,
            f1: f1.1,
        },
    )
}

impl EvalReport {
    pub fn from_runs(mut runs: Vec<RunOutcome>) -> Self {
        runs.sort_by_key(|r| (r.run, r.fold));
        let (mean, std) = mean_std(&runs.iter().map(|r| r.metrics).collect::<Vec<_>>());
        let (baseline_mean, baseline_std) = mean_std(&runs.iter().map(|r| r.baseline).collect::<Vec<_>>());
        Self {
            std_defined: runs.len() > 1,
            runs,
            mean,
            std,
            baseline_mean,
            baseline_std,
        }
    }

    /// `run,fold,auc,eer,f1,n_normal,n_abnormal,eer_threshold,baseline_auc,baseline_eer,baseline_f1`
    /// with one row per run and two summary rows (`mean`, then `std`, or
    /// `std_single_run` when there is only one row and the 0 is a convention).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "run,fold,auc,eer,f1,n_normal,n_abnormal,eer_threshold,baseline_auc,baseline_eer,baseline_f1\n",
        );
        for r in &self.runs {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.run,
                r.fold,
                r.metrics.auc,
                r.metrics.eer,
                r.metrics.f1,
                r.n_normal,
                r.n_abnormal,
                r.metrics.eer_threshold,
                r.baseline.auc,
                r.baseline.eer,
                r.baseline.f1
            ));
        }
        let n_normal =
            self.runs.iter().map(|r| r.n_normal).sum::<usize>() as f64 / self.runs.len().max(1) as f64;
        let n_abnormal =
            self.runs.iter().map(|r| r.n_abnormal).sum::<usize>() as f64 / self.runs.len().max(1) as f64;
        let std_label = if self.std_defined { "std" } else { "std_single_run" };
        for (label, m, b, nn, na) in [
            ("mean", self.mean, self.baseline_mean, n_normal, n_abnormal),
            (std_label, self.std, self.baseline_std, 0.0, 0.0),
        ] {
            out.push_str(&format!(
                "{label},,{},{},{},{nn},{na},{},{},{},{}\n",
                m.auc, m.eer, m.f1, m.eer_threshold, b.auc, b.eer, b.f1
            ));
        }
        out
    }

    /// Scores of every run, prefixed by `run,fold`.
    pub fn scores_csv(&self) -> String {
        let mut out = String::from("run,fold,segment_id,patient_id,true_label,score,baseline_score\n");
        for r in &self.runs {
            for (s, b) in r.scores.iter().zip(&r.baseline_scores) {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.run,
                    r.fold,
                    s.segment_id,
                    s.patient_id,
                    s.label.name(),
                    s.score,
                    b.score
                ));
            }
        }
        out
    }

    /// ROC points of every run, prefixed by `run,fold`, ascending threshold
    /// within each run.
    pub fn roc_csv(&self) -> Result<String> {
        let mut out = String::from("run,fold,threshold,fpr,tpr\n");
        for r in &self.runs {
            for p in r.roc()? {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.run, r.fold, p.threshold, p.fpr, p.tpr
                ));
            }
        }
        Ok(out)
    }
}

/// One run/fold of an experiment with its own random stream.
#[derive(Debug, Clone)]
pub struct PlannedRun {
    pub run: usize,
    pub fold: usize,
    pub split: Fold,
    pub rng: RandomSource,
}

/// Splits for every run: run `r` splits with `derive(r).derive(0)` of the
/// experiment seed and trains fold `f` with `derive(r).derive(1 + f)`.
pub fn plan_runs(dataset: &Dataset, spec: &ExperimentSpec) -> Result<Vec<PlannedRun>> {
    if spec.n_runs == 0 {
        return Err(Error::Config("n_runs must be positive".into()));
    }
    let master = RandomSource::new(spec.seed);
    let mut jobs = Vec::new();
    for run in 0..spec.n_runs {
        let run_rng = master.derive(run as u64);
        let mut split_rng = run_rng.derive(0);
        let folds = match spec.split.setting {
            Setting::I => split_setting1(dataset, &mut split_rng)?.folds,
            Setting::II => {
                let patients = dataset
                    .segments
                    .iter()
                    .filter(|s| s.label == Label::Normal)
                    .map(|s| s.patient_id.as_str())
                    .collect::<std::collections::BTreeSet<_>>()
                    .len();
                let k = spec
                    .split
                    .fold_count
                    .unwrap_or_else(|| default_fold_count(patients));
                split_setting2(dataset, k, &mut split_rng)?.folds
            }
        };
        for (fold, split) in folds.into_iter().enumerate() {
            jobs.push(PlannedRun {
                run,
                fold,
                split,
                rng: run_rng.derive(1 + fold as u64),
            });
        }
    }
    Ok(jobs)
}

fn score_with<F>(dataset: &Dataset, test_ids: &[usize], scores: F) -> Vec<ScoredSegment>
where
    F: IntoIterator<Item = f64>,
{
    test_ids
        .iter()
        .zip(scores)
        .map(|(&id, score)| {
            let seg = &dataset.segments[id];
            ScoredSegment {
                segment_id: id,
                patient_id: seg.patient_id.clone(),
                label: seg.label,
                score,
            }
        })
        .collect()
}

fn metrics_of(scores: &[ScoredSegment]) -> Result<Metrics> {
    let (n, a) = split_scores(scores);
    Metrics::compute(&n, &a)
}

/// A trained feature extractor with the detector fitted on its training
/// features and the normalization range of its training normals.
#[derive(Debug, Clone)]
pub struct TrainedRun {
    pub model: TwoBranchModel<f32>,
    pub log: TrainingLog,
    pub detector: GaussianDetector,
    pub norm_range: (f32, f32),
}

fn features_f64(model: &TwoBranchModel<f32>, data: &Dataset) -> Result<Vec<Vec<f64>>> {
    Ok(model
        .extract_features_batch(&data.segments)?
        .into_iter()
        .map(|r| r.into_iter().map(f64::from).collect())
        .collect())
}

/// Normalizes the training fold, trains and fits the detector.
pub fn train_run(
    dataset: &Dataset,
    spec: &ExperimentSpec,
    planned: &PlannedRun,
    progress: Option<Progress>,
) -> Result<TrainedRun> {
    let (run, fold) = (planned.run, planned.fold);
    let train_raw = dataset.subset(&planned.split.train);
    let (lo, hi) = fit_normalization(&train_raw.segments).map_err(|e| e.in_stage("normalize"))?;
    let train_set = normalize_dataset(&train_raw, lo, hi);
    let mut rng = planned.rng.clone();
    let (model, log) = train_with_progress(
        &train_set,
        &spec.arch,
        &spec.train,
        &spec.augment,
        &mut rng,
        |e| {
            if let Some(p) = progress {
                p(&format!(
                    "run {run} fold {fold}: epoch {} loss {:.4} acc {:.3}",
                    e.epoch, e.loss, e.accuracy
                ));
            }
        },
    )
    .map_err(|e| e.in_stage("train"))?;
    let detector = features_f64(&model, &train_set)
        .and_then(|f| GaussianDetector::fit(&f, spec.shrinkage))
        .map_err(|e| e.in_stage("detect"))?;
    Ok(TrainedRun {
        model,
        log,
        detector,
        norm_range: (lo, hi),
    })
}

fn execute(
    dataset: &Dataset,
    spec: &ExperimentSpec,
    planned: PlannedRun,
    progress: Option<Progress>,
) -> Result<RunOutcome> {
    let trained = train_run(dataset, spec, &planned, progress)?;
    let PlannedRun { run, fold, split, .. } = planned;
    let (lo, hi) = trained.norm_range;
    let train_set = normalize_dataset(&dataset.subset(&split.train), lo, hi);
    let test_set = normalize_dataset(&dataset.subset(&split.test), lo, hi);
    let test_scores = features_f64(&trained.model, &test_set)
        .and_then(|f| trained.detector.score_all(&f))
        .map_err(|e| e.in_stage("detect"))?;
    let scores = score_with(dataset, &split.test, test_scores);

    let baseline = RawBaseline::fit_with(&train_set, spec.shrinkage).map_err(|e| e.in_stage("baseline"))?;
    let base_scores = test_set
        .segments
        .iter()
        .map(|s| baseline.score(s).map(|v| v.value()))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("baseline"))?;
    let baseline_scores = score_with(dataset, &split.test, base_scores);

    let metrics = metrics_of(&scores).map_err(|e| e.in_stage("metrics"))?;
    let baseline_metrics = metrics_of(&baseline_scores).map_err(|e| e.in_stage("metrics"))?;
    if let Some(p) = progress {
        p(&format!(
            "run {run} fold {fold}: auc {:.4} eer {:.4} f1 {:.4} (baseline auc {:.4})",
            metrics.auc, metrics.eer, metrics.f1, baseline_metrics.auc
        ));
    }
    let n_abnormal = scores.iter().filter(|s| s.label.is_abnormal()).count();
    Ok(RunOutcome {
        run,
        fold,
        metrics,
        baseline: baseline_metrics,
        n_train: split.train.len(),
        n_normal: scores.len() - n_abnormal,
        n_abnormal,
        scores,
        baseline_scores,
        log: trained.log,
    })
}

pub fn run_experiment(dataset: &Dataset, spec: &ExperimentSpec) -> Result<EvalReport> {
    run_experiment_with(dataset, spec, RunOptions::default())
}

/// Runs are independent, so up to `options.threads` execute at once; every
/// run draws from its own derived random stream and the report is sorted by
/// run index, so the result does not depend on the thread count.
pub fn run_experiment_with(
    dataset: &Dataset,
    spec: &ExperimentSpec,
    options: RunOptions,
) -> Result<EvalReport> {
    spec.arch.validate()?;
    spec.train.validate()?;
    spec.augment.validate(spec.arch.length)?;
    if let Some((k, l)) = dataset.shape() {
        if (k, l) != (spec.arch.channels, spec.arch.length) {
            return Err(Error::Config(format!(
                "dataset segments are {k}x{l} but the model expects {}x{}",
                spec.arch.channels, spec.arch.length
            )));
        }
    }
    let jobs = plan_runs(dataset, spec)?;
    let threads = options.threads.clamp(1, jobs.len().max(1));
    let tagged: Vec<(usize, PlannedRun)> = jobs.into_iter().enumerate().collect();

    let results: Vec<(usize, Result<RunOutcome>)> = if threads == 1 {
        tagged
            .into_iter()
            .map(|(i, job)| {
                let run = job.run;
                (
                    i,
                    execute(dataset, spec, job, options.progress).map_err(|e| e.in_run(run)),
                )
            })
            .collect()
    } else {
        let queue = Mutex::new(tagged.into_iter());
        let done = Mutex::new(Vec::new());
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(|| loop {
                    let Some((i, job)) = queue.lock().expect("queue lock").next() else {
                        break;
                    };
                    let run = job.run;
                    let r = execute(dataset, spec, job, options.progress).map_err(|e| e.in_run(run));
                    done.lock().expect("result lock").push((i, r));
                });
            }
        });
        done.into_inner().expect("result lock")
    };

    let mut results = results;
    results.sort_by_key(|(i, _)| *i);
    let runs = results.into_iter().map(|(_, r)| r).collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_runs(runs))
}
