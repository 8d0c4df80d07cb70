// SPDX-License-Identifier: Apache-2.0

//! Pretext-task training of the two-branch classifier.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::augment::{make_ssl_batch, AugmentConfig};
use crate::dataset::{Dataset, EegSegment, Label};
use crate::error::{Error, Result};
use crate::rng::RandomSource;

use super::graph::Graph;
use super::model::{ArchConfig, Mode, TwoBranchModel};
use super::optim::Adam;

/// Epoch cap of the full training protocol.
pub const PROTOCOL_MAX_EPOCHS: usize = 300;

/// Default epoch budget: enough for the tiny preset to converge on a few
/// thousand synthetic segments within minutes on one core.
pub const DESK_EPOCHS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub max_epochs: usize,
    /// Normal segments per batch; each batch holds three times as many samples.
    pub batch_normals: usize,
    /// Stop after this many epochs without a lower training loss.
    pub early_stop_patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            weight_decay: 3e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            max_epochs: DESK_EPOCHS,
            batch_normals: 64,
            early_stop_patience: None,
        }
    }
}

impl TrainConfig {
    /// The full protocol: same optimizer settings with the 300-epoch cap.
    pub fn protocol() -> Self {
        Self {
            max_epochs: PROTOCOL_MAX_EPOCHS,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::Config(
                "learning_rate must be positive, weight_decay non-negative".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return Err(Error::Config(
                "Adam betas must lie in [0, 1) and eps be positive".into(),
            ));
        }
        if self.max_epochs == 0 || self.batch_normals == 0 {
            return Err(Error::Config(
                "max_epochs and batch_normals must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Statistics of one training epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean cross-entropy over all samples of the epoch.
    pub loss: f64,
    /// Pretext 3-class accuracy over all samples of the epoch.
    pub accuracy: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
}

impl TrainingLog {
    /// `epoch,loss,accuracy`; deterministic for a fixed seed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,accuracy\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{:.8},{:.6}\n", e.epoch, e.loss, e.accuracy));
        }
        out
    }

    /// `epoch,wall_time_s`, kept apart from the deterministic log.
    pub fn timing_csv(&self) -> String {
        let mut out = String::from("epoch,wall_time_s\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{:.3}\n", e.epoch, e.wall_time_s));
        }
        out
    }

    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.loss).collect()
    }
}

pub fn train(
    normals: &Dataset,
    arch: &ArchConfig,
    train_cfg: &TrainConfig,
    augment_cfg: &AugmentConfig,
    rng: &mut RandomSource,
) -> Result<(TwoBranchModel<f32>, TrainingLog)> {
    train_with_progress(normals, arch, train_cfg, augment_cfg, rng, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with_progress(
    normals: &Dataset,
    arch: &ArchConfig,
    train_cfg: &TrainConfig,
    augment_cfg: &AugmentConfig,
    rng: &mut RandomSource,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<(TwoBranchModel<f32>, TrainingLog)> {
    train_cfg.validate()?;
    if normals.is_empty() {
        return Err(Error::InvalidInput("training set is empty".into()));
    }
    if let Some(bad) = normals.segments.iter().find(|s| s.label != Label::Normal) {
        return Err(Error::InvalidInput(format!(
            "training set contains a {} segment (patient {})",
            bad.label.name(),
            bad.patient_id
        )));
    }
    augment_cfg.validate(arch.length)?;

    let master = RandomSource::new(rng.next_u64());
    let mut model = TwoBranchModel::<f32>::build(arch, &mut master.derive(0))?;
    let mut adam = Adam::new(&model.params);
    let mut log = TrainingLog::default();
    let started = Instant::now();
    let mut last_finite = None;
    let mut best = f64::INFINITY;
    let mut stale = 0;

    for epoch in 0..train_cfg.max_epochs {
        let mut epoch_rng = master.derive(1 + epoch as u64);
        let mut order: Vec<usize> = (0..normals.len()).collect();
        epoch_rng.shuffle(&mut order);

        let (mut loss_sum, mut correct, mut seen) = (0.0f64, 0usize, 0usize);
        for (batch_idx, chunk) in order.chunks(train_cfg.batch_normals).enumerate() {
            let batch_normals: Vec<EegSegment> = chunk.iter().map(|&i| normals.segments[i].clone()).collect();
            let batch = make_ssl_batch(&batch_normals, augment_cfg, &mut epoch_rng)?;
            let refs: Vec<&EegSegment> = batch.segments.iter().collect();
            let input = model.batch_tensor(&refs)?;
            let labels: Vec<usize> = batch.classes.iter().map(|&c| c as usize).collect();

            let mut g = Graph::new();
            let pass = model.forward(&mut g, &input, Mode::Train, true)?;
            let loss_node = g.cross_entropy(pass.logits, &labels)?;
            let loss = g.value(loss_node).data()[0] as f64;
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: batch_idx,
                    last_finite_loss: last_finite,
                });
            }
            last_finite = Some(loss);
            correct += count_correct(g.value(pass.logits).data(), &labels);
            loss_sum += loss * labels.len() as f64;
            seen += labels.len();

            let grads = g.backward(loss_node)?;
            let grads = model.collect_grads(&grads, &pass);
            adam.step(&mut model.params, &grads, train_cfg)?;
        }

        let entry = EpochLog {
            epoch,
            loss: loss_sum / seen as f64,
            accuracy: correct as f64 / seen as f64,
            wall_time_s: started.elapsed().as_secs_f64(),
        };
        on_epoch(&entry);
        let epoch_loss = entry.loss;
        log.epochs.push(entry);

        if let Some(patience) = train_cfg.early_stop_patience {
            if epoch_loss < best {
                best = epoch_loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
    }
    Ok((model, log))
}

fn count_correct(logits: &[f32], labels: &[usize]) -> usize {
    logits
        .chunks_exact(3)
        .zip(labels)
        .filter(|(row, &l)| {
            let best = row
                .iter()
                .enumerate()
                .fold(0, |b, (i, &v)| if v > row[b] { i } else { b });
            best == l
        })
        .count()
}
