// SPDX-License-Identifier: Apache-2.0

//! The single JSON run configuration. Every field has a default, so `{}` is a
//! complete config; `--set a.b=value` patches one field through the JSON tree.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::augment::AugmentConfig;
use crate::dataset::segment_samples;
use crate::detector::ShrinkagePolicy;
use crate::error::{Error, Result};
use crate::eval::{ExperimentSpec, SplitConfig};
use crate::nn::{ArchConfig, TrainConfig};
use crate::synth::{DatasetPlan, SynthConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Segments and `manifest.csv`.
    pub data_dir: PathBuf,
    /// Reports, logs and score tables.
    pub output_dir: PathBuf,
    pub model_file: PathBuf,
    pub detector_file: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            data_dir: "data".into(),
            output_dir: "out".into(),
            model_file: "out/model.tbm".into(),
            detector_file: "out/detector.gdt".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub synth: SynthConfig,
    pub dataset: DatasetPlan,
    pub arch: ArchConfig,
    pub train: TrainConfig,
    pub augment: AugmentConfig,
    pub detector: ShrinkagePolicy,
    pub split: SplitConfig,
    pub n_runs: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let synth = SynthConfig::default();
        let dataset = DatasetPlan::default();
        let length = (synth.sample_rate * dataset.segment_duration_s).round() as usize;
        Self {
            paths: Paths::default(),
            arch: ArchConfig::tiny(synth.channels, length),
            synth,
            dataset,
            train: TrainConfig::default(),
            augment: AugmentConfig::default(),
            detector: ShrinkagePolicy::default(),
            split: SplitConfig::default(),
            n_runs: 1,
            seed: 0,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(config_err)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Applies `key=value` overrides in order. `key` is a dot-separated path
    /// to an existing field; `value` is parsed as JSON, falling back to a
    /// plain string.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut tree = serde_json::to_value(self).map_err(config_err)?;
        for o in overrides {
            let o = o.as_ref();
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not of the form key=value")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            let mut node = &mut tree;
            for part in key.split('.') {
                node = match node {
                    Value::Object(map) => map.get_mut(part),
                    Value::Array(items) => part.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
                    _ => None,
                }
                .ok_or_else(|| Error::Config(format!("unknown config key `{key}`")))?;
            }
            *node = value;
        }
        serde_json::from_value(tree).map_err(|e| Error::Config(format!("after overrides: {e}")))
    }

    pub fn segment_len(&self) -> Result<usize> {
        segment_samples(self.synth.sample_rate, self.dataset.segment_duration_s)
    }

    /// Checks every sub-config and their agreement on segment shape.
    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.dataset.validate(&self.synth)?;
        self.arch.validate()?;
        self.train.validate()?;
        let len = self.segment_len()?;
        self.augment.validate(len)?;
        if (self.arch.channels, self.arch.length) != (self.synth.channels, len) {
            return Err(Error::Config(format!(
                "arch expects {}x{} segments but synth/dataset produce {}x{len}",
                self.arch.channels, self.arch.length, self.synth.channels
            )));
        }
        if self.n_runs == 0 {
            return Err(Error::Config("n_runs must be positive".into()));
        }
        Ok(())
    }

    pub fn experiment(&self) -> ExperimentSpec {
        ExperimentSpec {
            arch: self.arch.clone(),
            train: self.train.clone(),
            augment: self.augment.clone(),
            shrinkage: self.detector,
            split: self.split.clone(),
            n_runs: self.n_runs,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn round_trip() {
        let c = RunConfig::default()
            .with_overrides(&["train.learning_rate=0.0003", "seed=9"])
            .unwrap();
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn overrides() {
        let c = RunConfig::default()
            .with_overrides(&[
                "augment.window_range=[4, 51]",
                "split.setting=II",
                "paths.data_dir=/tmp/x",
                "augment.amp_range.1=7",
            ])
            .unwrap();
        assert_eq!(c.augment.window_range, (4, Some(51)));
        assert_eq!(c.split.setting, crate::eval::Setting::II);
        assert_eq!(c.paths.data_dir, PathBuf::from("/tmp/x"));
        assert_eq!(c.augment.amp_range, [2.0, 7.0]);
        for bad in [
            "nokey=1",
            "train.nope=1",
            "train.learning_rate",
            "train.max_epochs=\"x\"",
        ] {
            assert!(
                matches!(RunConfig::default().with_overrides(&[bad]), Err(Error::Config(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(matches!(
            RunConfig::from_json(r#"{"trian": {}}"#),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let c = RunConfig::default()
            .with_overrides(&["synth.channels=3"])
            .unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
