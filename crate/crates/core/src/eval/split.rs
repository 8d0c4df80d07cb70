// SPDX-License-Identifier: Apache-2.0

//! Train/test splits. Abnormal segments are test-only in every fold.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Label};
use crate::error::{Error, Result};
use crate::rng::RandomSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Setting {
    /// Segment-level random split with as many test normals as abnormals.
    #[serde(rename = "I")]
    I,
    /// Patient-level cross-validation over the normals.
    #[serde(rename = "II")]
    II,
}

/// Segment indices into the source dataset, each list ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub setting: Setting,
    pub seed: u64,
    pub fold_count: usize,
    pub folds: Vec<Fold>,
}

fn indices(dataset: &Dataset, pred: impl Fn(Label) -> bool) -> Vec<usize> {
    dataset
        .segments
        .iter()
        .enumerate()
        .filter(|(_, s)| pred(s.label))
        .map(|(i, _)| i)
        .collect()
}

pub fn split_setting1(dataset: &Dataset, rng: &mut RandomSource) -> Result<SplitPlan> {
    let normals = indices(dataset, |l| l == Label::Normal);
    let abnormals = indices(dataset, |l| l != Label::Normal);
    if abnormals.is_empty() || abnormals.len() >= normals.len() {
        return Err(Error::InvalidRatio(format!(
            "Setting I needs more normals than abnormals and at least one abnormal, got {} and {}",
            normals.len(),
            abnormals.len()
        )));
    }
    let seed = rng.seed();
    let picked = rng.sample_indices(normals.len(), abnormals.len());
    let mut is_test = vec![false; normals.len()];
    for p in picked {
        is_test[p] = true;
    }
    let mut train = Vec::with_capacity(normals.len() - abnormals.len());
    let mut test = Vec::with_capacity(2 * abnormals.len());
    for (k, &i) in normals.iter().enumerate() {
        if is_test[k] {
            test.push(i);
        } else {
            train.push(i);
        }
    }
    test.extend(&abnormals);
    test.sort_unstable();
    Ok(SplitPlan {
        setting: Setting::I,
        seed,
        fold_count: 1,
        folds: vec![Fold { train, test }],
    })
}

/// Default fold count: one fold per patient up to ten patients, else five.
pub fn default_fold_count(patients: usize) -> usize {
    if patients <= 10 {
        patients
    } else {
        5
    }
}

/// Greedy largest-first balancing of `(patient, count)` into `folds` groups:
/// each patient goes to the group with the fewest segments so far, lowest
/// index on ties. Returns the group of each input entry.
pub fn balance_groups(counts: &[usize], folds: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..counts.len()).collect();
    // stable: equal counts keep their incoming order
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]));
    let mut totals = vec![0usize; folds];
    let mut group = vec![0; counts.len()];
    for i in order {
        let g = (0..folds).min_by_key(|&g| (totals[g], g)).expect("folds > 0");
        totals[g] += counts[i];
        group[i] = g;
    }
    group
}

pub fn split_setting2(dataset: &Dataset, fold_count: usize, rng: &mut RandomSource) -> Result<SplitPlan> {
    let normals = indices(dataset, |l| l == Label::Normal);
    let abnormals = indices(dataset, |l| l != Label::Normal);
    let mut per_patient: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &i in &normals {
        per_patient
            .entry(&dataset.segments[i].patient_id)
            .or_default()
            .push(i);
    }
    if fold_count < 2 || per_patient.len() < fold_count {
        return Err(Error::Config(format!(
            "Setting II needs at least 2 folds and no more folds than patients, got {fold_count} folds for {} patients",
            per_patient.len()
        )));
    }
    if abnormals.is_empty() {
        return Err(Error::InsufficientData(
            "Setting II needs at least one abnormal segment".into(),
        ));
    }
    let seed = rng.seed();
    // random tie-breaking among equally sized patients
    let mut patients: Vec<Vec<usize>> = per_patient.into_values().collect();
    rng.shuffle(&mut patients);
    let counts: Vec<usize> = patients.iter().map(Vec::len).collect();
    let groups = balance_groups(&counts, fold_count);

    let folds = (0..fold_count)
        .map(|f| {
            let mut train = Vec::new();
            let mut test = abnormals.clone();
            for (p, ids) in patients.iter().enumerate() {
                if groups[p] == f {
                    test.extend(ids);
                } else {
                    train.extend(ids);
                }
            }
            train.sort_unstable();
            test.sort_unstable();
            Fold { train, test }
        })
        .collect();
    Ok(SplitPlan {
        setting: Setting::II,
        seed,
        fold_count,
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::EegSegment;

    fn dataset(spec: &[(usize, &str, Label)]) -> Dataset {
        let mut segs = Vec::new();
        for &(n, p, l) in spec {
            for _ in 0..n {
                segs.push(EegSegment::new(vec![0.0; 4], 1, 4, 2.0, l, p).unwrap());
            }
        }
        Dataset::new(segs, 2.0).unwrap()
    }

    #[test]
    fn setting1_counts() {
        let d = dataset(&[(100, "a", Label::Normal), (30, "b", Label::Abnormal)]);
        let plan = split_setting1(&d, &mut RandomSource::new(1)).unwrap();
        let f = &plan.folds[0];
        assert_eq!((f.train.len(), f.test.len()), (70, 60));
        assert_eq!(split_setting1(&d, &mut RandomSource::new(1)).unwrap(), plan);

        let tiny = dataset(&[(2, "a", Label::Normal), (1, "b", Label::Abnormal)]);
        let f = &split_setting1(&tiny, &mut RandomSource::new(0)).unwrap().folds[0];
        assert_eq!((f.train.len(), f.test.len()), (1, 2));

        let bad = dataset(&[(3, "a", Label::Normal), (3, "b", Label::Abnormal)]);
        assert!(matches!(
            split_setting1(&bad, &mut RandomSource::new(0)),
            Err(Error::InvalidRatio(_))
        ));
    }

    #[test]
    fn greedy_balance() {
        assert_eq!(balance_groups(&[50, 30, 10, 10], 2), vec![0, 1, 1, 1]);
        assert_eq!(balance_groups(&[5, 5, 5, 5], 4), vec![0, 1, 2, 3]);
    }

    #[test]
    fn setting2_one_patient_per_fold() {
        let d = dataset(&[
            (5, "a", Label::Normal),
            (5, "b", Label::Normal),
            (5, "c", Label::Normal),
            (5, "d", Label::Normal),
            (3, "x", Label::Abnormal),
        ]);
        let plan = split_setting2(&d, 4, &mut RandomSource::new(3)).unwrap();
        assert_eq!(plan.folds.len(), 4);
        for f in &plan.folds {
            assert_eq!((f.train.len(), f.test.len()), (15, 8));
        }
        assert!(matches!(
            split_setting2(&d, 5, &mut RandomSource::new(3)),
            Err(Error::Config(_))
        ));
    }
}
