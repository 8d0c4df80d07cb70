// SPDX-License-Identifier: Apache-2.0

//! Threshold-free and threshold-based detection metrics. Abnormal is the
//! positive class and higher scores mean "more abnormal".

use crate::error::{Error, Result};

fn check(normals: &[f64], abnormals: &[f64]) -> Result<()> {
    if normals.is_empty() || abnormals.is_empty() {
        return Err(Error::InvalidInput(format!(
            "metrics need both classes, got {} normal and {} abnormal scores",
            normals.len(),
            abnormals.len()
        )));
    }
    if normals.iter().chain(abnormals).any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("scores contain NaN".into()));
    }
    Ok(())
}

/// Mann–Whitney AUC with half credit for ties, via average ranks.
///
/// The statistic is accumulated in integers (doubled ranks), so the result is
/// the exact ratio `(2·wins + ties) / (2·n_a·n_n)` rounded once.
pub fn auc(normals: &[f64], abnormals: &[f64]) -> Result<f64> {
    check(normals, abnormals)?;
    let mut all: Vec<(f64, bool)> = normals
        .iter()
        .map(|&s| (s, false))
        .chain(abnormals.iter().map(|&s| (s, true)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // doubled rank sum of the abnormals; ranks are 1-based
    let mut rank2_sum: u128 = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1..=j share the doubled average (i+1)+j
        let avg2 = (i + 1 + j) as u128;
        let hits = all[i..j].iter().filter(|x| x.1).count() as u128;
        rank2_sum += avg2 * hits;
        i = j;
    }
    let (na, nn) = (abnormals.len() as u128, normals.len() as u128);
    let u2 = rank2_sum - na * (na + 1);
    Ok(u2 as f64 / (2 * na * nn) as f64)
}

/// Fraction of normals with score `>= t`.
pub fn false_positive_rate(normals: &[f64], t: f64) -> f64 {
    normals.iter().filter(|&&s| s >= t).count() as f64 / normals.len() as f64
}

/// Fraction of abnormals with score `< t`.
pub fn false_negative_rate(abnormals: &[f64], t: f64) -> f64 {
    abnormals.iter().filter(|&&s| s < t).count() as f64 / abnormals.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualErrorRate {
    /// Common rate at the crossing, folded into `[0, 0.5]`.
    pub eer: f64,
    /// Rate at the crossing before folding; above 0.5 when normals tend to
    /// score higher than abnormals.
    pub crossing_rate: f64,
    pub threshold: f64,
}

/// Candidate thresholds: one below every score, the midpoints between sorted
/// unique scores, and one above every score.
fn candidates(normals: &[f64], abnormals: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = normals.iter().chain(abnormals).copied().collect();
    u.sort_by(f64::total_cmp);
    u.dedup();
    let (lo, hi) = (u[0], u[u.len() - 1]);
    let mut c = Vec::with_capacity(u.len() + 1);
    c.push(lo - 1.0 - lo.abs());
    c.extend(u.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
    c.push(hi + 1.0 + hi.abs());
    c
}

/// Crossing of FPR and FNR along the piecewise-linear path through the
/// candidate thresholds.
///
/// `FPR - FNR` falls monotonically from 1 to -1 as the threshold rises; the
/// crossing is exact when a candidate hits zero and interpolated otherwise.
/// Swapping the two score lists maps the crossing rate `e` to `1 - e`, so the
/// reported `eer` is `min(e, 1 - e)`.
pub fn eer(normals: &[f64], abnormals: &[f64]) -> Result<EqualErrorRate> {
    check(normals, abnormals)?;
    let cands = candidates(normals, abnormals);
    let rates: Vec<(f64, f64)> = cands
        .iter()
        .map(|&t| (false_positive_rate(normals, t), false_negative_rate(abnormals, t)))
        .collect();
    let mut found = None;
    for k in 0..cands.len() {
        let (fpr, fnr) = rates[k];
        let diff = fpr - fnr;
        if diff == 0.0 {
            found = Some((fpr, cands[k]));
            break;
        }
        if diff < 0.0 {
            // k > 0: the lowest candidate has FPR = 1, FNR = 0
            let (fp0, fn0) = rates[k - 1];
            let d0 = fp0 - fn0;
            let lambda = d0 / (d0 - diff);
            let rate = fp0 + lambda * (fpr - fp0);
            let t = cands[k - 1] + lambda * (cands[k] - cands[k - 1]);
            found = Some((rate, t));
            break;
        }
    }
    let (rate, threshold) = found.expect("FPR - FNR ends at -1");
    Ok(EqualErrorRate {
        eer: rate.min(1.0 - rate),
        crossing_rate: rate,
        threshold,
    })
}

/// F1 of the abnormal class when predicting abnormal for `score >= t`;
/// zero when nothing is a true positive.
pub fn f1_at_threshold(normals: &[f64], abnormals: &[f64], t: f64) -> f64 {
    let tp = abnormals.iter().filter(|&&s| s >= t).count() as f64;
    let fp = normals.iter().filter(|&&s| s >= t).count() as f64;
    let fneg = abnormals.len() as f64 - tp;
    if tp == 0.0 {
        return 0.0;
    }
    let p = tp / (tp + fp);
    let r = tp / (tp + fneg);
    2.0 * p * r / (p + r)
}

pub fn f1_at_eer(normals: &[f64], abnormals: &[f64]) -> Result<f64> {
    let e = eer(normals, abnormals)?;
    Ok(f1_at_threshold(normals, abnormals, e.threshold))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC points at every unique score plus one threshold above all scores,
/// ascending in threshold (so descending in both rates).
pub fn roc_curve(normals: &[f64], abnormals: &[f64]) -> Result<Vec<RocPoint>> {
    check(normals, abnormals)?;
    let mut u: Vec<f64> = normals.iter().chain(abnormals).copied().collect();
    u.sort_by(f64::total_cmp);
    u.dedup();
    let top = *u.last().expect("nonempty");
    u.push(top + 1.0 + top.abs());
    Ok(u.into_iter()
        .map(|t| RocPoint {
            threshold: t,
            fpr: false_positive_rate(normals, t),
            tpr: 1.0 - false_negative_rate(abnormals, t),
        })
        .collect())
}

pub fn roc_csv(points: &[RocPoint]) -> String {
    let mut out = String::from("threshold,fpr,tpr\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
    }
    out
}

/// AUC, EER, its threshold and F1 at that threshold.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub auc: f64,
    pub eer: f64,
    pub eer_threshold: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn compute(normals: &[f64], abnormals: &[f64]) -> Result<Self> {
        let e = eer(normals, abnormals)?;
        Ok(Self {
            auc: auc(normals, abnormals)?,
            eer: e.eer,
            eer_threshold: e.threshold,
            f1: f1_at_threshold(normals, abnormals, e.threshold),
        })
    }
}
