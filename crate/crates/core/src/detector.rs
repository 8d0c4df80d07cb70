// SPDX-License-Identifier: Apache-2.0

//! Multivariate Gaussian over normal feature vectors, scored by Mahalanobis
//! distance `sqrt((f - mu)^T (Sigma + eps I)^-1 (f - mu))`.
//!
//! The shrunk covariance is Cholesky-factored once at fit time; scoring is a
//! forward substitution against that factor.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, EegSegment};
use crate::error::{Error, Result};
use crate::io::Reader;

/// `eps = max(eps_abs, eps_rel * trace(Sigma) / d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShrinkagePolicy {
    pub eps_abs: f64,
    pub eps_rel: f64,
}

impl Default for ShrinkagePolicy {
    fn default() -> Self {
        Self {
            eps_abs: 1e-6,
            eps_rel: 1e-3,
        }
    }
}

impl ShrinkagePolicy {
    /// No regularization: the exact sample-covariance distance.
    pub const NONE: ShrinkagePolicy = ShrinkagePolicy {
        eps_abs: 0.0,
        eps_rel: 0.0,
    };

    pub fn epsilon(&self, trace: f64, d: usize) -> f64 {
        self.eps_abs.max(self.eps_rel * trace / d as f64)
    }
}

/// Non-negative Mahalanobis distance.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AnomalyScore(pub f64);

impl AnomalyScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDetector {
    mean: Vec<f64>,
    /// Row-major `d×d` sample covariance, without shrinkage.
    cov: Vec<f64>,
    eps: f64,
    /// Lower-triangular Cholesky factor of `cov + eps I`, row-major.
    factor: Vec<f64>,
}

/// Lower Cholesky factor of a symmetric positive definite row-major matrix.
pub fn cholesky(a: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let dot: f64 = (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum();
            let v = a[i * d + j] - dot;
            if i == j {
                // pivots lost to cancellation mean the matrix is singular
                if !(v > a[i * d + i].abs() * f64::EPSILON * d as f64) || !v.is_finite() {
                    return None;
                }
                l[i * d + i] = v.sqrt();
            } else {
                l[i * d + j] = v / l[j * d + j];
            }
        }
    }
    Some(l)
}

/// Sample mean and unbiased covariance of equally long, finite rows.
pub fn moments<R: AsRef<[f64]>>(features: &[R]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = features.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "Gaussian fit needs at least 2 feature vectors, got {n}"
        )));
    }
    let d = features[0].as_ref().len();
    if d == 0 {
        return Err(Error::InvalidInput("feature vectors are empty".into()));
    }
    for (i, f) in features.iter().enumerate() {
        let f = f.as_ref();
        if f.len() != d {
            return Err(Error::InvalidInput(format!(
                "feature row {i} has length {}, expected {d}",
                f.len()
            )));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("feature row {i} is not finite")));
        }
    }
    let mut mean = vec![0.0; d];
    for f in features {
        for (m, &v) in mean.iter_mut().zip(f.as_ref()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut cov = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for f in features {
        for ((c, &v), &m) in centered.iter_mut().zip(f.as_ref()).zip(&mean) {
            *c = v - m;
        }
        for i in 0..d {
            let ci = centered[i];
            for j in 0..=i {
                cov[i * d + j] += ci * centered[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in 0..=i {
            let v = cov[i * d + j] / denom;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    Ok((mean, cov))
}

impl GaussianDetector {
    /// Fits mean and unbiased covariance (divisor `n - 1`) of the rows.
    pub fn fit<R: AsRef<[f64]>>(features: &[R], policy: ShrinkagePolicy) -> Result<Self> {
        let (mean, cov) = moments(features)?;
        Self::from_moments(mean, cov, policy)
    }

    /// Like [`fit`](Self::fit) but keeps only the per-coordinate variances.
    pub fn fit_diagonal<R: AsRef<[f64]>>(features: &[R], policy: ShrinkagePolicy) -> Result<Self> {
        let (mean, cov) = moments(features)?;
        let d = mean.len();
        let mut diag = vec![0.0; d * d];
        for i in 0..d {
            diag[i * d + i] = cov[i * d + i];
        }
        Self::from_moments(mean, diag, policy)
    }

    /// Builds a detector from a mean and covariance, choosing `eps` from
    /// `policy`.
    pub fn from_moments(mean: Vec<f64>, cov: Vec<f64>, policy: ShrinkagePolicy) -> Result<Self> {
        let d = mean.len();
        let trace: f64 = (0..d).map(|i| cov[i * d + i]).sum();
        Self::with_epsilon(mean, cov, policy.epsilon(trace, d))
    }

    pub fn with_epsilon(mean: Vec<f64>, cov: Vec<f64>, eps: f64) -> Result<Self> {
        let d = mean.len();
        if cov.len() != d * d {
            return Err(Error::InvalidInput(format!(
                "covariance has {} entries for d = {d}",
                cov.len()
            )));
        }
        if mean.iter().chain(&cov).any(|v| !v.is_finite()) || !(eps >= 0.0) {
            return Err(Error::InvalidInput(
                "mean, covariance and eps must be finite".into(),
            ));
        }
        for i in 0..d {
            for j in 0..i {
                let (a, b) = (cov[i * d + j], cov[j * d + i]);
                if (a - b).abs() > 1e-6 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::InvalidInput(format!(
                        "covariance not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let mut shrunk = cov.clone();
        for i in 0..d {
            shrunk[i * d + i] += eps;
        }
        let factor = cholesky(&shrunk, d).ok_or_else(|| {
            Error::InsufficientData(format!(
                "covariance plus {eps:e} I is not positive definite; increase shrinkage or add samples"
            ))
        })?;
        Ok(Self {
            mean,
            cov,
            eps,
            factor,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &[f64] {
        &self.cov
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    pub fn factor(&self) -> &[f64] {
        &self.factor
    }

    /// Mahalanobis distance of `f` from the mean.
    pub fn score(&self, f: &[f64]) -> Result<AnomalyScore> {
        let d = self.dim();
        if f.len() != d {
            return Err(Error::InvalidInput(format!(
                "feature length {} does not match detector dimension {d}",
                f.len()
            )));
        }
        // forward substitution: L y = f - mu
        let mut y = vec![0.0; d];
        for i in 0..d {
            let row = &self.factor[i * d..i * d + i];
            let dot: f64 = row.iter().zip(&y).map(|(a, b)| a * b).sum();
            y[i] = (f[i] - self.mean[i] - dot) / self.factor[i * d + i];
        }
        Ok(AnomalyScore(y.iter().map(|v| v * v).sum::<f64>().sqrt()))
    }

    pub fn score_all<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<f64>> {
        rows.iter()
            .map(|r| self.score(r.as_ref()).map(AnomalyScore::value))
            .collect()
    }
}

pub const GDT_MAGIC: &[u8; 4] = b"GDT1";

/// `GDT1`: magic, `d` u32, `eps` f64, `mu` f64*d, `Sigma` f64*d*d row-major,
/// all little-endian.
pub fn encode_detector(det: &GaussianDetector) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * (det.dim() + det.cov.len()));
    out.extend_from_slice(GDT_MAGIC);
    out.extend_from_slice(&(det.dim() as u32).to_le_bytes());
    out.extend_from_slice(&det.eps.to_le_bytes());
    for v in det.mean.iter().chain(&det.cov) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_detector(bytes: &[u8]) -> Result<GaussianDetector> {
    let mut r = Reader::new(bytes, "GDT1");
    if r.take(4)? != GDT_MAGIC {
        return Err(Error::format("GDT1", "bad magic"));
    }
    let d = r.u32()? as usize;
    let eps = r.f64()?;
    let mean = r.f64s(d)?;
    let cov = r.f64s(
        d.checked_mul(d)
            .ok_or_else(|| Error::format("GDT1", "dimension overflows"))?,
    )?;
    r.finish()?;
    GaussianDetector::with_epsilon(mean, cov, eps).map_err(|e| Error::format("GDT1", e.to_string()))
}

/// Time bins of the raw-signal baseline.
pub const RAW_POOL_BINS: usize = 32;

/// Averages each channel over `RAW_POOL_BINS` equal time bins and flattens
/// channel-major to `RAW_POOL_BINS * K` values.
pub fn pool_raw(segment: &EegSegment) -> Vec<f64> {
    let l = segment.len();
    let bins = RAW_POOL_BINS.min(l);
    let mut out = Vec::with_capacity(bins * segment.channels());
    for row in segment.rows() {
        for b in 0..bins {
            let (lo, hi) = (b * l / bins, (b + 1) * l / bins);
            let sum: f64 = row[lo..hi].iter().map(|&v| v as f64).sum();
            out.push(sum / (hi - lo) as f64);
        }
    }
    out
}

/// Diagonal-covariance Gaussian over time-pooled raw signal, used as a
/// reference point for the learned features.
#[derive(Debug, Clone, PartialEq)]
pub struct RawBaseline {
    pub detector: GaussianDetector,
}

impl RawBaseline {
    pub fn fit(train: &Dataset) -> Result<Self> {
        Self::fit_with(train, ShrinkagePolicy::default())
    }

    pub fn fit_with(train: &Dataset, policy: ShrinkagePolicy) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::InsufficientData(
                "raw baseline needs training segments".into(),
            ));
        }
        let pooled: Vec<Vec<f64>> = train.segments.iter().map(pool_raw).collect();
        Ok(Self {
            detector: GaussianDetector::fit_diagonal(&pooled, policy)?,
        })
    }

    pub fn score(&self, segment: &EegSegment) -> Result<AnomalyScore> {
        self.detector.score(&pool_raw(segment))
    }
}
