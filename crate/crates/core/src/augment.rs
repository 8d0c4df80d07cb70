// SPDX-License-Identifier: Apache-2.0

//! Simulated amplitude and frequency anomalies used as pretext classes, and
//! assembly of labelled training batches.
//!
//! Amplitude: `w` consecutive columns of every channel are multiplied by
//! `alpha`. Lower frequency: rows are stretched to `floor(omega * L)` samples
//! by linear interpolation and an `L`-sample window is cropped. Higher
//! frequency: rows are shrunk to `m = floor(omega' * L)` samples, tiled
//! `ceil(1 / omega')` times and cropped back to `L`.

use serde::{Deserialize, Serialize};

use crate::dataset::{EegSegment, Label};
use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// Tolerance for floor/ceil of real products so that e.g. `0.29 * 100`
/// floors to 29 rather than 28.
const ROUNDING_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    /// `[alpha_l, alpha_h]`.
    pub amp_range: [f64; 2],
    /// `[w_l, w_h]` in samples; `None` as the upper bound means `L`.
    pub window_range: (usize, Option<usize>),
    /// `[omega_l, omega_h]`, both above 1.
    pub lowfreq_range: [f64; 2],
    /// `[omega'_l, omega'_h]`, inside (0, 1).
    pub highfreq_range: [f64; 2],
    /// Fraction of simulated abnormal samples swapped for untouched normals.
    pub fake_fraction: f64,
    /// Generate frequency-then-amplitude combinations instead of the two
    /// simple classes.
    pub combined_mode: bool,
    pub amplitude_class: bool,
    pub frequency_class: bool,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            amp_range: [2.0, 4.0],
            window_range: (4, None),
            lowfreq_range: [2.0, 4.0],
            highfreq_range: [0.1, 0.5],
            fake_fraction: 0.0,
            combined_mode: false,
            amplitude_class: true,
            frequency_class: true,
        }
    }
}

impl AugmentConfig {
    /// Upper window bound for segments of length `len`.
    pub fn window_max(&self, len: usize) -> usize {
        self.window_range.1.unwrap_or(len)
    }

    /// Checks the ranges against segments of length `len`.
    pub fn validate(&self, len: usize) -> Result<()> {
        let [a0, a1] = self.amp_range;
        if !(1.0 < a0 && a0 < a1) {
            return Err(Error::Config(format!(
                "amp_range [{a0}, {a1}] needs 1 < low < high"
            )));
        }
        let (w0, w1) = (self.window_range.0, self.window_max(len));
        if !(1 < w0 && w0 <= w1 && w1 <= len) {
            return Err(Error::Config(format!(
                "window_range [{w0}, {w1}] needs 1 < low <= high <= L = {len}"
            )));
        }
        let [f0, f1] = self.lowfreq_range;
        if !(1.0 < f0 && f0 < f1) {
            return Err(Error::Config(format!(
                "lowfreq_range [{f0}, {f1}] needs 1 < low < high"
            )));
        }
        let [h0, h1] = self.highfreq_range;
        if !(0.0 < h0 && h0 < h1 && h1 < 1.0) {
            return Err(Error::Config(format!(
                "highfreq_range [{h0}, {h1}] needs 0 < low < high < 1"
            )));
        }
        if floor_product(h0, len) < 2 {
            return Err(Error::Config(format!(
                "highfreq_range low {h0} shrinks L = {len} below 2 samples"
            )));
        }
        if !(0.0..=0.5).contains(&self.fake_fraction) {
            return Err(Error::Config(format!(
                "fake_fraction {} must lie in [0, 0.5]",
                self.fake_fraction
            )));
        }
        if !self.combined_mode && !self.amplitude_class && !self.frequency_class {
            return Err(Error::Config(
                "at least one simulated anomaly class must be enabled".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    None,
    Amplitude,
    LowerFrequency,
    HigherFrequency,
    Combined,
}

impl TransformKind {
    pub fn name(self) -> &'static str {
        match self {
            TransformKind::None => "none",
            TransformKind::Amplitude => "amplitude",
            TransformKind::LowerFrequency => "lower_frequency",
            TransformKind::HigherFrequency => "higher_frequency",
            TransformKind::Combined => "combined",
        }
    }
}

/// Audit record of the parameters drawn for one generated sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformRecord {
    pub kind: TransformKind,
    pub alpha: Option<f64>,
    /// `omega` for lower-frequency, `omega'` for higher-frequency warps.
    pub omega: Option<f64>,
    pub window_start: Option<usize>,
    pub window_width: Option<usize>,
    /// `L'` (lower) or the tiled length `L''` (higher).
    pub warped_len: Option<usize>,
    /// Length the `L` output columns are cropped from; equals `warped_len`
    /// except for higher-frequency warps with `L'' < L`, see [`tile_count`].
    pub source_len: Option<usize>,
    pub crop_offset: Option<usize>,
    /// True when the sample is an untouched normal carrying an abnormal class.
    pub fake: bool,
}

impl TransformRecord {
    fn empty(kind: TransformKind) -> Self {
        Self {
            kind,
            alpha: None,
            omega: None,
            window_start: None,
            window_width: None,
            warped_len: None,
            source_len: None,
            crop_offset: None,
            fake: false,
        }
    }
}

/// `floor(factor * len)`, tolerant to representation error in `factor`.
pub fn floor_product(factor: f64, len: usize) -> usize {
    (factor * len as f64 + ROUNDING_SLACK).floor().max(0.0) as usize
}

/// `ceil(1 / factor)`, tolerant to representation error in `factor`.
pub fn ceil_reciprocal(factor: f64) -> usize {
    (1.0 / factor - ROUNDING_SLACK).ceil() as usize
}

/// `L' = floor(omega * L)`.
pub fn stretched_len(omega: f64, len: usize) -> usize {
    floor_product(omega, len)
}

/// `L'' = floor(omega' L) * ceil(1/omega')`, the tiled length of a
/// higher-frequency warp.
pub fn tiled_len(omega: f64, len: usize) -> usize {
    floor_product(omega, len) * ceil_reciprocal(omega)
}

/// Tiles actually laid out for a higher-frequency warp: `ceil(1/omega')`, or
/// `ceil(L / m)` when `L''` falls short of `L` (e.g. `L = 10`,
/// `omega' = 0.35` gives `L'' = 9`), so a full window can always be cropped.
/// The two agree whenever `L'' >= L`.
pub fn tile_count(omega: f64, len: usize) -> usize {
    let m = floor_product(omega, len);
    if m == 0 {
        return 0;
    }
    ceil_reciprocal(omega).max(len.div_ceil(m))
}

/// Linear interpolation of `row` onto `m` points of the endpoint-aligned grid
/// `j * (n - 1) / (m - 1)`.
pub fn resample_linear(row: &[f32], m: usize) -> Vec<f32> {
    let n = row.len();
    debug_assert!(n >= 1 && m >= 2);
    if n == 1 {
        return vec![row[0]; m];
    }
    let den = m - 1;
    (0..m)
        .map(|j| {
            let num = j * (n - 1);
            let (i0, rem) = (num / den, num % den);
            if rem == 0 {
                row[i0]
            } else {
                let frac = rem as f64 / den as f64;
                let (a, b) = (row[i0] as f64, row[i0 + 1] as f64);
                (a + (b - a) * frac) as f32
            }
        })
        .collect()
}

/// Scales columns `[start, start + width)` of every channel by `alpha`.
pub fn scale_window(x: &EegSegment, alpha: f64, start: usize, width: usize) -> Result<EegSegment> {
    let len = x.len();
    if start + width > len {
        return Err(Error::InvalidInput(format!(
            "window [{start}, {}) exceeds segment length {len}",
            start + width
        )));
    }
    let a = alpha as f32;
    let mut data = x.data().to_vec();
    for row in data.chunks_exact_mut(len) {
        for v in &mut row[start..start + width] {
            *v *= a;
        }
    }
    Ok(x.with_data(data, Label::SimAmplitude))
}

/// Stretches each row to `floor(omega L)` samples and crops `L` from `offset`.
pub fn stretch_and_crop(x: &EegSegment, omega: f64, offset: usize) -> Result<(EegSegment, usize)> {
    let len = x.len();
    if len < 2 {
        return Err(Error::InvalidInput("frequency warps need L >= 2".into()));
    }
    let stretched = stretched_len(omega, len);
    if stretched < len || offset > stretched - len {
        return Err(Error::InvalidInput(format!(
            "crop offset {offset} invalid for stretched length {stretched} (L = {len})"
        )));
    }
    let mut data = Vec::with_capacity(x.data().len());
    for row in x.rows() {
        let up = resample_linear(row, stretched);
        data.extend_from_slice(&up[offset..offset + len]);
    }
    Ok((x.with_data(data, Label::SimFrequency), stretched))
}

/// Shrinks each row to `floor(omega' L)` samples, tiles it and crops `L`
/// from `offset`.
pub fn shrink_tile_and_crop(x: &EegSegment, omega: f64, offset: usize) -> Result<(EegSegment, usize)> {
    let len = x.len();
    let m = floor_product(omega, len);
    if m < 2 {
        return Err(Error::Config(format!(
            "higher-frequency factor {omega} shrinks L = {len} to {m} samples; need at least 2"
        )));
    }
    let tiles = tile_count(omega, len);
    let source = tiles * m;
    if offset > source - len {
        return Err(Error::InvalidInput(format!(
            "crop offset {offset} invalid for tiled length {source} (L = {len})"
        )));
    }
    let mut data = Vec::with_capacity(x.data().len());
    for row in x.rows() {
        let short = resample_linear(row, m);
        data.extend(
            short
                .iter()
                .cycle()
                .take(tiles * m)
                .skip(offset)
                .take(len)
                .copied(),
        );
    }
    Ok((x.with_data(data, Label::SimFrequency), tiled_len(omega, len)))
}

fn check_shape(x: &EegSegment, cfg: &AugmentConfig) -> Result<()> {
    if cfg.window_range.0 > x.len() {
        return Err(Error::Config(format!(
            "window lower bound {} exceeds L = {}",
            cfg.window_range.0,
            x.len()
        )));
    }
    Ok(())
}

/// Amplitude-abnormal sample: random `alpha`, width and start.
pub fn make_amplitude_abnormal(
    x: &EegSegment,
    cfg: &AugmentConfig,
    rng: &mut RandomSource,
) -> Result<(EegSegment, TransformRecord)> {
    check_shape(x, cfg)?;
    let len = x.len();
    let alpha = rng.uniform(cfg.amp_range[0], cfg.amp_range[1]);
    let width = rng.uniform_int(cfg.window_range.0, cfg.window_max(len).min(len));
    let start = rng.uniform_int(0, len - width);
    let out = scale_window(x, alpha, start, width)?;
    let mut rec = TransformRecord::empty(TransformKind::Amplitude);
    rec.alpha = Some(alpha);
    rec.window_start = Some(start);
    rec.window_width = Some(width);
    Ok((out, rec))
}

pub fn make_lower_freq_abnormal(
    x: &EegSegment,
    cfg: &AugmentConfig,
    rng: &mut RandomSource,
) -> Result<(EegSegment, TransformRecord)> {
    if x.len() < 2 {
        return Err(Error::InvalidInput("frequency warps need L >= 2".into()));
    }
    let omega = rng.uniform(cfg.lowfreq_range[0], cfg.lowfreq_range[1]);
    let stretched = stretched_len(omega, x.len());
    let offset = rng.uniform_int(0, stretched - x.len());
    let (out, stretched) = stretch_and_crop(x, omega, offset)?;
    let mut rec = TransformRecord::empty(TransformKind::LowerFrequency);
    rec.omega = Some(omega);
    rec.warped_len = Some(stretched);
    rec.source_len = Some(stretched);
    rec.crop_offset = Some(offset);
    Ok((out, rec))
}

pub fn make_higher_freq_abnormal(
    x: &EegSegment,
    cfg: &AugmentConfig,
    rng: &mut RandomSource,
) -> Result<(EegSegment, TransformRecord)> {
    let omega = rng.uniform(cfg.highfreq_range[0], cfg.highfreq_range[1]);
    let len = x.len();
    let m = floor_product(omega, len);
    if m < 2 {
        return Err(Error::Config(format!(
            "higher-frequency factor {omega} shrinks L = {len} to {m} samples; need at least 2"
        )));
    }
    let source = tile_count(omega, len) * m;
    let offset = rng.uniform_int(0, source - len);
    let (out, tiled) = shrink_tile_and_crop(x, omega, offset)?;
    let mut rec = TransformRecord::empty(TransformKind::HigherFrequency);
    rec.omega = Some(omega);
    rec.warped_len = Some(tiled);
    rec.source_len = Some(source);
    rec.crop_offset = Some(offset);
    Ok((out, rec))
}

/// A frequency warp (lower or higher on a fair coin) followed by an
/// amplitude window on the warped segment.
pub fn make_combined_abnormal(
    x: &EegSegment,
    cfg: &AugmentConfig,
    rng: &mut RandomSource,
) -> Result<(EegSegment, TransformRecord)> {
    if !cfg.combined_mode {
        return Err(Error::Config("combined transforms require combined_mode".into()));
    }
    let (warped, freq) = if rng.coin() {
        make_lower_freq_abnormal(x, cfg, rng)?
    } else {
        make_higher_freq_abnormal(x, cfg, rng)?
    };
    let (out, amp) = make_amplitude_abnormal(&warped, cfg, rng)?;
    let rec = TransformRecord {
        kind: TransformKind::Combined,
        alpha: amp.alpha,
        omega: freq.omega,
        window_start: amp.window_start,
        window_width: amp.window_width,
        warped_len: freq.warped_len,
        source_len: freq.source_len,
        crop_offset: freq.crop_offset,
        fake: false,
    };
    Ok((out, rec))
}

/// Pretext class indices of the 3-way classifier.
pub const CLASS_NORMAL: u8 = 0;
pub const CLASS_AMPLITUDE: u8 = 1;
pub const CLASS_FREQUENCY: u8 = 2;

/// A shuffled, labelled training batch.
#[derive(Debug, Clone)]
pub struct SslBatch {
    pub segments: Vec<EegSegment>,
    pub classes: Vec<u8>,
    pub records: Vec<TransformRecord>,
}

impl SslBatch {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for &c in &self.classes {
            counts[c as usize] += 1;
        }
        counts
    }
}

#[derive(Clone, Copy)]
enum Slot {
    Normal(usize),
    Amplitude(usize),
    Lower(usize),
    Higher(usize),
    Combined(usize),
}

/// Builds a batch from `B` normals: the normals (class 0), `B` amplitude
/// anomalies (class 1) and `B` frequency anomalies (class 2, `floor(B/2)`
/// lower and `ceil(B/2)` higher). Disabled classes are left out. In combined
/// mode the `2B` abnormal samples are all combined warps labelled class 1.
///
/// With `fake_fraction = p`, `floor(p * n_abnormal)` abnormal slots are
/// replaced by distinct untouched normals that keep the abnormal class.
pub fn make_ssl_batch(
    normals: &[EegSegment],
    cfg: &AugmentConfig,
    rng: &mut RandomSource,
) -> Result<SslBatch> {
    let b = normals.len();
    let first = normals
        .first()
        .ok_or_else(|| Error::InvalidInput("SSL batch needs at least one normal segment".into()))?;
    cfg.validate(first.len())?;

    let mut slots: Vec<Slot> = (0..b).map(Slot::Normal).collect();
    if cfg.combined_mode {
        slots.extend((0..2 * b).map(|i| Slot::Combined(i % b)));
    } else {
        if cfg.amplitude_class {
            slots.extend((0..b).map(Slot::Amplitude));
        }
        if cfg.frequency_class {
            let lower = b / 2;
            slots.extend((0..lower).map(Slot::Lower));
            slots.extend((lower..b).map(Slot::Higher));
        }
    }
    let n_abnormal = slots.len() - b;

    let fake_count = (cfg.fake_fraction * n_abnormal as f64 + ROUNDING_SLACK).floor() as usize;
    let fake_slots = rng.sample_indices(n_abnormal, fake_count);
    let fake_sources = rng.sample_indices(b, fake_count.min(b));
    let mut fake_of = vec![None; n_abnormal];
    for (k, &slot) in fake_slots.iter().enumerate() {
        fake_of[slot] = Some(fake_sources[k % fake_sources.len()]);
    }

    let batch_seed = RandomSource::new(rng.next_u64());
    let mut segments = Vec::with_capacity(slots.len());
    let mut classes = Vec::with_capacity(slots.len());
    let mut records = Vec::with_capacity(slots.len());
    for (i, slot) in slots.iter().enumerate() {
        let mut local = batch_seed.derive(i as u64);
        let (seg, class, rec) = match *slot {
            Slot::Normal(s) => (
                normals[s].clone(),
                CLASS_NORMAL,
                TransformRecord::empty(TransformKind::None),
            ),
            abnormal => {
                let class = match abnormal {
                    Slot::Amplitude(_) | Slot::Combined(_) => CLASS_AMPLITUDE,
                    _ => CLASS_FREQUENCY,
                };
                if let Some(src) = fake_of[i - b] {
                    let mut rec = TransformRecord::empty(TransformKind::None);
                    rec.fake = true;
                    (normals[src].clone(), class, rec)
                } else {
                    let (seg, rec) = match abnormal {
                        Slot::Amplitude(s) => make_amplitude_abnormal(&normals[s], cfg, &mut local)?,
                        Slot::Lower(s) => make_lower_freq_abnormal(&normals[s], cfg, &mut local)?,
                        Slot::Higher(s) => make_higher_freq_abnormal(&normals[s], cfg, &mut local)?,
                        Slot::Combined(s) => make_combined_abnormal(&normals[s], cfg, &mut local)?,
                        Slot::Normal(_) => unreachable!(),
                    };
                    (seg, class, rec)
                }
            }
        };
        segments.push(seg);
        classes.push(class);
        records.push(rec);
    }

    let mut order: Vec<usize> = (0..segments.len()).collect();
    rng.shuffle(&mut order);
    let mut seg_opt: Vec<Option<EegSegment>> = segments.into_iter().map(Some).collect();
    let segments = order
        .iter()
        .map(|&i| seg_opt[i].take().expect("each index once"))
        .collect();
    let classes = order.iter().map(|&i| classes[i]).collect();
    let records = order.iter().map(|&i| records[i].clone()).collect();
    Ok(SslBatch {
        segments,
        classes,
        records,
    })
}

/// CSV audit log of a batch, one row per sample.
pub fn records_csv(batch: &SslBatch) -> String {
    fn opt<T: ToString>(v: Option<T>) -> String {
        v.map(|v| v.to_string()).unwrap_or_default()
    }
    let mut out = String::from(
        "sample,class,kind,alpha,omega,window_start,window_width,warped_len,source_len,crop_offset,fake\n",
    );
    for (i, (class, r)) in batch.classes.iter().zip(&batch.records).enumerate() {
        out.push_str(&format!(
            "{i},{class},{},{},{},{},{},{},{},{},{}\n",
            r.kind.name(),
            opt(r.alpha),
            opt(r.omega),
            opt(r.window_start),
            opt(r.window_width),
            opt(r.warped_len),
            opt(r.source_len),
            opt(r.crop_offset),
            r.fake
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(values: &[f32]) -> EegSegment {
        EegSegment::new(values.to_vec(), 1, values.len(), 100.0, Label::Normal, "p").unwrap()
    }

    fn random_segment(k: usize, l: usize, seed: u64) -> EegSegment {
        let mut r = RandomSource::new(seed);
        let data = (0..k * l).map(|_| r.uniform(0.0, 1.0) as f32).collect();
        EegSegment::new(data, k, l, 128.0, Label::Normal, "p").unwrap()
    }

    #[test]
    fn amplitude_hand_example() {
        let out = scale_window(&row(&[0.1, 0.2, 0.3, 0.4]), 2.0, 1, 2).unwrap();
        assert_eq!(out.data(), &[0.1, 0.4, 0.6, 0.4]);
        assert_eq!(out.label, Label::SimAmplitude);
    }

    #[test]
    fn unit_alpha_is_identity() {
        let x = random_segment(3, 40, 1);
        let out = scale_window(&x, 1.0, 5, 20).unwrap();
        assert_eq!(out.data(), x.data());
    }

    #[test]
    fn amplitude_values_not_clamped() {
        let out = scale_window(&row(&[0.9, 1.0]), 3.0, 0, 2).unwrap();
        assert!(out.data().iter().all(|&v| v > 1.0));
    }

    #[test]
    fn lower_freq_hand_example() {
        let x = row(&[0.0, 3.0]);
        assert_eq!(resample_linear(x.data(), 4), vec![0.0, 1.0, 2.0, 3.0]);
        let (out, stretched) = stretch_and_crop(&x, 2.0, 1).unwrap();
        assert_eq!(stretched, 4);
        assert_eq!(out.data(), &[1.0, 2.0]);
    }

    #[test]
    fn unit_omega_is_identity() {
        let x = random_segment(2, 33, 2);
        let (out, stretched) = stretch_and_crop(&x, 1.0, 0).unwrap();
        assert_eq!(stretched, 33);
        assert_eq!(out.data(), x.data());
    }

    #[test]
    fn higher_freq_hand_example() {
        let x = row(&[0.0, 1.0, 2.0, 3.0]);
        let (out, tiled) = shrink_tile_and_crop(&x, 0.5, 0).unwrap();
        assert_eq!(tiled, 4);
        assert_eq!(out.data(), &[0.0, 3.0, 0.0, 3.0]);
    }

    #[test]
    fn tiled_length_formula() {
        assert_eq!((tiled_len(0.3, 10), tile_count(0.3, 10)), (12, 4));
        // 3 * 3 = 9 < 10: one more tile is laid out than the formula counts
        assert_eq!((tiled_len(0.35, 10), tile_count(0.35, 10)), (9, 4));
    }

    #[test]
    fn higher_freq_rejects_tiny_grid() {
        let x = row(&[0.0, 1.0, 2.0, 3.0]);
        assert!(matches!(shrink_tile_and_crop(&x, 0.3, 0), Err(Error::Config(_))));
    }

    #[test]
    fn combined_hand_example() {
        let x = row(&[0.0, 3.0]);
        let (warped, _) = stretch_and_crop(&x, 2.0, 1).unwrap();
        let out = scale_window(&warped, 2.0, 0, 1).unwrap();
        assert_eq!(out.data(), &[2.0, 2.0]);
    }

    #[test]
    fn combined_requires_mode() {
        let x = random_segment(2, 64, 3);
        let err = make_combined_abnormal(&x, &AugmentConfig::default(), &mut RandomSource::new(0));
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn random_transforms_preserve_shape() {
        let x = random_segment(4, 64, 4);
        let cfg = AugmentConfig {
            combined_mode: true,
            ..AugmentConfig::default()
        };
        let mut rng = RandomSource::new(11);
        for _ in 0..1000 {
            for f in [
                make_amplitude_abnormal,
                make_lower_freq_abnormal,
                make_higher_freq_abnormal,
                make_combined_abnormal,
            ] {
                let (out, _) = f(&x, &cfg, &mut rng).unwrap();
                assert_eq!((out.channels(), out.len()), (4, 64));
            }
        }
    }

    #[test]
    fn window_wider_than_segment_is_config_error() {
        let x = random_segment(1, 3, 5);
        let err = make_amplitude_abnormal(&x, &AugmentConfig::default(), &mut RandomSource::new(0));
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn batch_composition() {
        let normals: Vec<_> = (0..64).map(|i| random_segment(2, 64, i)).collect();
        let cfg = AugmentConfig::default();
        let batch = make_ssl_batch(&normals, &cfg, &mut RandomSource::new(1)).unwrap();
        assert_eq!(batch.len(), 192);
        assert_eq!(batch.class_counts(), [64, 64, 64]);
        let lower = batch
            .records
            .iter()
            .filter(|r| r.kind == TransformKind::LowerFrequency)
            .count();
        let higher = batch
            .records
            .iter()
            .filter(|r| r.kind == TransformKind::HigherFrequency)
            .count();
        assert_eq!((lower, higher), (32, 32));

        let one = make_ssl_batch(&normals[..1], &cfg, &mut RandomSource::new(1)).unwrap();
        assert_eq!(one.class_counts(), [1, 1, 1]);
        // odd split goes to higher
        let odd = make_ssl_batch(&normals[..3], &cfg, &mut RandomSource::new(2)).unwrap();
        let higher = odd
            .records
            .iter()
            .filter(|r| r.kind == TransformKind::HigherFrequency)
            .count();
        assert_eq!(higher, 2);
    }

    #[test]
    fn fake_replacements() {
        let normals: Vec<_> = (0..64).map(|i| random_segment(2, 64, i)).collect();
        let none = make_ssl_batch(&normals, &AugmentConfig::default(), &mut RandomSource::new(1)).unwrap();
        assert_eq!(none.records.iter().filter(|r| r.fake).count(), 0);

        let cfg = AugmentConfig {
            fake_fraction: 0.10,
            ..AugmentConfig::default()
        };
        let batch = make_ssl_batch(&normals, &cfg, &mut RandomSource::new(1)).unwrap();
        let fakes: Vec<usize> = (0..batch.len()).filter(|&i| batch.records[i].fake).collect();
        assert_eq!(fakes.len(), 12);
        for &i in &fakes {
            assert_ne!(batch.classes[i], CLASS_NORMAL);
            assert!(normals.iter().any(|n| n.data() == batch.segments[i].data()));
        }
        let mut sources: Vec<&[f32]> = fakes.iter().map(|&i| batch.segments[i].data()).collect();
        sources.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sources.dedup();
        assert_eq!(sources.len(), 12);
    }

    #[test]
    fn ablation_batches() {
        let normals: Vec<_> = (0..8).map(|i| random_segment(2, 64, i)).collect();
        let amp_only = AugmentConfig {
            frequency_class: false,
            ..AugmentConfig::default()
        };
        let b = make_ssl_batch(&normals, &amp_only, &mut RandomSource::new(0)).unwrap();
        assert_eq!(b.class_counts(), [8, 8, 0]);
        let combined = AugmentConfig {
            combined_mode: true,
            ..AugmentConfig::default()
        };
        let b = make_ssl_batch(&normals, &combined, &mut RandomSource::new(0)).unwrap();
        assert_eq!(b.class_counts(), [8, 16, 0]);
        assert!(b
            .records
            .iter()
            .filter(|r| !matches!(r.kind, TransformKind::None))
            .all(|r| r.kind == TransformKind::Combined));
    }

    #[test]
    fn empty_batch_is_error() {
        let err = make_ssl_batch(&[], &AugmentConfig::default(), &mut RandomSource::new(0));
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn batch_is_deterministic() {
        let normals: Vec<_> = (0..16).map(|i| random_segment(2, 64, i)).collect();
        let cfg = AugmentConfig::default();
        let a = make_ssl_batch(&normals, &cfg, &mut RandomSource::new(9)).unwrap();
        let b = make_ssl_batch(&normals, &cfg, &mut RandomSource::new(9)).unwrap();
        assert_eq!(a.classes, b.classes);
        assert_eq!(records_csv(&a), records_csv(&b));
        for (x, y) in a.segments.iter().zip(&b.segments) {
            assert_eq!(x.data(), y.data());
        }
    }
}
