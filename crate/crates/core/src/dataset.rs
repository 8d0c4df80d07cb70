// SPDX-License-Identifier: Apache-2.0

//! Segments, datasets, min/max normalization and recording segmentation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class label carried by a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Normal,
    Abnormal,
    SimAmplitude,
    SimFrequency,
}

impl Label {
    pub fn code(self) -> u8 {
        match self {
            Label::Normal => 0,
            Label::Abnormal => 1,
            Label::SimAmplitude => 2,
            Label::SimFrequency => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Label> {
        match code {
            0 => Some(Label::Normal),
            1 => Some(Label::Abnormal),
            2 => Some(Label::SimAmplitude),
            3 => Some(Label::SimFrequency),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Abnormal => "abnormal",
            Label::SimAmplitude => "sim_amplitude",
            Label::SimFrequency => "sim_frequency",
        }
    }

    pub fn from_name(name: &str) -> Option<Label> {
        [
            Label::Normal,
            Label::Abnormal,
            Label::SimAmplitude,
            Label::SimFrequency,
        ]
        .into_iter()
        .find(|l| l.name() == name)
    }

    /// Anything other than `Normal` counts as the positive class in evaluation.
    pub fn is_abnormal(self) -> bool {
        self != Label::Normal
    }
}

/// A K×L window of multichannel signal, stored row-major (one row per channel).
#[derive(Debug, Clone, PartialEq)]
pub struct EegSegment {
    data: Vec<f32>,
    channels: usize,
    length: usize,
    pub sample_rate: f32,
    pub label: Label,
    pub patient_id: String,
}

impl EegSegment {
    pub fn new(
        data: Vec<f32>,
        channels: usize,
        length: usize,
        sample_rate: f32,
        label: Label,
        patient_id: impl Into<String>,
    ) -> Result<Self> {
        if channels == 0 || length == 0 {
            return Err(Error::InvalidInput(format!(
                "segment shape {channels}x{length} has an empty dimension"
            )));
        }
        if data.len() != channels * length {
            return Err(Error::InvalidInput(format!(
                "segment buffer holds {} values, expected {channels}x{length}",
                data.len()
            )));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sample rate {sample_rate} must be positive"
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at flat index {pos}"
            )));
        }
        Ok(Self {
            data,
            channels,
            length,
            sample_rate,
            label,
            patient_id: patient_id.into(),
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, channel: usize) -> &[f32] {
        &self.data[channel * self.length..(channel + 1) * self.length]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.length)
    }

    pub fn get(&self, channel: usize, t: usize) -> f32 {
        self.data[channel * self.length + t]
    }

    /// Same metadata, new values. The caller guarantees the shape.
    pub(crate) fn with_data(&self, data: Vec<f32>, label: Label) -> EegSegment {
        debug_assert_eq!(data.len(), self.data.len());
        EegSegment {
            data,
            channels: self.channels,
            length: self.length,
            sample_rate: self.sample_rate,
            label,
            patient_id: self.patient_id.clone(),
        }
    }

    pub fn relabel(mut self, label: Label) -> EegSegment {
        self.label = label;
        self
    }
}

/// A labelled collection of equally shaped segments plus the fitted
/// normalization range.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub segments: Vec<EegSegment>,
    pub norm_min: f32,
    pub norm_max: f32,
    pub duration_s: f64,
}

impl Dataset {
    /// Builds an unnormalized dataset (range `[0, 1]` placeholder) after
    /// checking that all segments share shape and rate.
    pub fn new(segments: Vec<EegSegment>, duration_s: f64) -> Result<Self> {
        check_uniform_shape(&segments)?;
        Ok(Self {
            segments,
            norm_min: 0.0,
            norm_max: 1.0,
            duration_s,
        })
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// `(K, L)` of the segments, `None` when empty.
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.segments.first().map(|s| (s.channels(), s.len()))
    }

    pub fn count(&self, label: Label) -> usize {
        self.segments.iter().filter(|s| s.label == label).count()
    }

    pub fn subset(&self, ids: &[usize]) -> Dataset {
        Dataset {
            segments: ids.iter().map(|&i| self.segments[i].clone()).collect(),
            norm_min: self.norm_min,
            norm_max: self.norm_max,
            duration_s: self.duration_s,
        }
    }
}

pub(crate) fn check_uniform_shape(segments: &[EegSegment]) -> Result<()> {
    let Some(first) = segments.first() else {
        return Ok(());
    };
    for (i, s) in segments.iter().enumerate() {
        if s.channels() != first.channels() || s.len() != first.len() || s.sample_rate != first.sample_rate {
            return Err(Error::InvalidInput(format!(
                "segment {i} is {}x{} @ {} Hz, expected {}x{} @ {} Hz",
                s.channels(),
                s.len(),
                s.sample_rate,
                first.channels(),
                first.len(),
                first.sample_rate
            )));
        }
    }
    Ok(())
}

/// Number of samples per segment, which must be a positive integer.
pub fn segment_samples(sample_rate: f64, duration_s: f64) -> Result<usize> {
    let exact = sample_rate * duration_s;
    let rounded = exact.round();
    if !exact.is_finite() || rounded < 1.0 || (exact - rounded).abs() > 1e-9 * exact.max(1.0) {
        return Err(Error::Config(format!(
            "segment length {sample_rate} Hz x {duration_s} s = {exact} is not a positive integer"
        )));
    }
    Ok(rounded as usize)
}

/// Cuts a K×T recording (row-major) into consecutive non-overlapping
/// segments of `sample_rate * duration_s` samples. The tail that does not fill
/// a whole segment is dropped.
pub fn segment_recording(
    recording: &[f32],
    channels: usize,
    sample_rate: f64,
    duration_s: f64,
    label: Label,
    patient_id: &str,
) -> Result<Vec<EegSegment>> {
    if channels == 0 {
        return Err(Error::InvalidInput("recording has no channels".into()));
    }
    let seg_len = segment_samples(sample_rate, duration_s)?;
    if recording.len() % channels != 0 {
        return Err(Error::InvalidInput(format!(
            "recording of {} values is not divisible into {channels} channels",
            recording.len()
        )));
    }
    let total = recording.len() / channels;
    (0..total / seg_len)
        .map(|s| {
            let start = s * seg_len;
            let mut data = Vec::with_capacity(channels * seg_len);
            for row in recording.chunks_exact(total) {
                data.extend_from_slice(&row[start..start + seg_len]);
            }
            EegSegment::new(data, channels, seg_len, sample_rate as f32, label, patient_id)
        })
        .collect()
}

/// Global minimum and maximum over every value of the training segments.
pub fn fit_normalization(train: &[EegSegment]) -> Result<(f32, f32)> {
    let mut values = train.iter().flat_map(|s| s.data().iter().copied());
    let first = values
        .next()
        .ok_or_else(|| Error::InvalidInput("cannot fit normalization on no segments".into()))?;
    let (lo, hi) = values.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo >= hi {
        return Err(Error::DegenerateNormalization { value: lo });
    }
    Ok((lo, hi))
}

/// Maps `v` to `(v - min) / (max - min)`, clamped to `[0, 1]`.
pub fn normalize(segment: &EegSegment, norm_min: f32, norm_max: f32) -> EegSegment {
    assert!(norm_min < norm_max, "normalization range must be increasing");
    let span = norm_max - norm_min;
    let data = segment
        .data()
        .iter()
        .map(|&v| ((v - norm_min) / span).clamp(0.0, 1.0))
        .collect();
    segment.with_data(data, segment.label)
}

/// Normalizes every segment of `dataset` with the given range and records it.
pub fn normalize_dataset(dataset: &Dataset, norm_min: f32, norm_max: f32) -> Dataset {
    Dataset {
        segments: dataset
            .segments
            .iter()
            .map(|s| normalize(s, norm_min, norm_max))
            .collect(),
        norm_min,
        norm_max,
        duration_s: dataset.duration_s,
    }
}
