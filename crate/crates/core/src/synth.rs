// SPDX-License-Identifier: Apache-2.0

//! Synthetic EEG-like recordings and injected evaluation anomalies.
//!
//! A channel is a sum of sinusoids with frequencies drawn uniformly from a
//! band, amplitudes falling off as `1/f^gamma`, an optional per-channel gain
//! and white Gaussian noise. Evaluation anomalies are spike-and-slow-wave (or
//! triphasic-like) bursts added on top of a random window of every channel.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dataset::{segment_recording, segment_samples, Dataset, EegSegment, Label};
use crate::error::{Error, Result};
use crate::rng::RandomSource;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub channels: usize,
    pub sample_rate: f64,
    /// Length of one generated recording in seconds.
    pub duration_s: f64,
    pub n_oscillators: usize,
    pub freq_band: [f64; 2],
    /// Noise standard deviation relative to the channel's noiseless RMS.
    pub noise_std: f64,
    /// Exponent `gamma` of the `1/f^gamma` amplitude law.
    pub amplitude_decay: f64,
    /// Per-channel gain, log-uniform in this range; models amplitude
    /// differences between electrodes and subjects.
    pub channel_gain_range: [f64; 2],
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            channels: 4,
            sample_rate: 128.0,
            duration_s: 20.0,
            n_oscillators: 8,
            freq_band: [0.5, 30.0],
            noise_std: 0.05,
            amplitude_decay: 1.0,
            channel_gain_range: [0.25, 4.0],
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.freq_band;
        if self.channels == 0 {
            return Err(Error::Config("synth.channels must be positive".into()));
        }
        if !(self.sample_rate > 0.0 && self.duration_s > 0.0) {
            return Err(Error::Config(
                "synth sample_rate and duration_s must be positive".into(),
            ));
        }
        if !(lo > 0.0 && lo < hi && hi < self.sample_rate / 2.0) {
            return Err(Error::Config(format!(
                "synth.freq_band [{lo}, {hi}] must lie inside (0, {})",
                self.sample_rate / 2.0
            )));
        }
        if self.n_oscillators == 0 {
            return Err(Error::Config("synth.n_oscillators must be at least 1".into()));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::Config("synth.noise_std must be non-negative".into()));
        }
        let [g0, g1] = self.channel_gain_range;
        if !(g0 > 0.0 && g0 <= g1) {
            return Err(Error::Config(
                "synth.channel_gain_range must be positive and ordered".into(),
            ));
        }
        Ok(())
    }

    /// Samples per recording (`sample_rate * duration_s`, rounded down).
    pub fn samples(&self) -> usize {
        (self.sample_rate * self.duration_s + 1e-9).floor() as usize
    }
}

/// One sinusoidal component `amplitude * sin(2 pi freq t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oscillator {
    pub freq: f64,
    pub amplitude: f64,
    pub phase: f64,
}

/// Evaluates a sum of oscillators at `samples` points spaced `1/sample_rate`.
pub fn oscillator_sum(oscillators: &[Oscillator], sample_rate: f64, samples: usize) -> Vec<f64> {
    (0..samples)
        .map(|n| {
            let t = n as f64 / sample_rate;
            oscillators
                .iter()
                .map(|o| o.amplitude * (2.0 * PI * o.freq * t + o.phase).sin())
                .sum()
        })
        .collect()
}

/// Draws the oscillators of one channel.
pub fn sample_oscillators(cfg: &SynthConfig, rng: &mut RandomSource) -> Vec<Oscillator> {
    let [lo, hi] = cfg.freq_band;
    let [g0, g1] = cfg.channel_gain_range;
    let gain = rng.uniform(g0.ln(), g1.ln()).exp();
    (0..cfg.n_oscillators)
        .map(|_| {
            let freq = rng.uniform(lo, hi);
            let phase = rng.uniform(0.0, 2.0 * PI);
            Oscillator {
                freq,
                amplitude: gain / freq.powf(cfg.amplitude_decay),
                phase,
            }
        })
        .collect()
}

fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

/// A K×T normal recording, row-major.
pub fn gen_normal_recording(cfg: &SynthConfig, rng: &mut RandomSource) -> Result<Vec<f32>> {
    cfg.validate()?;
    let samples = cfg.samples();
    let mut out = Vec::with_capacity(cfg.channels * samples);
    for _ in 0..cfg.channels {
        let osc = sample_oscillators(cfg, rng);
        let mut row = oscillator_sum(&osc, cfg.sample_rate, samples);
        if cfg.noise_std > 0.0 {
            let sigma = cfg.noise_std * rms(&row);
            for v in &mut row {
                *v += sigma * rng.normal();
            }
        }
        out.extend(row.into_iter().map(|v| v as f32));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    SpikeWave,
    TriphasicLike,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalAnomalySpec {
    pub kind: AnomalyKind,
    pub burst_freq: f64,
    pub burst_duration_s: f64,
    /// Burst strength in units of channel RMS; the added waveform has RMS
    /// `(amplitude_gain - 1) * channel_rms`.
    pub amplitude_gain: f64,
    /// Relative weight of the sharp component in each cycle.
    pub spike_weight: f64,
}

impl Default for EvalAnomalySpec {
    fn default() -> Self {
        Self {
            kind: AnomalyKind::SpikeWave,
            burst_freq: 3.0,
            burst_duration_s: 1.0,
            amplitude_gain: 3.0,
            spike_weight: 1.0,
        }
    }
}

impl EvalAnomalySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.burst_freq > 0.0 && self.burst_duration_s > 0.0) {
            return Err(Error::Config(
                "anomaly burst_freq and burst_duration_s must be positive".into(),
            ));
        }
        if !(self.amplitude_gain >= 1.0) {
            return Err(Error::Config("anomaly amplitude_gain must be at least 1".into()));
        }
        if !(self.spike_weight >= 0.0) {
            return Err(Error::Config("anomaly spike_weight must be non-negative".into()));
        }
        Ok(())
    }
}

fn bump(u: f64, center: f64, width: f64) -> f64 {
    let z = (u - center) / width;
    (-0.5 * z * z).exp()
}

/// One cycle of the burst template at phase `u` in `[0, 1)`, before RMS
/// normalization.
fn template(kind: AnomalyKind, spike_weight: f64, u: f64) -> f64 {
    match kind {
        AnomalyKind::SpikeWave => {
            // sharp spike near the start of the cycle, then a slow negative half-sine
            let spike = bump(u, 0.08, 0.025);
            let slow = if u >= 0.2 {
                -0.6 * (PI * (u - 0.2) / 0.8).sin()
            } else {
                0.0
            };
            spike_weight * spike + slow
        }
        AnomalyKind::TriphasicLike => {
            spike_weight * (-0.35 * bump(u, 0.12, 0.04) + bump(u, 0.3, 0.06)) - 0.55 * bump(u, 0.55, 0.12)
        }
    }
}

/// Unit-RMS burst waveform of `samples` points.
pub fn burst_waveform(spec: &EvalAnomalySpec, sample_rate: f64, samples: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..samples)
        .map(|n| {
            let cycles = n as f64 * spec.burst_freq / sample_rate;
            template(spec.kind, spec.spike_weight, cycles.fract())
        })
        .collect();
    let r = rms(&raw);
    if r == 0.0 {
        return raw;
    }
    raw.into_iter().map(|v| v / r).collect()
}

/// Where an evaluation anomaly was placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BurstPlacement {
    pub start: usize,
    pub width: usize,
}

/// Adds a burst to a random window of all channels of a K×T recording.
pub fn inject_eval_anomaly(
    recording: &[f32],
    channels: usize,
    sample_rate: f64,
    spec: &EvalAnomalySpec,
    rng: &mut RandomSource,
) -> Result<(Vec<f32>, BurstPlacement)> {
    spec.validate()?;
    if channels == 0 || recording.len() % channels != 0 {
        return Err(Error::InvalidInput(
            "recording shape does not match channel count".into(),
        ));
    }
    let total = recording.len() / channels;
    let width = (spec.burst_duration_s * sample_rate).round() as usize;
    if width == 0 || width > total {
        return Err(Error::InvalidInput(format!(
            "burst of {width} samples does not fit a recording of {total}"
        )));
    }
    let start = rng.uniform_int(0, total - width);
    let wave = burst_waveform(spec, sample_rate, width);
    let scale = spec.amplitude_gain - 1.0;
    let mut out = recording.to_vec();
    for row in out.chunks_exact_mut(total) {
        let row_rms = (row.iter().map(|&v| (v as f64).powi(2)).sum::<f64>() / total as f64).sqrt();
        if scale == 0.0 {
            continue;
        }
        for (v, w) in row[start..start + width].iter_mut().zip(&wave) {
            *v = (*v as f64 + scale * row_rms * w) as f32;
        }
    }
    Ok((out, BurstPlacement { start, width }))
}

/// How many segments of each kind to generate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetPlan {
    pub n_normals: usize,
    pub n_abnormals: usize,
    /// Recordings are assigned uniformly at random to this many patients.
    pub n_patients: usize,
    pub segment_duration_s: f64,
    pub anomaly: EvalAnomalySpec,
}

impl Default for DatasetPlan {
    fn default() -> Self {
        Self {
            n_normals: 2300,
            n_abnormals: 300,
            n_patients: 8,
            segment_duration_s: 2.0,
            anomaly: EvalAnomalySpec::default(),
        }
    }
}

impl DatasetPlan {
    pub fn validate(&self, cfg: &SynthConfig) -> Result<()> {
        self.anomaly.validate()?;
        if self.n_patients == 0 {
            return Err(Error::Config("dataset.n_patients must be positive".into()));
        }
        segment_samples(cfg.sample_rate, self.segment_duration_s)?;
        if self.segment_duration_s > cfg.duration_s {
            return Err(Error::Config(
                "segment_duration_s exceeds the recording duration".into(),
            ));
        }
        if self.anomaly.burst_duration_s > self.segment_duration_s {
            return Err(Error::Config("anomaly burst is longer than a segment".into()));
        }
        Ok(())
    }
}

fn patient_name(i: usize) -> String {
    format!("p{i:03}")
}

/// Normal segments cut from whole recordings, followed by abnormal segments
/// that each carry one injected burst. Normal recordings draw from
/// `derive(i)` of one stream and abnormal segments from another, so adding
/// segments of one kind never changes the other.
pub fn generate_dataset(cfg: &SynthConfig, plan: &DatasetPlan, rng: &mut RandomSource) -> Result<Dataset> {
    cfg.validate()?;
    plan.validate(cfg)?;
    let normal_stream = RandomSource::new(rng.next_u64());
    let abnormal_stream = RandomSource::new(rng.next_u64());
    let rate = cfg.sample_rate;
    let mut segments = Vec::with_capacity(plan.n_normals + plan.n_abnormals);
    let mut recording = 0u64;
    while segments.len() < plan.n_normals {
        let mut r = normal_stream.derive(recording);
        let patient = patient_name(r.uniform_int(0, plan.n_patients - 1));
        let data = gen_normal_recording(cfg, &mut r)?;
        let cut = segment_recording(
            &data,
            cfg.channels,
            rate,
            plan.segment_duration_s,
            Label::Normal,
            &patient,
        )?;
        let need = plan.n_normals - segments.len();
        segments.extend(cut.into_iter().take(need));
        recording += 1;
    }
    let short = SynthConfig {
        duration_s: plan.segment_duration_s,
        ..cfg.clone()
    };
    for i in 0..plan.n_abnormals {
        let mut r = abnormal_stream.derive(i as u64);
        let patient = patient_name(r.uniform_int(0, plan.n_patients - 1));
        let base = gen_normal_recording(&short, &mut r)?;
        let (data, _) = inject_eval_anomaly(&base, cfg.channels, rate, &plan.anomaly, &mut r)?;
        let len = data.len() / cfg.channels;
        segments.push(EegSegment::new(
            data,
            cfg.channels,
            len,
            rate as f32,
            Label::Abnormal,
            patient,
        )?);
    }
    Dataset::new(segments, plan.segment_duration_s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_forced_oscillator() {
        let osc = [Oscillator {
            freq: 1.0,
            amplitude: 1.0,
            phase: 0.0,
        }];
        let row = oscillator_sum(&osc, 4.0, 4);
        let expected = [0.0, 1.0, 0.0, -1.0];
        for (a, b) in row.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_and_determinism() {
        let cfg = SynthConfig {
            channels: 4,
            sample_rate: 128.0,
            duration_s: 10.0,
            ..SynthConfig::default()
        };
        let a = gen_normal_recording(&cfg, &mut RandomSource::new(3)).unwrap();
        let b = gen_normal_recording(&cfg, &mut RandomSource::new(3)).unwrap();
        assert_eq!(a.len(), 4 * 1280);
        assert_eq!(a, b);
        let c = gen_normal_recording(&cfg, &mut RandomSource::new(4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_configs() {
        let cfg = SynthConfig {
            freq_band: [0.5, 64.0],
            ..SynthConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let cfg = SynthConfig {
            n_oscillators: 0,
            ..SynthConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SynthConfig {
            noise_std: -0.1,
            ..SynthConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unit_gain_injection_is_identity() {
        let cfg = SynthConfig {
            duration_s: 2.0,
            ..SynthConfig::default()
        };
        let rec = gen_normal_recording(&cfg, &mut RandomSource::new(1)).unwrap();
        let spec = EvalAnomalySpec {
            amplitude_gain: 1.0,
            spike_weight: 0.0,
            ..EvalAnomalySpec::default()
        };
        let (out, _) = inject_eval_anomaly(&rec, 4, 128.0, &spec, &mut RandomSource::new(2)).unwrap();
        assert_eq!(out, rec);
    }

    #[test]
    fn injection_touches_only_the_window() {
        let cfg = SynthConfig {
            duration_s: 4.0,
            ..SynthConfig::default()
        };
        let rec = gen_normal_recording(&cfg, &mut RandomSource::new(5)).unwrap();
        let spec = EvalAnomalySpec {
            kind: AnomalyKind::TriphasicLike,
            ..EvalAnomalySpec::default()
        };
        let (out, place) = inject_eval_anomaly(&rec, 4, 128.0, &spec, &mut RandomSource::new(6)).unwrap();
        assert_eq!(out.len(), rec.len());
        let t = rec.len() / 4;
        for c in 0..4 {
            for i in 0..t {
                let inside = (place.start..place.start + place.width).contains(&i);
                if !inside {
                    assert_eq!(out[c * t + i], rec[c * t + i]);
                }
            }
        }
    }

    #[test]
    fn burst_longer_than_recording_fails() {
        let spec = EvalAnomalySpec {
            burst_duration_s: 3.0,
            ..EvalAnomalySpec::default()
        };
        let rec = vec![0.0f32; 2 * 256];
        let err = inject_eval_anomaly(&rec, 2, 128.0, &spec, &mut RandomSource::new(0)).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn waveform_has_unit_rms() {
        for kind in [AnomalyKind::SpikeWave, AnomalyKind::TriphasicLike] {
            let spec = EvalAnomalySpec {
                kind,
                ..EvalAnomalySpec::default()
            };
            let w = burst_waveform(&spec, 128.0, 128);
            assert!((rms(&w) - 1.0).abs() < 1e-12);
        }
    }
}
