// SPDX-License-Identifier: Apache-2.0

//! Exhaustive length/crop/value checks of the three transforms against
//! integer-arithmetic and direct-interpolation oracles.

use eegad::augment::{
    make_amplitude_abnormal, make_higher_freq_abnormal, make_lower_freq_abnormal, AugmentConfig,
};
use eegad::{EegSegment, Error, Label, RandomSource};

pub const CHANNELS: usize = 2;

pub fn random_segment(k: usize, l: usize, seed: u64) -> EegSegment {
    let mut rng = RandomSource::new(seed);
    let data = (0..k * l).map(|_| rng.uniform(0.0, 1.0) as f32).collect();
    EegSegment::new(data, k, l, 128.0, Label::Normal, "p").unwrap()
}

/// Linear interpolation at position `num / den` of `row`, in f64.
fn interp(row: &[f32], num: usize, den: usize) -> f64 {
    let i0 = num / den;
    let frac = (num % den) as f64 / den as f64;
    let a = row[i0] as f64;
    if num % den == 0 {
        return a;
    }
    a + (row[i0 + 1] as f64 - a) * frac
}

/// Oracle row resampled to `m` points on `j (n-1)/(m-1)`.
fn oracle_resample(row: &[f32], m: usize) -> Vec<f64> {
    (0..m).map(|j| interp(row, j * (row.len() - 1), m - 1)).collect()
}

fn close(a: f32, b: f64) -> bool {
    (a as f64 - b).abs() <= 1e-6 * (1.0 + b.abs())
}

#[derive(Debug, Default, Clone, Copy)]
pub struct GridSummary {
    pub lower_cases: usize,
    pub higher_cases: usize,
    pub higher_rejected: usize,
    /// Points where `floor(omega' L) * ceil(1/omega') < L`.
    pub short_tilings: usize,
    pub amplitude_cases: usize,
}

/// `L in 4..=64`; omega in 1.00..=7.00, omega' in 0.01..=0.99 and alpha in
/// 1.00..=7.00 at step 0.01, every window width and a random start.
pub fn exhaustive_grid() -> Result<GridSummary, String> {
    let mut s = GridSummary::default();
    for l in 4..=64usize {
        let x = random_segment(CHANNELS, l, l as u64);
        for k in 100..=700usize {
            let omega = k as f64 / 100.0;
            let cfg = AugmentConfig {
                lowfreq_range: [omega, omega],
                ..AugmentConfig::default()
            };
            let mut rng = RandomSource::new((l * 1000 + k) as u64);
            let (y, rec) = make_lower_freq_abnormal(&x, &cfg, &mut rng).map_err(|e| e.to_string())?;
            let expect = k * l / 100;
            let (got, off) = (rec.warped_len.unwrap(), rec.crop_offset.unwrap());
            if got != expect {
                return Err(format!("L={l} omega={omega}: L' = {got}, expected {expect}"));
            }
            if off > expect - l || y.len() != l || y.channels() != CHANNELS {
                return Err(format!(
                    "L={l} omega={omega}: crop {off} / shape {}x{}",
                    y.channels(),
                    y.len()
                ));
            }
            for (c, row) in x.rows().enumerate() {
                let up = oracle_resample(row, expect);
                for j in 0..l {
                    if !close(y.get(c, j), up[off + j]) {
                        return Err(format!("L={l} omega={omega}: value mismatch at ({c}, {j})"));
                    }
                }
            }
            s.lower_cases += 1;
        }
        for k in 1..=99usize {
            let omega = k as f64 / 100.0;
            let cfg = AugmentConfig {
                highfreq_range: [omega, omega],
                ..AugmentConfig::default()
            };
            let mut rng = RandomSource::new((l * 1000 + k) as u64);
            let m = k * l / 100;
            let res = make_higher_freq_abnormal(&x, &cfg, &mut rng);
            if m < 2 {
                match res {
                    Err(Error::Config(_)) => {
                        s.higher_rejected += 1;
                        continue;
                    }
                    _ => return Err(format!("L={l} omega'={omega}: m = {m} must be rejected")),
                }
            }
            let (y, rec) = res.map_err(|e| e.to_string())?;
            let tiles = 100usize.div_ceil(k);
            let formula = m * tiles;
            if rec.warped_len != Some(formula) {
                return Err(format!(
                    "L={l} omega'={omega}: L'' = {:?}, expected {formula}",
                    rec.warped_len
                ));
            }
            let source = m * tiles.max(l.div_ceil(m));
            if formula < l {
                s.short_tilings += 1;
            } else if source != formula {
                return Err(format!(
                    "L={l} omega'={omega}: source {source} differs from L'' {formula}"
                ));
            }
            let off = rec.crop_offset.unwrap();
            if rec.source_len != Some(source) || off > source - l || y.len() != l {
                return Err(format!(
                    "L={l} omega'={omega}: crop {off} from {:?}",
                    rec.source_len
                ));
            }
            for (c, row) in x.rows().enumerate() {
                let short = oracle_resample(row, m);
                for j in 0..l {
                    if !close(y.get(c, j), short[(off + j) % m]) {
                        return Err(format!("L={l} omega'={omega}: value mismatch at ({c}, {j})"));
                    }
                }
            }
            s.higher_cases += 1;
        }
        for w in 2..=l {
            for k in (100..=700usize).step_by(7) {
                let alpha = k as f64 / 100.0;
                let cfg = AugmentConfig {
                    amp_range: [alpha, alpha],
                    window_range: (w, Some(w)),
                    ..AugmentConfig::default()
                };
                let mut rng = RandomSource::new((l * 100_000 + w * 1000 + k) as u64);
                let (y, rec) = make_amplitude_abnormal(&x, &cfg, &mut rng).map_err(|e| e.to_string())?;
                let start = rec.window_start.unwrap();
                if rec.window_width != Some(w) || start + w > l {
                    return Err(format!("L={l} w={w}: window {start}+{:?}", rec.window_width));
                }
                let a = alpha as f32;
                for c in 0..CHANNELS {
                    for j in 0..l {
                        let (before, after) = (x.get(c, j), y.get(c, j));
                        let ok = if (start..start + w).contains(&j) {
                            after == before * a
                        } else {
                            after.to_bits() == before.to_bits()
                        };
                        if !ok {
                            return Err(format!("L={l} w={w} alpha={alpha}: column {j} wrong"));
                        }
                    }
                }
                s.amplitude_cases += 1;
            }
        }
    }
    Ok(s)
}
