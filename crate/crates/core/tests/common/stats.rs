// SPDX-License-Identifier: Apache-2.0

//! Textbook reference implementations for the detector and the metrics.

use eegad::detector::{GaussianDetector, ShrinkagePolicy};
use eegad::eval::{auc, eer};
use eegad::RandomSource;

/// Gauss–Jordan inverse with partial pivoting.
pub fn invert(a: &[f64], d: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    let mut inv: Vec<f64> = (0..d * d)
        .map(|i| if i / d == i % d { 1.0 } else { 0.0 })
        .collect();
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&x, &y| m[x * d + col].abs().total_cmp(&m[y * d + col].abs()))
            .unwrap();
        for j in 0..d {
            m.swap(col * d + j, pivot * d + j);
            inv.swap(col * d + j, pivot * d + j);
        }
        let p = m[col * d + col];
        for j in 0..d {
            m[col * d + j] /= p;
            inv[col * d + j] /= p;
        }
        for r in (0..d).filter(|&r| r != col) {
            let f = m[r * d + col];
            for j in 0..d {
                m[r * d + j] -= f * m[col * d + j];
                inv[r * d + j] -= f * inv[col * d + j];
            }
        }
    }
    inv
}

/// `sqrt((x - mu)^T inv (x - mu))`.
pub fn mahalanobis(x: &[f64], mu: &[f64], inv: &[f64]) -> f64 {
    let d = x.len();
    let diff: Vec<f64> = x.iter().zip(mu).map(|(a, b)| a - b).collect();
    let mut q = 0.0;
    for i in 0..d {
        for j in 0..d {
            q += diff[i] * inv[i * d + j] * diff[j];
        }
    }
    q.sqrt()
}

/// `B B^T + 0.1·d·I` for a standard normal `B`: SPD with a moderate condition number.
pub fn random_spd(d: usize, rng: &mut RandomSource) -> Vec<f64> {
    let b: Vec<f64> = (0..d * d).map(|_| rng.normal()).collect();
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            a[i * d + j] = (0..d).map(|k| b[i * d + k] * b[j * d + k]).sum::<f64>();
        }
        a[i * d + i] += 0.1 * d as f64;
    }
    a
}

/// Largest relative score error against the explicit inverse over `cases`
/// random SPD covariances with `d` in `1..=16`.
pub fn explicit_inverse_error(cases: u64) -> f64 {
    let mut worst = 0.0f64;
    for case in 0..cases {
        let mut rng = RandomSource::new(1000 + case);
        let d = rng.uniform_int(1, 16);
        let cov = random_spd(d, &mut rng);
        let mean: Vec<f64> = (0..d).map(|_| rng.uniform(-3.0, 3.0)).collect();
        let det = GaussianDetector::with_epsilon(mean.clone(), cov.clone(), 0.0).unwrap();
        let inv = invert(&cov, d);
        for _ in 0..10 {
            let x: Vec<f64> = (0..d).map(|_| 3.0 * rng.normal()).collect();
            let want = mahalanobis(&x, &mean, &inv);
            let got = det.score(&x).unwrap().value();
            worst = worst.max((got - want).abs() / want.abs().max(1e-300));
        }
    }
    worst
}

/// Largest relative change of unshrunk scores when fit data and queries go
/// through the same random invertible affine map.
pub fn affine_invariance_error(cases: u64) -> f64 {
    let mut worst = 0.0f64;
    for case in 0..cases {
        let mut rng = RandomSource::new(5000 + case);
        let d = rng.uniform_int(1, 8);
        let n = 4 * d + 10;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.normal()).collect()).collect();
        // well-conditioned map: identity plus a small random perturbation
        let a: Vec<f64> = (0..d * d)
            .map(|i| if i / d == i % d { 1.5 } else { 0.0 } + 0.3 * rng.normal())
            .collect();
        let b: Vec<f64> = (0..d).map(|_| rng.uniform(-10.0, 10.0)).collect();
        let map = |x: &[f64]| -> Vec<f64> {
            (0..d)
                .map(|i| (0..d).map(|j| a[i * d + j] * x[j]).sum::<f64>() + b[i])
                .collect()
        };
        let mapped: Vec<Vec<f64>> = rows.iter().map(|r| map(r)).collect();
        let plain = GaussianDetector::fit(&rows, ShrinkagePolicy::NONE).unwrap();
        let moved = GaussianDetector::fit(&mapped, ShrinkagePolicy::NONE).unwrap();
        for _ in 0..10 {
            let x: Vec<f64> = (0..d).map(|_| 2.0 * rng.normal()).collect();
            let s0 = plain.score(&x).unwrap().value();
            let s1 = moved.score(&map(&x)).unwrap().value();
            worst = worst.max((s0 - s1).abs() / s0.max(1e-300));
        }
    }
    worst
}

/// Fraction of (abnormal, normal) pairs ranked correctly, ties counting half.
pub fn brute_auc(normals: &[f64], abnormals: &[f64]) -> f64 {
    let mut twice = 0u64;
    for &a in abnormals {
        for &n in normals {
            twice += if a > n {
                2
            } else if a == n {
                1
            } else {
                0
            };
        }
    }
    twice as f64 / (2 * normals.len() * abnormals.len()) as f64
}

/// Scores on a coarse integer grid, so ties are frequent.
pub fn tied_scores(rng: &mut RandomSource, n: usize, shift: f64) -> Vec<f64> {
    (0..n).map(|_| (rng.normal() * 4.0 + shift).round()).collect()
}

/// Number of cases (out of `cases`) where the fast AUC differs from brute force.
pub fn auc_mismatches(cases: u64) -> usize {
    (0..cases)
        .filter(|&case| {
            let mut rng = RandomSource::new(case);
            let na = rng.uniform_int(1, 200);
            let nn = rng.uniform_int(1, 200);
            let shift = rng.uniform(-3.0, 6.0);
            let normals = tied_scores(&mut rng, nn, 0.0);
            let abnormals = tied_scores(&mut rng, na, shift);
            auc(&normals, &abnormals).unwrap() != brute_auc(&normals, &abnormals)
        })
        .count()
}

/// Worst `|FPR - FNR| · min(n_a, n_n)` at the reported EER threshold over
/// `cases` tie-free random score sets; at most 1 when the bound holds.
pub fn eer_gap(cases: u64) -> f64 {
    let mut worst = 0.0f64;
    for case in 0..cases {
        let mut rng = RandomSource::new(90_000 + case);
        let na = rng.uniform_int(1, 200);
        let nn = rng.uniform_int(1, 200);
        let shift = rng.uniform(-2.0, 4.0);
        let normals: Vec<f64> = (0..nn).map(|_| rng.normal()).collect();
        let abnormals: Vec<f64> = (0..na).map(|_| rng.normal() + shift).collect();
        let t = eer(&normals, &abnormals).unwrap().threshold;
        let fpr = normals.iter().filter(|&&s| s >= t).count() as f64 / nn as f64;
        let fnr = abnormals.iter().filter(|&&s| s < t).count() as f64 / na as f64;
        worst = worst.max((fpr - fnr).abs() * na.min(nn) as f64);
    }
    worst
}
