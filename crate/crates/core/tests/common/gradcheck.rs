// SPDX-License-Identifier: Apache-2.0

//! Central finite differences in f64 against reverse-mode gradients.

use eegad::nn::{ArchConfig, ConvSpec, Graph, Mode, NodeId, Tensor, TwoBranchModel};
use eegad::RandomSource;

/// Large enough that rounding in the loss (~1e-16 / STEP) stays well below
/// the smallest gradients compared, small enough that truncation is ~STEP².
pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;

/// `|a - n| / max(|a|, |n|, floor)`; the floor keeps gradients that are zero
/// up to rounding from dominating.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

pub fn random(shape: &[usize], rng: &mut RandomSource) -> Tensor<f64> {
    let n = shape.iter().product();
    // keep magnitudes away from ReLU kinks
    let data = (0..n)
        .map(|_| {
            let v = rng.normal();
            if v.abs() < 0.05 {
                v.signum() * 0.05 + v
            } else {
                v
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), data)
}

/// A layer under test: builds its output from the input leaves.
pub type Build = dyn Fn(&mut Graph<f64>, &[NodeId]) -> NodeId;

/// Loss `sum(r * layer(inputs))` with fixed random `r`; returns the largest
/// relative error over every element of every input.
pub fn check_layer(inputs: &[Tensor<f64>], build: &Build, seed: u64) -> f64 {
    let loss_of = |vals: &[Tensor<f64>], track: bool| -> (f64, Vec<Vec<f64>>) {
        let mut g = Graph::new();
        let leaves: Vec<NodeId> = vals.iter().map(|t| g.leaf(t.clone(), track)).collect();
        let out = build(&mut g, &leaves);
        let shape = g.value(out).shape().to_vec();
        let weights = random(&shape, &mut RandomSource::new(seed));
        let r = g.leaf(weights, false);
        let prod = g.mul(out, r).unwrap();
        let loss = g.sum(prod).unwrap();
        let value = g.value(loss).data()[0];
        if !track {
            return (value, Vec::new());
        }
        let grads = g.backward(loss).unwrap();
        let per_input = leaves
            .iter()
            .zip(vals)
            .map(|(&l, t)| grads.get(l).map_or_else(|| vec![0.0; t.len()], <[f64]>::to_vec))
            .collect();
        (value, per_input)
    };
    let (_, analytic) = loss_of(inputs, true);
    let mut worst = 0.0f64;
    for (i, input) in inputs.iter().enumerate() {
        for j in 0..input.len() {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[j] += STEP;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[j] -= STEP;
            let numeric = (loss_of(&plus, false).0 - loss_of(&minus, false).0) / (2.0 * STEP);
            worst = worst.max(relative_error(analytic[i][j], numeric));
        }
    }
    worst
}

/// `(name, max relative error)` for every differentiable op.
pub fn layer_errors() -> Vec<(&'static str, f64)> {
    let mut rng = RandomSource::new(11);
    let mut out = Vec::new();
    let x4 = random(&[3, 2, 2, 9], &mut rng);
    let spec = ConvSpec {
        kh: 2,
        kw: 3,
        stride_w: 2,
        pad_w: 1,
    };
    out.push((
        "conv2d",
        check_layer(
            &[x4.clone(), random(&[4, 3, 2, 3], &mut rng)],
            &move |g, l| g.conv2d(l[0], l[1], spec).unwrap(),
            1,
        ),
    ));
    let one_by_k = ConvSpec {
        kh: 1,
        kw: 7,
        stride_w: 1,
        pad_w: 3,
    };
    out.push((
        "conv2d_1x7",
        check_layer(
            &[x4.clone(), random(&[2, 3, 1, 7], &mut rng)],
            &move |g, l| g.conv2d(l[0], l[1], one_by_k).unwrap(),
            2,
        ),
    ));
    out.push((
        "batch_norm_train",
        check_layer(
            &[x4.clone(), random(&[3], &mut rng), random(&[3], &mut rng)],
            &|g, l| g.batch_norm(l[0], l[1], l[2], 1e-5).unwrap().0,
            3,
        ),
    ));
    let (mean, var) = (vec![0.1, -0.2, 0.3], vec![0.5, 1.5, 2.0]);
    out.push((
        "batch_norm_frozen",
        check_layer(
            &[x4.clone(), random(&[3], &mut rng), random(&[3], &mut rng)],
            &move |g, l| g.batch_norm_frozen(l[0], l[1], l[2], &mean, &var, 1e-5).unwrap(),
            4,
        ),
    ));
    out.push((
        "relu",
        check_layer(std::slice::from_ref(&x4), &|g, l| g.relu(l[0]).unwrap(), 5),
    ));
    let y4 = random(&[3, 2, 2, 9], &mut rng);
    out.push((
        "add",
        check_layer(&[x4.clone(), y4.clone()], &|g, l| g.add(l[0], l[1]).unwrap(), 6),
    ));
    out.push((
        "mul",
        check_layer(&[x4.clone(), y4], &|g, l| g.mul(l[0], l[1]).unwrap(), 7),
    ));
    out.push((
        "global_avg_pool",
        check_layer(
            std::slice::from_ref(&x4),
            &|g, l| g.global_avg_pool(l[0]).unwrap(),
            8,
        ),
    ));
    out.push((
        "concat",
        check_layer(
            &[random(&[4, 3], &mut rng), random(&[4, 2], &mut rng)],
            &|g, l| g.concat(l[0], l[1]).unwrap(),
            9,
        ),
    ));
    out.push((
        "linear",
        check_layer(
            &[
                random(&[4, 5], &mut rng),
                random(&[3, 5], &mut rng),
                random(&[3], &mut rng),
            ],
            &|g, l| g.linear(l[0], l[1], l[2]).unwrap(),
            10,
        ),
    ));
    out.push((
        "cross_entropy",
        check_layer(
            &[random(&[5, 3], &mut rng)],
            &|g, l| g.cross_entropy(l[0], &[0, 2, 1, 1, 0]).unwrap(),
            12,
        ),
    ));
    out
}

/// Every parameter element of a tiny two-branch model (f64, training-mode
/// batch norm) under cross-entropy on a small batch.
pub fn tiny_model_error(k: usize, l: usize, batch: usize) -> (usize, f64) {
    let arch = ArchConfig::tiny(k, l);
    let model = TwoBranchModel::<f32>::build(&arch, &mut RandomSource::new(21))
        .unwrap()
        .cast::<f64>();
    let mut rng = RandomSource::new(22);
    let input = random(&[batch, 1, k, l], &mut rng);
    let labels: Vec<usize> = (0..batch).map(|i| i % 3).collect();

    let loss_of = |m: &TwoBranchModel<f64>, track: bool| -> (f64, Vec<Vec<f64>>) {
        let mut m = m.clone();
        let mut g = Graph::new();
        let pass = m.forward(&mut g, &input, Mode::Train, track).unwrap();
        let loss = g.cross_entropy(pass.logits, &labels).unwrap();
        let value = g.value(loss).data()[0];
        if !track {
            return (value, Vec::new());
        }
        let grads = g.backward(loss).unwrap();
        (value, m.collect_grads(&grads, &pass))
    };
    let (_, analytic) = loss_of(&model, true);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for p in 0..model.params.len() {
        for j in 0..model.params[p].value.len() {
            let mut plus = model.clone();
            plus.params[p].value.data_mut()[j] += STEP;
            let mut minus = model.clone();
            minus.params[p].value.data_mut()[j] -= STEP;
            let numeric = (loss_of(&plus, false).0 - loss_of(&minus, false).0) / (2.0 * STEP);
            worst = worst.max(relative_error(analytic[p][j], numeric));
            checked += 1;
        }
    }
    (checked, worst)
}
