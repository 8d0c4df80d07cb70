// SPDX-License-Identifier: Apache-2.0

//! Reverse-mode differentiation over a recorded operation list.
//!
//! Image-like activations use a channel-major `[C, N, H, W]` layout so that a
//! convolution is one matrix product over the whole batch and batch-norm
//! statistics are contiguous per channel. Pooled features and logits are
//! sample-major `[N, D]`.

use crate::error::{Error, Result};

use super::tensor::{gemm, MatRef, Real, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

/// Convolution geometry: kernel `kh × kw`, stride along width only, zero
/// padding along width only (height is always "valid").
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub kh: usize,
    pub kw: usize,
    pub stride_w: usize,
    pub pad_w: usize,
}

impl ConvSpec {
    /// Output `(height, width)` for an input of `h × w`, if non-empty.
    pub fn output_size(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        if self.kh == 0 || self.kw == 0 || self.stride_w == 0 || h < self.kh || w + 2 * self.pad_w < self.kw {
            return None;
        }
        Some((
            h - self.kh + 1,
            (w + 2 * self.pad_w - self.kw) / self.stride_w + 1,
        ))
    }
}

enum Op<T> {
    Leaf,
    Conv {
        x: NodeId,
        w: NodeId,
        spec: ConvSpec,
        cols: Vec<T>,
    },
    BatchNorm {
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        xhat: Vec<T>,
        inv_std: Vec<T>,
    },
    /// Batch-norm with frozen statistics.
    Affine {
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        mean: Vec<T>,
        inv_std: Vec<T>,
    },
    Relu(NodeId),
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Sum(NodeId),
    GlobalAvgPool(NodeId),
    Concat(NodeId, NodeId),
    Linear {
        x: NodeId,
        w: NodeId,
        b: NodeId,
    },
    CrossEntropy {
        logits: NodeId,
        labels: Vec<usize>,
        probs: Vec<T>,
    },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Batch statistics produced by a training-mode batch-norm.
pub struct BatchStats<T> {
    pub mean: Vec<T>,
    /// Unbiased variance (divisor `M - 1`), as used for running estimates.
    pub var: Vec<T>,
}

/// Gradients of a scalar with respect to the graph's leaves.
pub struct Gradients<T> {
    grads: Vec<Option<Vec<T>>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient of `leaf`, or `None` when the leaf does not influence the loss.
    pub fn get(&self, leaf: NodeId) -> Option<&[T]> {
        self.grads.get(leaf.0).and_then(|g| g.as_deref())
    }
}

/// A recorded forward computation. Values stay alive until `backward`
/// consumes them.
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
    freed: bool,
}

impl<T: Real> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn shape_err(msg: String) -> Error {
    Error::InvalidInput(msg)
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            freed: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, inputs: &[NodeId]) -> NodeId {
        let requires_grad = inputs.iter().any(|i| self.nodes[i.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn check_live(&self) -> Result<()> {
        if self.freed {
            return Err(Error::Usage(
                "graph was freed by backward; record a new forward pass".into(),
            ));
        }
        Ok(())
    }

    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    fn shape4(&self, id: NodeId) -> Result<[usize; 4]> {
        <[usize; 4]>::try_from(self.value(id).shape())
            .map_err(|_| shape_err(format!("expected a 4-d tensor, got {:?}", self.value(id).shape())))
    }

    fn shape2(&self, id: NodeId) -> Result<[usize; 2]> {
        <[usize; 2]>::try_from(self.value(id).shape())
            .map_err(|_| shape_err(format!("expected a 2-d tensor, got {:?}", self.value(id).shape())))
    }

    /// Convolution of `x: [Cin, N, H, W]` with `w: [Cout, Cin, kh, kw]`.
    pub fn conv2d(&mut self, x: NodeId, w: NodeId, spec: ConvSpec) -> Result<NodeId> {
        self.check_live()?;
        let [cin, n, h, wd] = self.shape4(x)?;
        let [cout, wcin, kh, kw] = self.shape4(w)?;
        if wcin != cin || kh != spec.kh || kw != spec.kw {
            return Err(shape_err(format!(
                "conv weight {:?} does not match input channels {cin} and kernel {}x{}",
                [cout, wcin, kh, kw],
                spec.kh,
                spec.kw
            )));
        }
        let (ho, wo) = spec
            .output_size(h, wd)
            .ok_or_else(|| shape_err(format!("conv kernel {kh}x{kw} larger than input {h}x{wd}")))?;
        let q = cin * kh * kw;
        let p = n * ho * wo;
        let cols = im2col(self.value(x).data(), [cin, n, h, wd], spec, ho, wo);
        let mut out = vec![T::zero(); cout * p];
        gemm(
            MatRef::new(self.value(w).data(), cout, q),
            MatRef::new(&cols, q, p),
            T::zero(),
            &mut out,
        );
        Ok(self.push(
            Tensor::new(vec![cout, n, ho, wo], out),
            Op::Conv { x, w, spec, cols },
            &[x, w],
        ))
    }

    /// Training-mode batch-norm over `[C, N, H, W]`, normalizing each channel
    /// with its batch mean and biased variance.
    pub fn batch_norm(
        &mut self,
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        eps: f64,
    ) -> Result<(NodeId, BatchStats<T>)> {
        self.check_live()?;
        let [c, n, h, w] = self.shape4(x)?;
        self.check_channel_params(c, gamma, beta)?;
        let m = n * h * w;
        if m < 2 {
            return Err(shape_err(
                "batch-norm needs at least two values per channel".into(),
            ));
        }
        let xv = self.value(x).data();
        let gv = self.value(gamma).data();
        let bv = self.value(beta).data();
        let mut out = vec![T::zero(); xv.len()];
        let mut xhat = vec![T::zero(); xv.len()];
        let mut inv_std = vec![T::zero(); c];
        let mut mean = vec![T::zero(); c];
        let mut var_unbiased = vec![T::zero(); c];
        let mf = T::of(m as f64);
        for ch in 0..c {
            let block = &xv[ch * m..(ch + 1) * m];
            let mu = block.iter().fold(T::zero(), |a, &v| a + v) / mf;
            let var = block.iter().fold(T::zero(), |a, &v| a + (v - mu) * (v - mu)) / mf;
            let is = T::one() / (var + T::of(eps)).sqrt();
            inv_std[ch] = is;
            mean[ch] = mu;
            var_unbiased[ch] = var * mf / T::of((m - 1) as f64);
            let (g, b) = (gv[ch], bv[ch]);
            for i in 0..m {
                let xh = (block[i] - mu) * is;
                xhat[ch * m + i] = xh;
                out[ch * m + i] = g * xh + b;
            }
        }
        let id = self.push(
            Tensor::new(vec![c, n, h, w], out),
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            },
            &[x, gamma, beta],
        );
        Ok((
            id,
            BatchStats {
                mean,
                var: var_unbiased,
            },
        ))
    }

    /// Evaluation-mode batch-norm with fixed `mean` and `var`.
    pub fn batch_norm_frozen(
        &mut self,
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        mean: &[T],
        var: &[T],
        eps: f64,
    ) -> Result<NodeId> {
        self.check_live()?;
        let [c, n, h, w] = self.shape4(x)?;
        self.check_channel_params(c, gamma, beta)?;
        if mean.len() != c || var.len() != c {
            return Err(shape_err("running statistics do not match channel count".into()));
        }
        let m = n * h * w;
        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + T::of(eps)).sqrt()).collect();
        let xv = self.value(x).data();
        let gv = self.value(gamma).data();
        let bv = self.value(beta).data();
        let mut out = vec![T::zero(); xv.len()];
        for ch in 0..c {
            let scale = gv[ch] * inv_std[ch];
            let (mu, b) = (mean[ch], bv[ch]);
            for i in ch * m..(ch + 1) * m {
                out[i] = (xv[i] - mu) * scale + b;
            }
        }
        Ok(self.push(
            Tensor::new(vec![c, n, h, w], out),
            Op::Affine {
                x,
                gamma,
                beta,
                mean: mean.to_vec(),
                inv_std,
            },
            &[x, gamma, beta],
        ))
    }

    fn check_channel_params(&self, c: usize, gamma: NodeId, beta: NodeId) -> Result<()> {
        if self.value(gamma).len() != c || self.value(beta).len() != c {
            return Err(shape_err(format!(
                "batch-norm parameters do not match {c} channels"
            )));
        }
        Ok(())
    }

    pub fn relu(&mut self, x: NodeId) -> Result<NodeId> {
        self.check_live()?;
        let v = self.value(x);
        let out = Tensor::new(
            v.shape().to_vec(),
            v.data().iter().map(|&a| a.max(T::zero())).collect(),
        );
        Ok(self.push(out, Op::Relu(x), &[x]))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check_live()?;
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(shape_err(format!("add of {:?} and {:?}", va.shape(), vb.shape())));
        }
        let out = Tensor::new(
            va.shape().to_vec(),
            va.data().iter().zip(vb.data()).map(|(&x, &y)| x + y).collect(),
        );
        Ok(self.push(out, Op::Add(a, b), &[a, b]))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check_live()?;
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(shape_err(format!("mul of {:?} and {:?}", va.shape(), vb.shape())));
        }
        let out = Tensor::new(
            va.shape().to_vec(),
            va.data().iter().zip(vb.data()).map(|(&x, &y)| x * y).collect(),
        );
        Ok(self.push(out, Op::Mul(a, b), &[a, b]))
    }

    pub fn sum(&mut self, x: NodeId) -> Result<NodeId> {
        self.check_live()?;
        let s = self.value(x).data().iter().fold(T::zero(), |a, &v| a + v);
        Ok(self.push(Tensor::scalar(s), Op::Sum(x), &[x]))
    }

    /// `[C, N, H, W] -> [N, C]`, averaging over height and width.
    pub fn global_avg_pool(&mut self, x: NodeId) -> Result<NodeId> {
        self.check_live()?;
        let [c, n, h, w] = self.shape4(x)?;
        let hw = h * w;
        let inv = T::of(1.0 / hw as f64);
        let xv = self.value(x).data();
        let mut out = vec![T::zero(); n * c];
        for ch in 0..c {
            for s in 0..n {
                let block = &xv[(ch * n + s) * hw..(ch * n + s + 1) * hw];
                out[s * c + ch] = block.iter().fold(T::zero(), |a, &v| a + v) * inv;
            }
        }
        Ok(self.push(Tensor::new(vec![n, c], out), Op::GlobalAvgPool(x), &[x]))
    }

    /// `[N, A] ++ [N, B] -> [N, A + B]`.
    pub fn concat(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check_live()?;
        let [na, da] = self.shape2(a)?;
        let [nb, db] = self.shape2(b)?;
        if na != nb {
            return Err(shape_err(format!("concat of {na} and {nb} rows")));
        }
        let (va, vb) = (self.value(a).data(), self.value(b).data());
        let mut out = Vec::with_capacity(na * (da + db));
        for s in 0..na {
            out.extend_from_slice(&va[s * da..(s + 1) * da]);
            out.extend_from_slice(&vb[s * db..(s + 1) * db]);
        }
        Ok(self.push(Tensor::new(vec![na, da + db], out), Op::Concat(a, b), &[a, b]))
    }

    /// `x: [N, Din]`, `w: [Dout, Din]`, `b: [Dout]` -> `x w^T + b`.
    pub fn linear(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        self.check_live()?;
        let [n, din] = self.shape2(x)?;
        let [dout, wdin] = self.shape2(w)?;
        if wdin != din || self.value(b).len() != dout {
            return Err(shape_err(format!(
                "linear weight [{dout}, {wdin}] / bias {} vs input width {din}",
                self.value(b).len()
            )));
        }
        let mut out = vec![T::zero(); n * dout];
        let bias = self.value(b).data();
        for row in out.chunks_exact_mut(dout) {
            row.copy_from_slice(bias);
        }
        gemm(
            MatRef::new(self.value(x).data(), n, din),
            MatRef::t(self.value(w).data(), dout, din),
            T::one(),
            &mut out,
        );
        Ok(self.push(
            Tensor::new(vec![n, dout], out),
            Op::Linear { x, w, b },
            &[x, w, b],
        ))
    }

    /// Mean softmax cross-entropy of `logits: [N, C]` against class indices.
    pub fn cross_entropy(&mut self, logits: NodeId, labels: &[usize]) -> Result<NodeId> {
        self.check_live()?;
        let [n, c] = self.shape2(logits)?;
        if labels.len() != n {
            return Err(shape_err(format!("{} labels for {n} rows", labels.len())));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= c) {
            return Err(shape_err(format!("label {bad} outside 0..{c}")));
        }
        let lv = self.value(logits).data();
        let mut probs = vec![T::zero(); n * c];
        let mut total = T::zero();
        for s in 0..n {
            let row = &lv[s * c..(s + 1) * c];
            let max = row.iter().fold(T::neg_infinity(), |a, &v| a.max(v));
            let mut z = T::zero();
            for (p, &v) in probs[s * c..(s + 1) * c].iter_mut().zip(row) {
                *p = (v - max).exp();
                z += *p;
            }
            for p in &mut probs[s * c..(s + 1) * c] {
                *p = *p / z;
            }
            total += z.ln() + max - row[labels[s]];
        }
        let loss = total / T::of(n as f64);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                labels: labels.to_vec(),
                probs,
            },
            &[logits],
        ))
    }

    /// Back-propagates from the scalar `loss`, returns leaf gradients and
    /// frees the recorded graph.
    pub fn backward(&mut self, loss: NodeId) -> Result<Gradients<T>> {
        self.check_live()?;
        if self.value(loss).len() != 1 {
            return Err(Error::Usage(format!(
                "backward needs a scalar, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let count = self.nodes.len();
        let mut grads: Vec<Option<Vec<T>>> = (0..count).map(|_| None).collect();
        grads[loss.0] = Some(vec![T::one()]);

        for id in (0..=loss.0).rev() {
            let Some(dy) = grads[id].take() else { continue };
            if !self.nodes[id].requires_grad {
                continue;
            }
            if matches!(self.nodes[id].op, Op::Leaf) {
                grads[id] = Some(dy);
                continue;
            }
            self.backprop_node(id, &dy, &mut grads);
        }

        let leaves = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, node)| match node.op {
                Op::Leaf if node.requires_grad => grads[i].take(),
                _ => None,
            })
            .collect();
        self.nodes.clear();
        self.freed = true;
        Ok(Gradients { grads: leaves })
    }

    fn wants(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    fn backprop_node(&self, id: usize, dy: &[T], grads: &mut [Option<Vec<T>>]) {
        let node = &self.nodes[id];
        match &node.op {
            Op::Leaf => {}
            Op::Conv { x, w, spec, cols } => {
                let [cin, n, h, wd] = self.shape4(*x).expect("checked in forward");
                let [cout, _, kh, kw] = self.shape4(*w).expect("checked in forward");
                let [_, _, ho, wo] = self.shape4(NodeId(id)).expect("conv output");
                let q = cin * kh * kw;
                let p = n * ho * wo;
                if self.wants(*w) {
                    let gw = grad_slot(grads, *w, cout * q);
                    gemm(MatRef::new(dy, cout, p), MatRef::t(cols, q, p), T::one(), gw);
                }
                if self.wants(*x) {
                    let mut dcols = vec![T::zero(); q * p];
                    gemm(
                        MatRef::t(self.value(*w).data(), cout, q),
                        MatRef::new(dy, cout, p),
                        T::zero(),
                        &mut dcols,
                    );
                    let gx = grad_slot(grads, *x, cin * n * h * wd);
                    col2im_add(&dcols, [cin, n, h, wd], *spec, ho, wo, gx);
                }
            }
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            } => {
                let [c, n, h, w] = self.shape4(*x).expect("checked in forward");
                let m = n * h * w;
                let mf = T::of(m as f64);
                let gv = self.value(*gamma).data();
                let mut dgamma = vec![T::zero(); c];
                let mut dbeta = vec![T::zero(); c];
                let mut dx = if self.wants(*x) {
                    Some(vec![T::zero(); c * m])
                } else {
                    None
                };
                for ch in 0..c {
                    let r = ch * m..(ch + 1) * m;
                    let (dyc, xh) = (&dy[r.clone()], &xhat[r.clone()]);
                    let sum_dy = dyc.iter().fold(T::zero(), |a, &v| a + v);
                    let sum_dy_xh = dyc.iter().zip(xh).fold(T::zero(), |a, (&d, &x)| a + d * x);
                    dgamma[ch] = sum_dy_xh;
                    dbeta[ch] = sum_dy;
                    if let Some(dx) = dx.as_mut() {
                        let k = gv[ch] * inv_std[ch] / mf;
                        for ((o, &d), &x) in dx[r].iter_mut().zip(dyc).zip(xh) {
                            *o = k * (mf * d - sum_dy - x * sum_dy_xh);
                        }
                    }
                }
                accumulate(grads, *gamma, &dgamma);
                accumulate(grads, *beta, &dbeta);
                if let Some(dx) = dx {
                    accumulate(grads, *x, &dx);
                }
            }
            Op::Affine {
                x,
                gamma,
                beta,
                mean,
                inv_std,
            } => {
                let [c, n, h, w] = self.shape4(*x).expect("checked in forward");
                let m = n * h * w;
                let xv = self.value(*x).data();
                let gv = self.value(*gamma).data();
                let mut dgamma = vec![T::zero(); c];
                let mut dbeta = vec![T::zero(); c];
                let mut dx = vec![T::zero(); c * m];
                for ch in 0..c {
                    let r = ch * m..(ch + 1) * m;
                    let scale = gv[ch] * inv_std[ch];
                    for i in r {
                        dgamma[ch] += dy[i] * (xv[i] - mean[ch]) * inv_std[ch];
                        dbeta[ch] += dy[i];
                        dx[i] = dy[i] * scale;
                    }
                }
                accumulate(grads, *gamma, &dgamma);
                accumulate(grads, *beta, &dbeta);
                accumulate(grads, *x, &dx);
            }
            Op::Relu(x) => {
                let out = node.value.data();
                let dx: Vec<T> = dy
                    .iter()
                    .zip(out)
                    .map(|(&d, &o)| if o > T::zero() { d } else { T::zero() })
                    .collect();
                accumulate(grads, *x, &dx);
            }
            Op::Add(a, b) => {
                accumulate(grads, *a, dy);
                accumulate(grads, *b, dy);
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.value(*a).data(), self.value(*b).data());
                let da: Vec<T> = dy.iter().zip(vb).map(|(&d, &v)| d * v).collect();
                let db: Vec<T> = dy.iter().zip(va).map(|(&d, &v)| d * v).collect();
                accumulate(grads, *a, &da);
                accumulate(grads, *b, &db);
            }
            Op::Sum(x) => {
                let dx = vec![dy[0]; self.value(*x).len()];
                accumulate(grads, *x, &dx);
            }
            Op::GlobalAvgPool(x) => {
                let [c, n, h, w] = self.shape4(*x).expect("checked in forward");
                let hw = h * w;
                let inv = T::of(1.0 / hw as f64);
                let gx = grad_slot(grads, *x, c * n * hw);
                for ch in 0..c {
                    for s in 0..n {
                        let d = dy[s * c + ch] * inv;
                        for v in &mut gx[(ch * n + s) * hw..(ch * n + s + 1) * hw] {
                            *v += d;
                        }
                    }
                }
            }
            Op::Concat(a, b) => {
                let [n, da] = self.shape2(*a).expect("checked in forward");
                let [_, db] = self.shape2(*b).expect("checked in forward");
                let width = da + db;
                let ga: Vec<T> = (0..n)
                    .flat_map(|s| dy[s * width..s * width + da].to_vec())
                    .collect();
                let gb: Vec<T> = (0..n)
                    .flat_map(|s| dy[s * width + da..(s + 1) * width].to_vec())
                    .collect();
                accumulate(grads, *a, &ga);
                accumulate(grads, *b, &gb);
            }
            Op::Linear { x, w, b } => {
                let [n, din] = self.shape2(*x).expect("checked in forward");
                let [dout, _] = self.shape2(*w).expect("checked in forward");
                if self.wants(*x) {
                    let gx = grad_slot(grads, *x, n * din);
                    gemm(
                        MatRef::new(dy, n, dout),
                        MatRef::new(self.value(*w).data(), dout, din),
                        T::one(),
                        gx,
                    );
                }
                if self.wants(*w) {
                    let gw = grad_slot(grads, *w, dout * din);
                    gemm(
                        MatRef::t(dy, n, dout),
                        MatRef::new(self.value(*x).data(), n, din),
                        T::one(),
                        gw,
                    );
                }
                let mut db = vec![T::zero(); dout];
                for row in dy.chunks_exact(dout) {
                    for (o, &d) in db.iter_mut().zip(row) {
                        *o += d;
                    }
                }
                accumulate(grads, *b, &db);
            }
            Op::CrossEntropy {
                logits,
                labels,
                probs,
            } => {
                let [n, c] = self.shape2(*logits).expect("checked in forward");
                let scale = dy[0] / T::of(n as f64);
                let mut dl = probs.clone();
                for (s, &l) in labels.iter().enumerate() {
                    dl[s * c + l] -= T::one();
                }
                for v in &mut dl {
                    *v *= scale;
                }
                accumulate(grads, *logits, &dl);
            }
        }
    }
}

fn grad_slot<T: Real>(grads: &mut [Option<Vec<T>>], id: NodeId, len: usize) -> &mut [T] {
    grads[id.0].get_or_insert_with(|| vec![T::zero(); len])
}

fn accumulate<T: Real>(grads: &mut [Option<Vec<T>>], id: NodeId, delta: &[T]) {
    match &mut grads[id.0] {
        Some(g) => {
            for (a, &d) in g.iter_mut().zip(delta) {
                *a += d;
            }
        }
        slot @ None => *slot = Some(delta.to_vec()),
    }
}

/// Valid output columns `ow` for kernel column `dw`: those with
/// `0 <= ow * stride + dw - pad < w`.
fn valid_cols(spec: ConvSpec, dw: usize, w: usize, wo: usize) -> (usize, usize) {
    let (s, p) = (spec.stride_w, spec.pad_w);
    let lo = if dw >= p { 0 } else { (p - dw).div_ceil(s) };
    let hi = if w + p > dw {
        (w + p - dw).div_ceil(s).min(wo)
    } else {
        0
    };
    (lo.min(hi), hi)
}

fn im2col<T: Real>(x: &[T], [cin, n, h, w]: [usize; 4], spec: ConvSpec, ho: usize, wo: usize) -> Vec<T> {
    let p = n * ho * wo;
    let mut cols = vec![T::zero(); cin * spec.kh * spec.kw * p];
    let mut q = 0;
    for ci in 0..cin {
        for dh in 0..spec.kh {
            for dw in 0..spec.kw {
                let row = &mut cols[q * p..(q + 1) * p];
                let (lo, hi) = valid_cols(spec, dw, w, wo);
                if lo == hi {
                    q += 1;
                    continue;
                }
                for s in 0..n {
                    for oh in 0..ho {
                        let src = &x[((ci * n + s) * h + oh + dh) * w..][..w];
                        let dst = &mut row[(s * ho + oh) * wo..][..wo];
                        if spec.stride_w == 1 {
                            let start = lo + dw - spec.pad_w;
                            dst[lo..hi].copy_from_slice(&src[start..start + (hi - lo)]);
                        } else {
                            for ow in lo..hi {
                                dst[ow] = src[ow * spec.stride_w + dw - spec.pad_w];
                            }
                        }
                    }
                }
                q += 1;
            }
        }
    }
    cols
}

fn col2im_add<T: Real>(
    dcols: &[T],
    [cin, n, h, w]: [usize; 4],
    spec: ConvSpec,
    ho: usize,
    wo: usize,
    dx: &mut [T],
) {
    let p = n * ho * wo;
    let mut q = 0;
    for ci in 0..cin {
        for dh in 0..spec.kh {
            for dw in 0..spec.kw {
                let row = &dcols[q * p..(q + 1) * p];
                let (lo, hi) = valid_cols(spec, dw, w, wo);
                for s in 0..n {
                    for oh in 0..ho {
                        let dst = &mut dx[((ci * n + s) * h + oh + dh) * w..][..w];
                        let src = &row[(s * ho + oh) * wo..][..wo];
                        for ow in lo..hi {
                            dst[ow * spec.stride_w + dw - spec.pad_w] += src[ow];
                        }
                    }
                }
                q += 1;
            }
        }
    }
}
