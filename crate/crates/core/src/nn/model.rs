// SPDX-License-Identifier: Apache-2.0

//! Two-branch temporal residual classifier.
//!
//! Main branch: a `1×7` stride-2 stem, then residual stages of `1×k`
//! convolutions with batch-norm, downsampling by `time_stride` along time in
//! each stage's first block, then global average pooling. The channel axis
//! keeps height `K` throughout. Shortcut branch: one `K×7` convolution over
//! the stem output that collapses the channel axis to height 1, then global
//! average pooling. Both pooled vectors are concatenated into the feature
//! vector, which feeds a 3-way fully connected head.

use serde::{Deserialize, Serialize};

use crate::dataset::EegSegment;
use crate::error::{Error, Result};
use crate::rng::RandomSource;

use super::graph::{BatchStats, ConvSpec, Gradients, Graph, NodeId};
use super::tensor::{Real, Tensor};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;
pub const STEM_KERNEL: usize = 7;
pub const STEM_STRIDE: usize = 2;
/// Rows per forward pass when extracting features.
const EVAL_CHUNK: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchConfig {
    /// Input channels `K`.
    pub channels: usize,
    /// Input length `L`.
    pub length: usize,
    pub main_kernel: usize,
    pub stage_depths: Vec<usize>,
    pub stage_widths: Vec<usize>,
    pub time_stride: usize,
    pub branch_enabled: bool,
    pub branch_width: usize,
    /// Time extent of the `K × branch_kernel` shortcut kernel.
    pub branch_kernel: usize,
    pub n_classes: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self::tiny(4, 256)
    }
}

impl ArchConfig {
    /// Desk-scale preset: one block in each of two stages, widths 16 and 32.
    pub fn tiny(channels: usize, length: usize) -> Self {
        Self {
            channels,
            length,
            main_kernel: 7,
            stage_depths: vec![1, 1],
            stage_widths: vec![16, 32],
            time_stride: 2,
            branch_enabled: true,
            branch_width: 32,
            branch_kernel: 7,
            n_classes: 3,
        }
    }

    /// ResNet34 stage layout.
    pub fn full(channels: usize, length: usize) -> Self {
        Self {
            stage_depths: vec![3, 4, 6, 3],
            stage_widths: vec![64, 128, 256, 512],
            ..Self::tiny(channels, length)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.length == 0 {
            return Err(Error::Config("arch channels and length must be positive".into()));
        }
        if self.main_kernel % 2 == 0 || self.branch_kernel % 2 == 0 {
            return Err(Error::Config("kernel lengths must be odd".into()));
        }
        if self.stage_depths.is_empty() || self.stage_depths.len() != self.stage_widths.len() {
            return Err(Error::Config(
                "stage_depths and stage_widths must be non-empty and of equal length".into(),
            ));
        }
        if self
            .stage_depths
            .iter()
            .chain(&self.stage_widths)
            .any(|&v| v == 0)
        {
            return Err(Error::Config("stage depths and widths must be positive".into()));
        }
        if self.n_classes != 3 {
            return Err(Error::Config(format!(
                "n_classes must be 3, got {}",
                self.n_classes
            )));
        }
        if self.time_stride == 0 || (self.branch_enabled && self.branch_width == 0) {
            return Err(Error::Config(
                "time_stride and branch_width must be positive".into(),
            ));
        }
        if STEM_KERNEL > self.length {
            return Err(Error::Config(format!(
                "stem kernel {STEM_KERNEL} larger than input length {}",
                self.length
            )));
        }
        let mut w = self.stem_len();
        if self.branch_enabled && self.branch_kernel > w {
            return Err(Error::Config(format!(
                "branch kernel {} larger than stem output length {w}",
                self.branch_kernel
            )));
        }
        for _ in &self.stage_depths {
            if self.main_kernel > w {
                return Err(Error::Config(format!(
                    "main kernel {} larger than feature length {w}",
                    self.main_kernel
                )));
            }
            w = (w - 1) / self.time_stride + 1;
        }
        Ok(())
    }

    fn stem_len(&self) -> usize {
        (self.length + 2 * (STEM_KERNEL / 2) - STEM_KERNEL) / STEM_STRIDE + 1
    }

    pub fn stem_width(&self) -> usize {
        self.stage_widths[0]
    }

    /// Length `d` of the feature vector.
    pub fn feature_dim(&self) -> usize {
        let main = *self.stage_widths.last().expect("validated non-empty");
        if self.branch_enabled {
            main + self.branch_width
        } else {
            main
        }
    }

    /// Time length of the main-branch map before global pooling.
    pub fn main_map_len(&self) -> usize {
        self.stage_depths
            .iter()
            .fold(self.stem_len(), |w, _| (w - 1) / self.time_stride + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamKind {
    ConvWeight,
    BnScale,
    BnShift,
    FcWeight,
    FcBias,
}

impl ParamKind {
    /// Batch-norm parameters are exempt from weight decay.
    pub fn decays(self) -> bool {
        !matches!(self, ParamKind::BnScale | ParamKind::BnShift)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub kind: ParamKind,
    pub value: Tensor<T>,
}

/// Running statistics of one batch-norm layer.
#[derive(Debug, Clone, PartialEq)]
pub struct BnState<T> {
    pub name: String,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics, running estimates updated.
    Train,
    /// Running statistics; a pure function of parameters and input.
    Eval,
}

/// Node handles of one recorded forward pass.
pub struct ForwardPass {
    pub logits: NodeId,
    pub features: NodeId,
    /// Main-branch activation map before global pooling, `[C, N, K, W]`.
    pub main_map: NodeId,
    /// Shortcut-branch map before pooling, `[Cb, N, 1, W]`.
    pub branch_map: Option<NodeId>,
    /// Leaf node of each parameter, in `params` order.
    pub param_nodes: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoBranchModel<T = f32> {
    pub arch: ArchConfig,
    pub params: Vec<Param<T>>,
    pub bn: Vec<BnState<T>>,
}

fn conv_spec(kh: usize, kw: usize, stride: usize) -> ConvSpec {
    ConvSpec {
        kh,
        kw,
        stride_w: stride,
        pad_w: kw / 2,
    }
}

/// Parameter and batch-norm layout shared by construction and loading.
struct Layout {
    params: Vec<(String, ParamKind, Vec<usize>)>,
    bn: Vec<(String, usize)>,
}

impl Layout {
    fn conv(&mut self, name: &str, shape: [usize; 4]) {
        self.params
            .push((format!("{name}.weight"), ParamKind::ConvWeight, shape.to_vec()));
    }

    fn bn(&mut self, name: &str, c: usize) {
        self.params
            .push((format!("{name}.gamma"), ParamKind::BnScale, vec![c]));
        self.params
            .push((format!("{name}.beta"), ParamKind::BnShift, vec![c]));
        self.bn.push((name.to_string(), c));
    }

    fn of(arch: &ArchConfig) -> Layout {
        let mut l = Layout {
            params: Vec::new(),
            bn: Vec::new(),
        };
        let k = arch.main_kernel;
        let stem = arch.stem_width();
        l.conv("stem.conv", [stem, 1, 1, STEM_KERNEL]);
        l.bn("stem.bn", stem);
        let mut cin = stem;
        for (s, (&depth, &width)) in arch.stage_depths.iter().zip(&arch.stage_widths).enumerate() {
            for b in 0..depth {
                let p = format!("stage{s}.block{b}");
                l.conv(&format!("{p}.conv1"), [width, cin, 1, k]);
                l.bn(&format!("{p}.bn1"), width);
                l.conv(&format!("{p}.conv2"), [width, width, 1, k]);
                l.bn(&format!("{p}.bn2"), width);
                if block_has_projection(arch, cin, width, b) {
                    l.conv(&format!("{p}.proj"), [width, cin, 1, 1]);
                    l.bn(&format!("{p}.proj_bn"), width);
                }
                cin = width;
            }
        }
        if arch.branch_enabled {
            l.conv(
                "branch.conv",
                [arch.branch_width, stem, arch.channels, arch.branch_kernel],
            );
            l.bn("branch.bn", arch.branch_width);
        }
        let d = arch.feature_dim();
        l.params.push((
            "head.fc.weight".into(),
            ParamKind::FcWeight,
            vec![arch.n_classes, d],
        ));
        l.params
            .push(("head.fc.bias".into(), ParamKind::FcBias, vec![arch.n_classes]));
        l
    }
}

fn block_has_projection(arch: &ArchConfig, cin: usize, width: usize, block: usize) -> bool {
    let stride = if block == 0 { arch.time_stride } else { 1 };
    stride != 1 || cin != width
}

fn fan_in(shape: &[usize]) -> usize {
    shape[1..].iter().product()
}

impl<T: Real> TwoBranchModel<T> {
    /// He-uniform weights, zero biases, batch-norm scale 1 and shift 0.
    pub fn build(arch: &ArchConfig, rng: &mut RandomSource) -> Result<Self> {
        arch.validate()?;
        let layout = Layout::of(arch);
        let params = layout
            .params
            .into_iter()
            .map(|(name, kind, shape)| {
                let n: usize = shape.iter().product();
                let data = match kind {
                    ParamKind::ConvWeight | ParamKind::FcWeight => {
                        let bound = (6.0 / fan_in(&shape) as f64).sqrt();
                        (0..n).map(|_| T::of(rng.uniform(-bound, bound))).collect()
                    }
                    ParamKind::BnScale => vec![T::one(); n],
                    ParamKind::BnShift | ParamKind::FcBias => vec![T::zero(); n],
                };
                Param {
                    name,
                    kind,
                    value: Tensor::new(shape, data),
                }
            })
            .collect();
        let bn = layout
            .bn
            .into_iter()
            .map(|(name, c)| BnState {
                name,
                running_mean: vec![T::zero(); c],
                running_var: vec![T::one(); c],
            })
            .collect();
        Ok(Self {
            arch: arch.clone(),
            params,
            bn,
        })
    }

    /// Assembles a model from stored tensors, checking them against the
    /// layout implied by `arch`.
    pub fn from_parts(arch: ArchConfig, params: Vec<Param<T>>, bn: Vec<BnState<T>>) -> Result<Self> {
        arch.validate()?;
        let layout = Layout::of(&arch);
        if layout.params.len() != params.len() || layout.bn.len() != bn.len() {
            return Err(Error::InvalidInput(
                "parameter count does not match architecture".into(),
            ));
        }
        for ((name, kind, shape), p) in layout.params.iter().zip(&params) {
            if *name != p.name || *kind != p.kind || shape.as_slice() != p.value.shape() {
                return Err(Error::InvalidInput(format!(
                    "parameter {} {:?} does not match expected {name} {shape:?}",
                    p.name,
                    p.value.shape()
                )));
            }
        }
        for ((name, c), s) in layout.bn.iter().zip(&bn) {
            if *name != s.name || s.running_mean.len() != *c || s.running_var.len() != *c {
                return Err(Error::InvalidInput(format!(
                    "batch-norm state {} malformed",
                    s.name
                )));
            }
        }
        Ok(Self { arch, params, bn })
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn param(&self, name: &str) -> Option<&Param<T>> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn cast<U: Real>(&self) -> TwoBranchModel<U> {
        TwoBranchModel {
            arch: self.arch.clone(),
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    kind: p.kind,
                    value: p.value.cast(),
                })
                .collect(),
            bn: self
                .bn
                .iter()
                .map(|b| BnState {
                    name: b.name.clone(),
                    running_mean: b.running_mean.iter().map(|v| U::of(v.as_f64())).collect(),
                    running_var: b.running_var.iter().map(|v| U::of(v.as_f64())).collect(),
                })
                .collect(),
        }
    }

    /// Checks a `[B, 1, K, L]` batch against the architecture.
    fn check_input(&self, input: &Tensor<T>) -> Result<usize> {
        match *input.shape() {
            [b, 1, k, l] if k == self.arch.channels && l == self.arch.length && b > 0 => Ok(b),
            _ => Err(Error::InvalidInput(format!(
                "input shape {:?} does not match [B, 1, {}, {}]",
                input.shape(),
                self.arch.channels,
                self.arch.length
            ))),
        }
    }

    /// Records a forward pass of a `[B, 1, K, L]` batch. In `Train` mode the
    /// running batch-norm statistics are updated.
    pub fn forward(
        &mut self,
        g: &mut Graph<T>,
        input: &Tensor<T>,
        mode: Mode,
        track_grads: bool,
    ) -> Result<ForwardPass> {
        let (pass, stats) = self.record(g, input, mode, track_grads)?;
        if mode == Mode::Train {
            let m = T::of(BN_MOMENTUM);
            for (state, s) in self.bn.iter_mut().zip(stats) {
                for (r, v) in state.running_mean.iter_mut().zip(&s.mean) {
                    *r = (T::one() - m) * *r + m * *v;
                }
                for (r, v) in state.running_var.iter_mut().zip(&s.var) {
                    *r = (T::one() - m) * *r + m * *v;
                }
            }
        }
        Ok(pass)
    }

    /// Evaluation-mode forward pass; leaves the model untouched.
    pub fn forward_eval(
        &self,
        g: &mut Graph<T>,
        input: &Tensor<T>,
        track_grads: bool,
    ) -> Result<ForwardPass> {
        Ok(self.record(g, input, Mode::Eval, track_grads)?.0)
    }

    fn record(
        &self,
        g: &mut Graph<T>,
        input: &Tensor<T>,
        mode: Mode,
        track_grads: bool,
    ) -> Result<(ForwardPass, Vec<BatchStats<T>>)> {
        let b = self.check_input(input)?;
        let arch = &self.arch;
        let x = g.leaf(
            Tensor::new(vec![1, b, arch.channels, arch.length], input.data().to_vec()),
            false,
        );
        let param_nodes: Vec<NodeId> = self
            .params
            .iter()
            .map(|p| g.leaf(p.value.clone(), track_grads))
            .collect();
        let mut rec = Recorder {
            g,
            model: self,
            nodes: &param_nodes,
            next_param: 0,
            next_bn: 0,
            mode,
            stats: Vec::new(),
        };

        let h = rec.conv(x, conv_spec(1, STEM_KERNEL, STEM_STRIDE))?;
        let h = rec.bn(h)?;
        let stem = rec.g.relu(h)?;

        let k = arch.main_kernel;
        let mut h = stem;
        let mut cin = arch.stem_width();
        for (&depth, &width) in arch.stage_depths.iter().zip(&arch.stage_widths) {
            for blk in 0..depth {
                let stride = if blk == 0 { arch.time_stride } else { 1 };
                let y = rec.conv(h, conv_spec(1, k, stride))?;
                let y = rec.bn(y)?;
                let y = rec.g.relu(y)?;
                let y = rec.conv(y, conv_spec(1, k, 1))?;
                let y = rec.bn(y)?;
                let shortcut = if block_has_projection(arch, cin, width, blk) {
                    let s = rec.conv(h, conv_spec(1, 1, stride))?;
                    rec.bn(s)?
                } else {
                    h
                };
                let sum = rec.g.add(y, shortcut)?;
                h = rec.g.relu(sum)?;
                cin = width;
            }
        }
        let main_map = h;
        let main_feat = rec.g.global_avg_pool(main_map)?;

        let (features, branch_map) = if arch.branch_enabled {
            let y = rec.conv(stem, conv_spec(arch.channels, arch.branch_kernel, 1))?;
            let y = rec.bn(y)?;
            let y = rec.g.relu(y)?;
            let pooled = rec.g.global_avg_pool(y)?;
            (rec.g.concat(main_feat, pooled)?, Some(y))
        } else {
            (main_feat, None)
        };
        let w = rec.take_param();
        let bias = rec.take_param();
        let logits = rec.g.linear(features, w, bias)?;
        debug_assert_eq!(rec.next_param, self.params.len());
        let stats = rec.stats;
        Ok((
            ForwardPass {
                logits,
                features,
                main_map,
                branch_map,
                param_nodes,
            },
            stats,
        ))
    }

    /// Per-parameter gradients, zero-filled for parameters the loss does not
    /// reach.
    pub fn collect_grads(&self, grads: &Gradients<T>, pass: &ForwardPass) -> Vec<Vec<T>> {
        self.params
            .iter()
            .zip(&pass.param_nodes)
            .map(|(p, &id)| {
                grads
                    .get(id)
                    .map(<[T]>::to_vec)
                    .unwrap_or_else(|| vec![T::zero(); p.value.len()])
            })
            .collect()
    }

    /// Stacks equally shaped segments into a `[B, 1, K, L]` tensor.
    pub fn batch_tensor(&self, segments: &[&EegSegment]) -> Result<Tensor<T>> {
        let (k, l) = (self.arch.channels, self.arch.length);
        let mut data = Vec::with_capacity(segments.len() * k * l);
        for s in segments {
            if s.channels() != k || s.len() != l {
                return Err(Error::InvalidInput(format!(
                    "segment {}x{} does not match model input {k}x{l}",
                    s.channels(),
                    s.len()
                )));
            }
            data.extend(s.data().iter().map(|&v| T::of(v as f64)));
        }
        Ok(Tensor::new(vec![segments.len(), 1, k, l], data))
    }

    /// Evaluation-mode logits `[B, 3]` of a batch.
    pub fn logits(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        let pass = self.forward_eval(&mut g, input, false)?;
        Ok(g.value(pass.logits).clone())
    }

    /// Feature vector (pooled main branch followed by pooled shortcut branch)
    /// of one segment, with batch-norm in evaluation mode.
    pub fn extract_features(&self, x: &EegSegment) -> Result<Vec<T>> {
        Ok(self.extract_features_batch(std::slice::from_ref(x))?.remove(0))
    }

    pub fn extract_features_batch(&self, segments: &[EegSegment]) -> Result<Vec<Vec<T>>> {
        let d = self.arch.feature_dim();
        let mut out = Vec::with_capacity(segments.len());
        for chunk in segments.chunks(EVAL_CHUNK) {
            let refs: Vec<&EegSegment> = chunk.iter().collect();
            let input = self.batch_tensor(&refs)?;
            let mut g = Graph::new();
            let pass = self.forward_eval(&mut g, &input, false)?;
            out.extend(g.value(pass.features).data().chunks_exact(d).map(<[T]>::to_vec));
        }
        Ok(out)
    }
}

struct Recorder<'a, T: Real> {
    g: &'a mut Graph<T>,
    model: &'a TwoBranchModel<T>,
    nodes: &'a [NodeId],
    next_param: usize,
    next_bn: usize,
    mode: Mode,
    stats: Vec<BatchStats<T>>,
}

impl<T: Real> Recorder<'_, T> {
    fn take_param(&mut self) -> NodeId {
        let id = self.nodes[self.next_param];
        self.next_param += 1;
        id
    }

    fn conv(&mut self, x: NodeId, spec: ConvSpec) -> Result<NodeId> {
        let w = self.take_param();
        self.g.conv2d(x, w, spec)
    }

    fn bn(&mut self, x: NodeId) -> Result<NodeId> {
        let gamma = self.take_param();
        let beta = self.take_param();
        let state = &self.model.bn[self.next_bn];
        self.next_bn += 1;
        match self.mode {
            Mode::Train => {
                let (y, stats) = self.g.batch_norm(x, gamma, beta, BN_EPS)?;
                self.stats.push(stats);
                Ok(y)
            }
            Mode::Eval => {
                self.g
                    .batch_norm_frozen(x, gamma, beta, &state.running_mean, &state.running_var, BN_EPS)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Label;

    fn segment(k: usize, l: usize, seed: u64) -> EegSegment {
        let mut r = RandomSource::new(seed);
        let data = (0..k * l).map(|_| r.uniform(0.0, 1.0) as f32).collect();
        EegSegment::new(data, k, l, 128.0, Label::Normal, "p").unwrap()
    }

    #[test]
    fn feature_dims() {
        let tiny =
            TwoBranchModel::<f32>::build(&ArchConfig::tiny(4, 256), &mut RandomSource::new(0)).unwrap();
        assert_eq!(tiny.arch.feature_dim(), 64);
        assert_eq!(tiny.extract_features(&segment(4, 256, 1)).unwrap().len(), 64);
        assert_eq!(ArchConfig::full(4, 256).feature_dim(), 544);
        let mut no_branch = ArchConfig::tiny(4, 256);
        no_branch.branch_enabled = false;
        let m = TwoBranchModel::<f32>::build(&no_branch, &mut RandomSource::new(0)).unwrap();
        assert_eq!(m.extract_features(&segment(4, 256, 1)).unwrap().len(), 32);
    }

    #[test]
    fn build_is_deterministic() {
        let arch = ArchConfig::tiny(4, 64);
        let a = TwoBranchModel::<f32>::build(&arch, &mut RandomSource::new(5)).unwrap();
        let b = TwoBranchModel::<f32>::build(&arch, &mut RandomSource::new(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_errors() {
        let mut arch = ArchConfig::tiny(4, 5);
        assert!(matches!(
            TwoBranchModel::<f32>::build(&arch, &mut RandomSource::new(0)),
            Err(Error::Config(_))
        ));
        arch = ArchConfig::tiny(4, 256);
        arch.main_kernel = 4;
        assert!(arch.validate().is_err());
        arch = ArchConfig::tiny(4, 256);
        arch.stage_widths.push(64);
        assert!(arch.validate().is_err());
        arch = ArchConfig::tiny(4, 256);
        arch.n_classes = 2;
        assert!(arch.validate().is_err());
    }

    #[test]
    fn zero_network_gives_uniform_softmax() {
        let mut m =
            TwoBranchModel::<f64>::build(&ArchConfig::tiny(2, 32), &mut RandomSource::new(0)).unwrap();
        for p in &mut m.params {
            p.value.data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
        let segs = [segment(2, 32, 1), segment(2, 32, 2)];
        let input = m.batch_tensor(&segs.iter().collect::<Vec<_>>()).unwrap();
        let logits = m.logits(&input).unwrap();
        assert!(logits.data().iter().all(|&v| v == 0.0));
        let mut g = Graph::new();
        let l = g.leaf(logits, false);
        let loss = g.cross_entropy(l, &[0, 1]).unwrap();
        assert!((g.value(loss).data()[0] - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn logits_shape_and_eval_purity() {
        let m = TwoBranchModel::<f32>::build(&ArchConfig::tiny(4, 64), &mut RandomSource::new(3)).unwrap();
        let segs: Vec<EegSegment> = (0..5).map(|i| segment(4, 64, i % 2)).collect();
        let input = m.batch_tensor(&segs.iter().collect::<Vec<_>>()).unwrap();
        let logits = m.logits(&input).unwrap();
        assert_eq!(logits.shape(), &[5, 3]);
        let rows: Vec<&[f32]> = logits.data().chunks(3).collect();
        assert_eq!(rows[0], rows[2]);
        assert_eq!(rows[1], rows[3]);
        assert_eq!(m.logits(&input).unwrap(), logits);
    }

    #[test]
    fn shape_mismatch_is_invalid_input() {
        let m = TwoBranchModel::<f32>::build(&ArchConfig::tiny(4, 64), &mut RandomSource::new(3)).unwrap();
        assert!(matches!(
            m.extract_features(&segment(3, 64, 0)),
            Err(Error::InvalidInput(_))
        ));
        let bad = Tensor::<f32>::zeros(vec![2, 1, 4, 63]);
        assert!(matches!(m.logits(&bad), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn train_mode_updates_running_stats() {
        let mut m =
            TwoBranchModel::<f32>::build(&ArchConfig::tiny(2, 32), &mut RandomSource::new(0)).unwrap();
        let before = m.bn.clone();
        let segs: Vec<EegSegment> = (0..4).map(|i| segment(2, 32, i)).collect();
        let input = m.batch_tensor(&segs.iter().collect::<Vec<_>>()).unwrap();
        let mut g = Graph::new();
        m.forward(&mut g, &input, Mode::Train, false).unwrap();
        assert_ne!(m.bn, before);
    }
}
