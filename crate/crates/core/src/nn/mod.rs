// SPDX-License-Identifier: Apache-2.0

//! Dense tensors, reverse-mode differentiation and the two-branch
//! feature extractor.

mod graph;
mod model;
mod optim;
mod serialize;
mod tensor;
mod train;

pub use graph::{BatchStats, ConvSpec, Gradients, Graph, NodeId};
pub use model::{
    ArchConfig, BnState, ForwardPass, Mode, Param, ParamKind, TwoBranchModel, BN_EPS, BN_MOMENTUM,
    STEM_KERNEL, STEM_STRIDE,
};
pub use optim::Adam;
pub use serialize::{decode_model, encode_model, TBM_MAGIC};
pub use tensor::{Real, Tensor};
pub use train::{
    train, train_with_progress, EpochLog, TrainConfig, TrainingLog, DESK_EPOCHS, PROTOCOL_MAX_EPOCHS,
};
