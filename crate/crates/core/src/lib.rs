// SPDX-License-Identifier: Apache-2.0

//! Anomaly detection for multichannel EEG-like segments trained only on
//! normal data.
//!
//! A temporal residual network learns to tell normal segments apart from
//! self-generated amplitude and frequency anomalies ([`augment`], [`nn`]).
//! Its pooled features of normal training segments are summarised by a
//! Gaussian, and new segments are scored by Mahalanobis distance
//! ([`detector`]). [`eval`] provides the train/test protocols and ROC
//! metrics; [`synth`] generates the synthetic recordings used in tests and
//! the CLI.

// `!(x > 0.0)` is deliberate throughout: it rejects NaN along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// `is_multiple_of` postdates the supported toolchain.
#![allow(clippy::manual_is_multiple_of)]

pub mod augment;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod detector;
pub mod error;
pub mod eval;
pub mod io;
pub mod nn;
pub mod rng;
pub mod synth;

pub use dataset::{Dataset, EegSegment, Label};
pub use error::{Error, Result};
pub use rng::RandomSource;
