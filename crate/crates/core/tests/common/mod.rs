// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]
// finite differences perturb parameters element by element
#![allow(clippy::needless_range_loop, clippy::manual_is_multiple_of)]

pub mod gradcheck;
pub mod stats;
pub mod transforms;
