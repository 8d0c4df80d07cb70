// SPDX-License-Identifier: Apache-2.0

mod common;

use common::gradcheck::{layer_errors, tiny_model_error, TOLERANCE};

#[test]
fn every_layer_matches_finite_differences() {
    for (name, err) in layer_errors() {
        assert!(err < TOLERANCE, "{name}: max relative error {err:e}");
    }
}

#[test]
fn tiny_model_matches_finite_differences() {
    let (checked, err) = tiny_model_error(2, 32, 3);
    eprintln!("checked {checked} parameters, max relative error {err:e}");
    assert!(
        err < TOLERANCE,
        "max relative error {err:e} over {checked} parameters"
    );
}
