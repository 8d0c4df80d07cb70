// SPDX-License-Identifier: Apache-2.0

use std::ffi::CStr;
use std::ptr;

use eegad::detector::{GaussianDetector, ShrinkagePolicy};
use eegad::nn::{encode_model, ArchConfig, TwoBranchModel};
use eegad::{EegSegment, Label, RandomSource};
use eegad_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { eegad_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned();
    assert!(n < buf.len() && n == s.len());
    s
}

fn features(n: usize, d: usize, seed: u64) -> Vec<f64> {
    let mut rng = RandomSource::new(seed);
    (0..n * d).map(|_| rng.normal()).collect()
}

#[test]
fn detector_matches_library() {
    let (n, d) = (40, 5);
    let f = features(n, d, 1);
    let mut det = ptr::null_mut();
    assert_eq!(
        unsafe { eegad_detector_fit(f.as_ptr(), n, d, &mut det) },
        EegadStatus::Ok
    );
    let rows: Vec<&[f64]> = f.chunks_exact(d).collect();
    let reference = GaussianDetector::fit(&rows, ShrinkagePolicy::default()).unwrap();
    let mut dim = 0;
    assert_eq!(unsafe { eegad_detector_dim(det, &mut dim) }, EegadStatus::Ok);
    assert_eq!(dim, d);
    let probe = [0.5, -1.0, 2.0, 0.0, 0.25];
    let mut score = 0.0;
    assert_eq!(
        unsafe { eegad_detector_score(det, probe.as_ptr(), d, &mut score) },
        EegadStatus::Ok
    );
    assert_eq!(score, reference.score(&probe).unwrap().value());

    // save / load round trip
    let mut len = 0;
    assert_eq!(
        unsafe { eegad_detector_save(det, ptr::null_mut(), 0, &mut len) },
        EegadStatus::Ok
    );
    let mut bytes = vec![0u8; len];
    assert_eq!(
        unsafe { eegad_detector_save(det, bytes.as_mut_ptr(), len, &mut len) },
        EegadStatus::Ok
    );
    let mut loaded = ptr::null_mut();
    assert_eq!(
        unsafe { eegad_detector_load(bytes.as_ptr(), len, &mut loaded) },
        EegadStatus::Ok
    );
    let mut again = 0.0;
    assert_eq!(
        unsafe { eegad_detector_score(loaded, probe.as_ptr(), d, &mut again) },
        EegadStatus::Ok
    );
    assert_eq!(again, score);

    // wrong length
    assert_eq!(
        unsafe { eegad_detector_score(det, probe.as_ptr(), 3, &mut score) },
        EegadStatus::Data
    );
    assert!(last_error().contains("does not match"));
    unsafe {
        eegad_detector_free(det);
        eegad_detector_free(loaded);
        eegad_detector_free(ptr::null_mut());
    }
}

#[test]
fn error_codes() {
    let mut det = ptr::null_mut();
    let one = [1.0];
    assert_eq!(
        unsafe { eegad_detector_fit(one.as_ptr(), 1, 1, &mut det) },
        EegadStatus::Data
    );
    assert!(last_error().contains("at least 2"));
    assert_eq!(
        unsafe { eegad_detector_fit(ptr::null(), 2, 2, &mut det) },
        EegadStatus::NullPointer
    );
    assert!(last_error().contains("features"));
    assert_eq!(
        unsafe { eegad_detector_load(b"GDT0xxxx".as_ptr(), 8, &mut det) },
        EegadStatus::Format
    );
    let mut model = ptr::null_mut();
    assert_eq!(
        unsafe { eegad_model_load(b"nope".as_ptr(), 4, &mut model) },
        EegadStatus::Format
    );
    assert!(model.is_null());
}

#[test]
fn message_truncation() {
    let mut auc = 0.0;
    assert_eq!(
        unsafe { eegad_auc(ptr::null(), 0, [1.0].as_ptr(), 1, &mut auc) },
        EegadStatus::Data
    );
    let mut small = [0 as std::ffi::c_char; 8];
    let full = unsafe { eegad_last_error_message(small.as_mut_ptr(), small.len()) };
    assert!(full > 7);
    assert_eq!(unsafe { CStr::from_ptr(small.as_ptr()) }.to_bytes().len(), 7);
    assert!(unsafe { eegad_last_error_message(ptr::null_mut(), 0) } == full);
}

#[test]
fn metrics_worked_example() {
    let n = [1.0, 2.0, 3.0, 4.0];
    let a = [3.0, 4.0, 5.0, 6.0];
    let mut auc = 0.0;
    assert_eq!(
        unsafe { eegad_auc(n.as_ptr(), 4, a.as_ptr(), 4, &mut auc) },
        EegadStatus::Ok
    );
    assert_eq!(auc, 0.875);
    let (mut eer, mut thr, mut f1) = (0.0, 0.0, 0.0);
    assert_eq!(
        unsafe { eegad_eer(n.as_ptr(), 4, a.as_ptr(), 4, &mut eer, &mut thr, &mut f1) },
        EegadStatus::Ok
    );
    assert_eq!((eer, thr, f1), (0.25, 3.5, 0.75));
}

#[test]
fn model_features_match_library() {
    let arch = ArchConfig::tiny(2, 32);
    let model = TwoBranchModel::<f32>::build(&arch, &mut RandomSource::new(4)).unwrap();
    let bytes = encode_model(&model);
    let mut handle = ptr::null_mut();
    assert_eq!(
        unsafe { eegad_model_load(bytes.as_ptr(), bytes.len(), &mut handle) },
        EegadStatus::Ok
    );
    let (mut k, mut l, mut d) = (0, 0, 0);
    assert_eq!(
        unsafe { eegad_model_shape(handle, &mut k, &mut l, &mut d) },
        EegadStatus::Ok
    );
    assert_eq!((k, l, d), (2, 32, arch.feature_dim()));

    let mut rng = RandomSource::new(5);
    let data: Vec<f32> = (0..k * l).map(|_| rng.uniform(0.0, 1.0) as f32).collect();
    let mut out = vec![0f32; d];
    assert_eq!(
        unsafe { eegad_model_extract_features(handle, data.as_ptr(), k, l, out.as_mut_ptr(), d) },
        EegadStatus::Ok
    );
    let seg = EegSegment::new(data.clone(), k, l, 1.0, Label::Normal, "").unwrap();
    assert_eq!(out, model.extract_features(&seg).unwrap());

    assert_eq!(
        unsafe { eegad_model_extract_features(handle, data.as_ptr(), k, l, out.as_mut_ptr(), d - 1) },
        EegadStatus::Data
    );
    assert_eq!(
        unsafe { eegad_model_extract_features(handle, data.as_ptr(), k + 1, l - 1, out.as_mut_ptr(), d) },
        EegadStatus::Data
    );
    unsafe { eegad_model_free(handle) };
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(eegad_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
