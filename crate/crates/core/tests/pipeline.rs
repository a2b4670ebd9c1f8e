use std::path::Path;

use qfuse::fusion::{fuse, FuseConfig};
use qfuse::pipeline::eval::copy_violations;
use qfuse::pipeline::{
    from_quaternion, read_image, read_layer, synth_split, to_quaternion, write_layer, Preset,
    RunConfig, Split,
};
use qfuse::quat::{Quaternion, QuaternionMatrix};
use qfuse::Error;

fn crop(size: usize) -> qfuse::pipeline::RgbImage {
    let full = read_image(&Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/astronaut_256.png"))
        .unwrap();
    qfuse::pipeline::RgbImage::from_fn(size, size, |r, c| full.get(64 + r, 64 + c))
}

#[test]
fn config_file_then_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, r#"{"preset": "mffw", "max_iter": 7, "gamma": 0.5}"#).unwrap();
    let mut run = RunConfig::load(&path).unwrap();
    run.merge(RunConfig {
        max_iter: Some(9),
        ..Default::default()
    });
    let cfg = run.fuse_config().unwrap();
    let (alpha, beta, lambda) = Preset::Mffw.weights();
    assert_eq!(
        (cfg.qfed.alpha, cfg.qfed.beta, cfg.qfed.lambda),
        (alpha, beta, lambda)
    );
    assert_eq!(cfg.qfed.max_iter, 9);
    assert_eq!(cfg.focus.gamma, 0.5);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, r#"{"max_iters": 7}"#).unwrap();
    assert!(matches!(RunConfig::load(&path), Err(Error::Config(_))));
}

#[test]
fn invalid_parameters_fail_validation() {
    let run = RunConfig {
        tol: Some(-1.0),
        ..Default::default()
    };
    assert_eq!(run.fuse_config().unwrap_err().exit_code(), 1);
}

#[test]
fn three_inputs_fuse_to_copies() {
    let gt = crop(48);
    let set = synth_split(&gt, Split::Thirds, 2.0).unwrap();
    let inputs: Vec<QuaternionMatrix> = set.inputs.iter().map(to_quaternion).collect();
    let mut cfg = FuseConfig::default();
    cfg.qfed.max_iter = 30;
    let out = fuse(&inputs, &cfg).unwrap();
    assert_eq!(out.maps.inputs, 3);
    assert_eq!(out.decompositions.len(), 3);
    assert_eq!(copy_violations(&out.fused, &inputs, &out.detail_grid), 0);
    assert!(out.maps.base.iter().chain(&out.maps.detail).all(|&l| l < 3));
}

#[test]
fn fusion_rejects_mismatched_shapes() {
    let a = QuaternionMatrix::zeros(16, 16);
    let b = QuaternionMatrix::zeros(16, 12);
    let err = fuse(&[a, b], &FuseConfig::default()).unwrap_err();
    assert!(matches!(err, Error::ShapeMismatch { .. }));
}

#[test]
fn layers_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let q = QuaternionMatrix::from_fn(5, 7, |r, c| {
        Quaternion::new(r as f64 * 0.25, -(c as f64), 0.5, 1.0)
    });
    let path = dir.path().join("x.qlayer");
    write_layer(&q, &path).unwrap();
    assert_eq!(read_layer(&path).unwrap(), q);
}

#[test]
fn png_conversion_is_lossless_on_8bit_values() {
    let img = crop(16);
    assert_eq!(from_quaternion(&to_quaternion(&img)), img);
}
