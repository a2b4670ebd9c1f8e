use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qfuse::pipeline::{gaussian_blur, read_image, read_layer, to_quaternion, write_png, RgbImage};

fn qfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfuse"))
        .args(args)
        .output()
        .expect("run qfuse")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn crop(size: usize) -> RgbImage {
    let full = read_image(&Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/astronaut_256.png"))
        .unwrap();
    RgbImage::from_fn(size, size, |r, c| full.get(96 + r, 96 + c))
}

fn save(dir: &Path, name: &str, img: &RgbImage) -> PathBuf {
    let p = dir.join(name);
    write_png(img, &p).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&qfuse(&["--help"])), 0);
    assert_eq!(code(&qfuse(&["--version"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&qfuse(&["fuse", "--bogus"])), 1);
    assert_eq!(code(&qfuse(&[])), 1);
}

#[test]
fn missing_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let a = save(dir.path(), "a.png", &crop(32));
    let out = qfuse(&[
        "fuse",
        "--inputs",
        s(&a),
        "/nonexistent/b.png",
        "--output",
        s(&dir.path().join("f.png")),
    ]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn single_input_and_shape_mismatch_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let a = save(dir.path(), "a.png", &crop(32));
    let b = save(dir.path(), "b.png", &crop(24));
    let f = dir.path().join("f.png");
    assert_eq!(
        code(&qfuse(&["fuse", "--inputs", s(&a), "--output", s(&f)])),
        1
    );
    assert_eq!(
        code(&qfuse(&[
            "fuse",
            "--inputs",
            s(&a),
            s(&b),
            "--output",
            s(&f)
        ])),
        1
    );
    assert!(!f.exists());
}

#[test]
fn invalid_thread_count_exits_one() {
    let out = Command::new(env!("CARGO_BIN_EXE_qfuse"))
        .env("QFUSE_THREADS", "zero")
        .args(["metrics", "--fused", "x.png", "--inputs", "y.png"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
}

#[test]
fn fusing_identical_inputs_reproduces_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = save(dir.path(), "a.png", &crop(32));
    let f = dir.path().join("f.png");
    let maps = dir.path().join("maps");
    let out = qfuse(&[
        "fuse",
        "--inputs",
        s(&a),
        s(&a),
        "--output",
        s(&f),
        "--maps-dir",
        s(&maps),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_image(&f).unwrap(), read_image(&a).unwrap());
    for name in ["focus_base.png", "focus_detail.png", "wq.csv"] {
        assert!(maps.join(name).exists(), "{name} missing");
    }
    let csv = std::fs::read_to_string(maps.join("wq.csv")).unwrap();
    assert!(csv.starts_with("patch,wq_base,wq_detail,took_base"));
}

#[test]
fn fused_blur_pair_is_a_patchwise_copy() {
    let dir = tempfile::tempdir().unwrap();
    let sharp = crop(32);
    let blurred = gaussian_blur(&sharp, 2.0).unwrap();
    let left = RgbImage::from_fn(32, 32, |r, c| {
        if c < 16 {
            sharp.get(r, c)
        } else {
            blurred.get(r, c)
        }
    });
    let right = RgbImage::from_fn(32, 32, |r, c| {
        if c < 16 {
            blurred.get(r, c)
        } else {
            sharp.get(r, c)
        }
    });
    let (a, b) = (
        save(dir.path(), "a.png", &left),
        save(dir.path(), "b.png", &right),
    );
    let f = dir.path().join("f.png");
    let out = qfuse(&[
        "fuse",
        "--inputs",
        s(&a),
        s(&b),
        "--output",
        s(&f),
        "--max-iter",
        "20",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (fused, a, b) = (
        read_image(&f).unwrap(),
        read_image(&a).unwrap(),
        read_image(&b).unwrap(),
    );
    assert!(fused
        .pixels()
        .iter()
        .zip(a.pixels().iter().zip(b.pixels()))
        .all(|(p, (x, y))| p == x || p == y));
}

#[test]
fn decompose_layers_sum_to_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let a = save(dir.path(), "a.png", &crop(32));
    let layers = dir.path().join("layers");
    let out = qfuse(&["decompose", "--input", s(&a), "--output-dir", s(&layers)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["iterations"].as_u64().unwrap() > 0);
    let [b, d, e] = ["base", "detail", "noise"]
        .map(|n| read_layer(&layers.join(format!("{n}.qlayer"))).unwrap());
    let sum = &(&b + &d) + &e;
    let err = (&sum - &to_quaternion(&read_image(&a).unwrap())).max_modulus();
    assert!(err < 1e-3, "layers miss the input by {err}");
    assert!(layers.join("trace.csv").exists());
}

#[test]
fn metrics_json_on_a_copy() {
    let dir = tempfile::tempdir().unwrap();
    let a = save(dir.path(), "a.png", &crop(32));
    let out = qfuse(&[
        "metrics",
        "--fused",
        s(&a),
        "--inputs",
        s(&a),
        s(&a),
        "--json",
    ]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["Q_G"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((v["Q_MI"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn batch_runs_every_entry() {
    let dir = tempfile::tempdir().unwrap();
    let a = save(dir.path(), "a.png", &crop(24));
    let outs = [dir.path().join("o1.png"), dir.path().join("o2.png")];
    let manifest = dir.path().join("m.json");
    let entries: Vec<_> = outs
        .iter()
        .map(|o| serde_json::json!({"inputs": [a, a], "output": o}))
        .collect();
    std::fs::write(&manifest, serde_json::to_string(&entries).unwrap()).unwrap();
    let out = qfuse(&["batch", "--manifest", s(&manifest), "--max-iter", "10"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(outs.iter().all(|o| o.exists()));
}
