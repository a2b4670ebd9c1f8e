//! Compiles and runs a small C client against the generated header and the
//! static library.

use std::path::PathBuf;
use std::process::Command;

const CLIENT: &str = r#"
#include <stdio.h>
#include "qfuse.h"

int main(void) {
    double rgb[16 * 16 * 3];
    for (int i = 0; i < 16 * 16 * 3; i++) rgb[i] = (double)((i * 37) % 101) / 100.0;
    QfuseImage *a = NULL, *b = NULL, *f = NULL;
    if (qfuse_image_from_rgb(rgb, 16, 16, &a) != QFUSE_STATUS_OK) return 10;
    if (qfuse_image_from_rgb(rgb, 16, 16, &b) != QFUSE_STATUS_OK) return 11;
    QfuseConfig *cfg = qfuse_config_new();
    if (qfuse_config_set_max_iter(cfg, 2) != QFUSE_STATUS_OK) return 12;
    const QfuseImage *inputs[2] = {a, b};
    if (qfuse_fuse(inputs, 2, cfg, &f) != QFUSE_STATUS_OK) return 13;
    double out[16 * 16 * 3];
    if (qfuse_image_to_rgb(f, out, 16 * 16 * 3) != QFUSE_STATUS_OK) return 14;
    for (int i = 0; i < 16 * 16 * 3; i++) if (out[i] != rgb[i]) return 15;
    if (qfuse_fuse(inputs, 1, cfg, &f) != QFUSE_STATUS_SHAPE_MISMATCH) return 16;
    if (qfuse_last_error() == NULL) return 17;
    qfuse_image_free(a);
    qfuse_image_free(b);
    qfuse_image_free(f);
    qfuse_config_free(cfg);
    printf("ok %s\n", qfuse_version());
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_client_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libqfuse_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    let bin = dir.path().join("client");
    std::fs::write(&src, CLIENT).unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .expect("C compiler available");
    assert!(status.success(), "C client failed to build");
    let out = Command::new(&bin).output().unwrap();
    assert!(
        out.status.success(),
        "client exited with {:?}",
        out.status.code()
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
