//! Compiles and runs a C program against the generated header and the
//! static library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "schemaevo.h"

int main(void) {
    SeConfig *cfg = se_config_new_default();
    if (se_config_set(cfg, "releases", "2") != SE_ERROR_CODE_OK) return 1;
    if (se_config_set(cfg, "bogus", "2") != SE_ERROR_CODE_INVALID_CONFIG) return 2;
    if (se_last_error_message() == NULL) return 3;

    SeBatch *batch = NULL;
    if (se_batch_run(cfg, 2, &batch) != SE_ERROR_CODE_OK) return 4;
    SeStats s;
    if (se_batch_stat(batch, SE_STRATEGY_EAGER, 2, SE_METRIC_MEAN_LATENCY, &s) != SE_ERROR_CODE_OK) return 5;
    if (s.n != 2) return 6;

    double xs[5] = {1, 2, 3, 4, 5};
    if (se_summarize(xs, 5, &s) != SE_ERROR_CODE_OK || s.q1 != 2.0 || s.q3 != 4.0) return 7;

    char *json = se_batch_summary_json(batch);
    if (json == NULL || strstr(json, "config_digest") == NULL) return 8;
    se_string_free(json);
    se_batch_free(batch);
    se_config_free(cfg);
    printf("%s\n", se_version());
    return 0;
}
"#;

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

/// `target/<profile>` of the running test binary.
fn profile_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

fn cc() -> Option<String> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
        .map(str::to_string)
}

#[test]
fn header_compiles_links_and_runs() {
    let header = crate_dir().join("include").join("schemaevo.h");
    assert!(
        header.is_file(),
        "build script did not generate {}",
        header.display()
    );
    let Some(cc) = cc() else {
        panic!("no C compiler found on PATH");
    };
    // `cargo test` refreshes the archive under deps/ but not always the
    // uplifted copy, so take whichever is newer.
    let lib = [profile_dir().join("deps"), profile_dir()]
        .iter()
        .map(|d| d.join("libschemaevo_ffi.a"))
        .filter(|p| p.is_file())
        .max_by_key(|p| p.metadata().and_then(|m| m.modified()).ok())
        .expect("static library not built");

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let bin = dir.path().join("main");
    let out = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(
        String::from_utf8_lossy(&run.stdout).trim(),
        env!("CARGO_PKG_VERSION")
    );
}
