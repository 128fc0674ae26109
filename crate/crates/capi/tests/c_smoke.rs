//! Compiles tests/smoke.c against the committed header and links the
//! freshly built cdylib, proving include/qas.h still matches the ABI.

use std::path::PathBuf;
use std::process::Command;

#[test]
fn c_program_compiles_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // current_exe is target/<profile>/deps/c_smoke-<hash>; the un-hashed
    // cdylib sits one directory up.
    let mut lib_dir = std::env::current_exe().unwrap();
    lib_dir.pop();
    lib_dir.pop();
    let cdylib = lib_dir.join("libqas_capi.so");
    assert!(cdylib.exists(), "cdylib not found at {}", cdylib.display());

    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let compile = Command::new("cc")
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lqas_capi")
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-Wall")
        .arg("-Werror")
        .arg("-o")
        .arg(&exe)
        .output()
        .expect("cc is available in this environment");
    assert!(
        compile.status.success(),
        "compile failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "smoke exited {:?}:\n{}",
        run.status.code(),
        String::from_utf8_lossy(&run.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
