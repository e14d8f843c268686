//! Compiles a C client against the generated header and the shared library.

use std::path::{Path, PathBuf};
use std::process::Command;

fn target_dir() -> PathBuf {
    // .../target/<profile>/deps/c_header-<hash>
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_client_builds_and_runs() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(header_dir.join("pondguard.h").exists(), "header not generated");
    let lib_dir = target_dir();
    let so = lib_dir.join("libpondguard_ffi.so");
    assert!(so.exists(), "{} missing", so.display());

    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new(std::env::var("CC").unwrap_or_else(|_| "cc".into()))
        .args(["-std=c11", "-Wall", "-Wextra", "-Werror", "-o"])
        .arg(&exe)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(format!("-I{}", header_dir.display()))
        .arg(format!("-L{}", lib_dir.display()))
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-lpondguard_ffi")
        .status()
        .expect("C compiler available");
    assert!(status.success(), "C client failed to compile");

    let fixtures = manifest.join("../core/fixtures");
    let run = Command::new(&exe)
        .arg(fixtures.join("baseline.rbr"))
        .arg(fixtures.join("scenarios/empty_pond.json"))
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "{stdout}{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout.contains(&format!("version={}", env!("CARGO_PKG_VERSION"))));
    // back_off (reverse) fires at 0.5 m while latched; empty pond times out
    assert!(stdout.contains("action=1 rule=1 outcome=3"), "{stdout}");
    assert!(stdout.contains("header=tick,x,y,heading,surge,"), "{stdout}");
    assert!(stdout.contains("parse_status=3 error_empty=0"), "{stdout}");
}
