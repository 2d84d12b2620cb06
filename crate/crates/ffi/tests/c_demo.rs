//! Compiles `examples/demo.c` against the generated header and the static
//! library, then checks its output.

use std::path::{Path, PathBuf};
use std::process::Command;

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_demo_links_and_runs() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libgiardia_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("demo");
    let status = match Command::new(&cc)
        .arg(crate_dir.join("examples/demo.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
    {
        Ok(s) => s,
        Err(e) => {
            eprintln!("skipping: cannot run {cc}: {e}");
            return;
        }
    };
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("x2_star 3.606491"), "{stdout}");
    assert!(stdout.contains("320uM 320.0000"), "{stdout}");
    assert!(stdout.contains("records 601 final_t 60.0"), "{stdout}");
    assert!(stdout.contains("violations envelope 0 observer 0"), "{stdout}");
    assert!(stdout.contains("bad strategy status 5"), "{stdout}");
}
