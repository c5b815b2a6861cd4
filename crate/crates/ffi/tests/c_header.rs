//! Builds a C program against the generated header and the static library.

use std::path::{Path, PathBuf};
use std::process::Command;

fn target_dir() -> PathBuf {
    // .../target/<profile>/deps/c_header-<hash>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_declares_the_api() {
    let header =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/exsuff.h"))
            .unwrap();
    for decl in [
        "typedef struct ExsuffPmf ExsuffPmf;",
        "typedef struct ExsuffEstimand ExsuffEstimand;",
        "EXSUFF_STATUS_OK = 0",
        "exsuff_pmf_from_text(const char *text, struct ExsuffPmf **out)",
        "void exsuff_pmf_free(struct ExsuffPmf *pmf);",
        "exsuff_symmetrize_mc(",
        "const char *exsuff_last_error_message(void);",
    ] {
        assert!(header.contains(decl), "missing {decl}");
    }
}

#[test]
fn c_program_links_and_runs() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libexsuff_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let out = tempfile_path("exsuff_smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap_or_else(|e| panic!("running {cc}: {e}"));
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    let _ = std::fs::remove_file(&out);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}

fn tempfile_path(stem: &str) -> PathBuf {
    std::env::temp_dir().join(format!("{stem}-{}", std::process::id()))
}
