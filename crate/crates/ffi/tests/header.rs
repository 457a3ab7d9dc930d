//! The generated header must compile as C and declare every exported
//! symbol.

use std::path::PathBuf;
use std::process::Command;

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/interlace.h")
}

#[test]
fn header_declares_the_api() {
    let text = std::fs::read_to_string(header()).expect("header generated by the build script");
    for sym in [
        "interlace_version",
        "interlace_last_error",
        "interlace_mesh_generate",
        "interlace_mesh_from_json",
        "interlace_mesh_free",
        "interlace_problem_new",
        "interlace_problem_free",
        "interlace_spectrum_compute",
        "interlace_spectrum_copy",
        "interlace_spectrum_free",
        "interlace_verify",
        "INTERLACE_STATUS_OK",
        "typedef struct InterlaceMesh InterlaceMesh",
    ] {
        assert!(text.contains(sym), "missing {sym}");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = tempfile_dir();
    let src = dir.join("use_header.c");
    std::fs::write(
        &src,
        "#include \"interlace.h\"\n\
         int check(void) {\n\
           InterlaceMesh *m = 0;\n\
           InterlaceStatus s = interlace_mesh_generate(INTERLACE_DOMAIN_SQUARE, 0.5, 0, &m);\n\
           interlace_mesh_free(m);\n\
           return s == INTERLACE_STATUS_OK;\n\
         }\n",
    )
    .unwrap();
    let include = header().parent().unwrap().to_path_buf();
    let status = match Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
    {
        Ok(s) => s,
        Err(_) => {
            eprintln!("no C compiler available; skipping");
            return;
        }
    };
    assert!(status.success());
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("interlace-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
