use std::env;
use std::fs;
use std::path::Path;

fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    println!("cargo:rerun-if-changed=include/devs.h");

    let crate_dir = env::var("CARGO_MANIFEST_DIR").expect("cargo sets CARGO_MANIFEST_DIR");
    let out_dir = env::var("OUT_DIR").expect("cargo sets OUT_DIR");
    let generated_path = Path::new(&out_dir).join("devs.h");

    let config = cbindgen::Config::from_file(Path::new(&crate_dir).join("cbindgen.toml"))
        .expect("cbindgen.toml parses");
    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("C header generates from the public API")
        .write_to_file(&generated_path);

    // Keep the committed header in sync so C consumers can use the repo
    // without Rust tooling; a test asserts the two never drift.
    let committed_path = Path::new(&crate_dir).join("include").join("devs.h");
    let generated = fs::read(&generated_path).expect("generated header is readable");
    if fs::read(&committed_path).ok().as_deref() != Some(&generated[..]) {
        fs::create_dir_all(committed_path.parent().expect("include/ has a parent"))
            .expect("include/ can be created");
        fs::write(&committed_path, generated).expect("committed header is writable");
    }
}
