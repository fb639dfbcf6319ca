use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let config = cbindgen::Config::from_file(crate_dir.join("cbindgen.toml")).expect("cbindgen.toml parses");
    let bindings = cbindgen::generate_with_config(&crate_dir, config).expect("header generates");

    let header = crate_dir.join("include").join("geodsig.h");
    let mut text = Vec::new();
    bindings.write(&mut text);
    // Rewriting an unchanged header would retrigger dependent builds.
    if std::fs::read(&header).ok().as_deref() != Some(&text[..]) {
        std::fs::create_dir_all(header.parent().unwrap()).unwrap();
        std::fs::write(&header, text).unwrap();
    }
}
