fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR");
    let out = std::path::Path::new(&crate_dir)
        .join("include")
        .join("microlend.h");
    std::fs::create_dir_all(out.parent().unwrap()).expect("create include dir");
    match cbindgen::generate(&crate_dir) {
        Ok(bindings) => {
            bindings.write_to_file(&out);
        }
        // Header generation failures (e.g. while rustfmt-ing) should not
        // block the build of the library itself.
        Err(err) => println!("cargo:warning=cbindgen failed: {err}"),
    }
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
}
