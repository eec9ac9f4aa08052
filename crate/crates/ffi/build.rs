fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    let mut config = cbindgen::Config::default();
    config.language = cbindgen::Language::C;
    config.include_guard = Some("BLOCKGS_H".to_string());
    config.cpp_compat = true;
    config.documentation = true;
    match cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
    {
        Ok(bindings) => {
            let out = std::path::Path::new(&crate_dir).join("include").join("blockgs.h");
            std::fs::create_dir_all(out.parent().unwrap()).unwrap();
            bindings.write_to_file(out);
        }
        // Expansion can fail while the crate itself is mid-edit; do not turn
        // a doc-generation hiccup into a build break.
        Err(e) => println!("cargo:warning=cbindgen failed: {e}"),
    }
    println!("cargo:rerun-if-changed=src/lib.rs");
}
