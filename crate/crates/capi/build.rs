fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    // Header generation is opt-in so plain builds stay dependency-light;
    // the committed include/qas.h is the artifact of record.
    #[cfg(feature = "gen-header")]
    {
        let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
        cbindgen::generate(&crate_dir)
            .expect("cbindgen failed; see warnings above")
            .write_to_file(std::path::Path::new(&crate_dir).join("include/qas.h"));
    }
}
