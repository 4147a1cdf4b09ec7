use std::path::Path;

// ndarray-linalg is used without a bundled backend; link the system OpenBLAS
// (which carries the full LAPACK symbol set) directly.
fn main() {
    let candidates = [
        "/usr/lib/x86_64-linux-gnu/openblas-pthread",
        "/usr/lib/x86_64-linux-gnu/openblas",
        "/usr/lib/x86_64-linux-gnu",
        "/usr/lib64",
        "/usr/lib",
        "/opt/homebrew/opt/openblas/lib",
    ];
    for dir in candidates {
        if Path::new(dir).join("libopenblas.so").exists()
            || Path::new(dir).join("libopenblas.dylib").exists()
        {
            println!("cargo:rustc-link-search=native={dir}");
            break;
        }
    }
    println!("cargo:rustc-link-lib=openblas");
}
