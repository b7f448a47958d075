fn main() {
    // LAPACK/BLAS come from the system OpenBLAS build.
    println!("cargo:rustc-link-lib=openblas");
}
