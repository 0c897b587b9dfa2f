fn main() {
    // dense symmetric eigensolver and matrix products come from the system
    // OpenBLAS, which bundles LAPACK
    println!("cargo:rustc-link-lib=dylib=openblas");
}
