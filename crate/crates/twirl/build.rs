fn main() {
    // ndarray-linalg is used without a bundled LAPACK backend; the system
    // OpenBLAS provides BLAS, CBLAS and LAPACK in one shared object.
    println!("cargo:rustc-link-lib=dylib=openblas");
}
