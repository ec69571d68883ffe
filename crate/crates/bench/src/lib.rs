//! Fixtures shared by the benchmarks.

use gladssn::linalg::SymMatrix;
use gladssn::problems::{NmfInstance, NmfShape, QuadInstance, SeededRng};

/// SPD matrix of condition `1e4` and a Gaussian right-hand side.
pub fn spd_system(n: usize) -> (SymMatrix, Vec<f64>) {
    let q = QuadInstance::generate(1, n, QuadInstance::COND).expect("quadratic instance");
    (q.a, SeededRng::new(2).normals(n, 1.0))
}

/// The full-size NMF instance and its default starting point.
pub fn nmf_full() -> (NmfInstance, Vec<f64>) {
    let inst = NmfInstance::with_defaults(1, NmfShape::FULL);
    let x0 = inst.initial_point();
    (inst, x0)
}
