//! Dense linear algebra kernels: symmetric operators, metric norms, and the
//! regularized solve `(H + λB) s = rhs` behind every Newton trial.
//!
//! Matrices are dense and row-major. Vectors are plain `Vec<f64>` / `&[f64]`.

mod cholesky;
mod dense;
mod minres;

use std::fmt;
use std::sync::Arc;

pub use cholesky::{Cholesky, PIVOT_RTOL};
pub use dense::{add, all_finite, axpy, dot, norm2, scale, sub, sym_part, Matrix, SymMatrix};
pub use minres::{minres, MinresOutcome};

use crate::error::{Error, Result};

/// Absolute floor of the regularized-solve residual target.
pub const SOLVE_ABS_TOL: f64 = 1e-10;
/// Relative (to `‖rhs‖`) part of the regularized-solve residual target.
pub const SOLVE_REL_TOL: f64 = 1e-12;
/// MINRES iteration cap as a multiple of the dimension.
pub const MINRES_CAP_FACTOR: usize = 10;

/// Residual target `max(1e-10, 1e-12 ‖rhs‖)` shared by both solve paths.
pub fn residual_target(rhs_norm: f64) -> f64 {
    SOLVE_ABS_TOL.max(SOLVE_REL_TOL * rhs_norm)
}

/// The metric `‖x‖ = sqrt(⟨Bx, x⟩)` used for primal norms, with dual norm
/// `‖g‖_* = sqrt(⟨g, B⁻¹g⟩)`.
#[derive(Clone, Debug, Default)]
pub enum Metric {
    #[default]
    Identity,
    Spd {
        matrix: SymMatrix,
        factor: Cholesky,
    },
}

impl Metric {
    /// Validates that `b` is SPD by factoring it.
    pub fn spd(b: SymMatrix) -> Result<Self> {
        let factor = Cholesky::factor(&b).map_err(|e| Error::Metric(e.to_string()))?;
        Ok(Metric::Spd { matrix: b, factor })
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Metric::Identity)
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        match self {
            Metric::Identity => Ok(()),
            Metric::Spd { matrix, .. } if matrix.n() == len => Ok(()),
            Metric::Spd { matrix, .. } => Err(Error::Dimension(format!(
                "metric is {0}x{0}, vector has length {len}",
                matrix.n()
            ))),
        }
    }

    /// `B v`
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Metric::Identity => v.to_vec(),
            Metric::Spd { matrix, .. } => matrix.matvec(v),
        }
    }

    /// `out += alpha * B v`
    fn apply_add(&self, alpha: f64, v: &[f64], out: &mut [f64]) {
        match self {
            Metric::Identity => axpy(alpha, v, out),
            Metric::Spd { matrix, .. } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o += alpha * dot(matrix.as_matrix().row(i), v);
                }
            }
        }
    }

    /// `B⁻¹ g`
    pub fn apply_inverse(&self, g: &[f64]) -> Vec<f64> {
        match self {
            Metric::Identity => g.to_vec(),
            Metric::Spd { factor, .. } => factor.solve(g),
        }
    }

    /// Primal norm `sqrt(vᵀ B v)`.
    pub fn norm(&self, v: &[f64]) -> f64 {
        match self {
            Metric::Identity => norm2(v),
            Metric::Spd { matrix, .. } => dot(v, &matrix.matvec(v)).max(0.0).sqrt(),
        }
    }

    /// Dual norm `sqrt(gᵀ B⁻¹ g)`.
    pub fn dual_norm(&self, g: &[f64]) -> f64 {
        match self {
            Metric::Identity => norm2(g),
            Metric::Spd { factor, .. } => dot(g, &factor.solve(g)).max(0.0).sqrt(),
        }
    }

    /// Upper estimate of `‖B‖_op` (1 for the identity).
    pub fn op_norm_estimate(&self) -> f64 {
        match self {
            Metric::Identity => 1.0,
            Metric::Spd { matrix, .. } => power_iteration(matrix.n(), |v, out| matrix.matvec_into(v, out), 100),
        }
    }
}

/// Checked variants of [`Metric::norm`] and [`Metric::dual_norm`].
pub fn norm_b(v: &[f64], b: &Metric) -> Result<f64> {
    b.check_dim(v.len())?;
    Ok(b.norm(v))
}

pub fn dual_norm_b(g: &[f64], b: &Metric) -> Result<f64> {
    b.check_dim(g.len())?;
    Ok(b.dual_norm(g))
}

type ApplyFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A symmetric linear operator given only through its action `out = A v`.
#[derive(Clone)]
pub struct MatrixFreeOp {
    dim: usize,
    apply: Arc<ApplyFn>,
}

impl MatrixFreeOp {
    pub fn new<F>(dim: usize, apply: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        MatrixFreeOp {
            dim,
            apply: Arc::new(apply),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        (self.apply)(v, out)
    }
}

impl fmt::Debug for MatrixFreeOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixFreeOp").field("dim", &self.dim).finish()
    }
}

/// A (generalized) Hessian, either stored or available as products.
#[derive(Clone, Debug)]
pub enum LinearOperator {
    Dense(SymMatrix),
    MatrixFree(MatrixFreeOp),
}

impl LinearOperator {
    pub fn dim(&self) -> usize {
        match self {
            LinearOperator::Dense(m) => m.n(),
            LinearOperator::MatrixFree(op) => op.dim(),
        }
    }

    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        match self {
            LinearOperator::Dense(m) => m.matvec_into(v, out),
            LinearOperator::MatrixFree(op) => op.apply_into(v, out),
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(v, &mut out);
        out
    }

    /// Materializes the operator column by column and symmetrizes the result.
    pub fn to_dense(&self) -> SymMatrix {
        match self {
            LinearOperator::Dense(m) => m.clone(),
            LinearOperator::MatrixFree(op) => {
                let n = op.dim();
                let mut cols = Matrix::zeros(n, n);
                let mut e = vec![0.0; n];
                let mut col = vec![0.0; n];
                for j in 0..n {
                    e[j] = 1.0;
                    op.apply_into(&e, &mut col);
                    e[j] = 0.0;
                    cols.row_mut(j).copy_from_slice(&col);
                }
                // rows of `cols` are columns of the operator
                sym_part(&cols.transpose()).expect("square by construction")
            }
        }
    }

    /// Wraps a dense operator as matrix-free (products only).
    pub fn into_matrix_free(self) -> LinearOperator {
        match self {
            LinearOperator::Dense(m) => {
                let n = m.n();
                LinearOperator::MatrixFree(MatrixFreeOp::new(n, move |v, out| m.matvec_into(v, out)))
            }
            op @ LinearOperator::MatrixFree(_) => op,
        }
    }

    /// Symmetrizes a dense operator; matrix-free operators are returned as is.
    pub fn symmetrized(self) -> LinearOperator {
        match self {
            LinearOperator::Dense(m) => LinearOperator::Dense(sym_part(m.as_matrix()).expect("square")),
            op => op,
        }
    }

    /// Estimate of `‖A‖_op` by power iteration.
    pub fn op_norm_estimate(&self, iterations: usize) -> f64 {
        power_iteration(self.dim(), |v, out| self.apply_into(v, out), iterations)
    }
}

/// Largest-magnitude eigenvalue estimate of a symmetric operator by power
/// iteration from a fixed deterministic start vector.
pub fn power_iteration<A>(n: usize, apply: A, iterations: usize) -> f64
where
    A: Fn(&[f64], &mut [f64]),
{
    if n == 0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 13) as f64 / 13.0).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut w = vec![0.0; n];
    let mut est = 0.0;
    for _ in 0..iterations.max(1) {
        apply(&v, &mut w);
        let nw = norm2(&w);
        if nw == 0.0 || !nw.is_finite() {
            return nw;
        }
        est = nw;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    est
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    Cholesky,
    Minres,
}

#[derive(Clone, Debug)]
pub struct RegularizedSolve {
    pub solution: Vec<f64>,
    /// `‖(H + λB) s − rhs‖`
    pub residual: f64,
    pub method: SolveMethod,
}

/// Solves `(H + λB) s = rhs`.
///
/// Dense operators are factored with Cholesky; a non-positive pivot sends the
/// system to MINRES. Matrix-free operators always use MINRES, capped at `10 n`
/// iterations with residual target `max(1e-10, 1e-12 ‖rhs‖)`.
pub fn solve_regularized(h: &LinearOperator, b: &Metric, lambda: f64, rhs: &[f64]) -> Result<RegularizedSolve> {
    let n = h.dim();
    if rhs.len() != n {
        return Err(Error::Dimension(format!(
            "operator is {n}x{n}, rhs has length {}",
            rhs.len()
        )));
    }
    b.check_dim(n)?;
    if !(lambda > 0.0) {
        return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
    }
    let target = residual_target(norm2(rhs));

    if let LinearOperator::Dense(hm) = h {
        let shifted = match b {
            Metric::Identity => hm.shift_diagonal(lambda),
            Metric::Spd { matrix, .. } => hm.add_scaled(lambda, matrix),
        };
        match Cholesky::factor(&shifted) {
            Ok(factor) => {
                let mut s = factor.solve(rhs);
                let res = sub(&shifted.matvec(&s), rhs);
                let mut rnorm = norm2(&res);
                // one step of iterative refinement when the plain solve misses
                if rnorm > target {
                    let refined = sub(&s, &factor.solve(&res));
                    let r2 = norm2(&sub(&shifted.matvec(&refined), rhs));
                    if r2 < rnorm {
                        s = refined;
                        rnorm = r2;
                    }
                }
                return Ok(RegularizedSolve {
                    solution: s,
                    residual: rnorm,
                    method: SolveMethod::Cholesky,
                });
            }
            Err(Error::NotPositiveDefinite { .. }) => {
                return minres_path(|v, out| shifted.matvec_into(v, out), rhs, target, n);
            }
            Err(e) => return Err(e),
        }
    }

    minres_path(
        |v, out| {
            h.apply_into(v, out);
            b.apply_add(lambda, v, out);
        },
        rhs,
        target,
        n,
    )
}

fn minres_path<A>(apply: A, rhs: &[f64], target: f64, n: usize) -> Result<RegularizedSolve>
where
    A: Fn(&[f64], &mut [f64]),
{
    let cap = MINRES_CAP_FACTOR * n.max(1);
    let out = minres(apply, rhs, target, cap);
    if out.converged {
        Ok(RegularizedSolve {
            solution: out.solution,
            residual: out.residual,
            method: SolveMethod::Minres,
        })
    } else {
        Err(Error::SolverStall {
            iterations: out.iterations,
            best_residual: out.residual,
            target,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_identity_solve() {
        let h = LinearOperator::Dense(SymMatrix::zeros(2));
        let s = solve_regularized(&h, &Metric::Identity, 2.0, &[4.0, 6.0]).unwrap();
        assert_eq!(s.method, SolveMethod::Cholesky);
        assert!((s.solution[0] - 2.0).abs() < 1e-15);
        assert!((s.solution[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn identity_plus_identity() {
        let h = LinearOperator::Dense(SymMatrix::identity(2));
        let s = solve_regularized(&h, &Metric::Identity, 1.0, &[2.0, 0.0]).unwrap();
        assert!((s.solution[0] - 1.0).abs() < 1e-15);
        assert_eq!(s.solution[1], 0.0);
    }

    #[test]
    fn indefinite_falls_back_to_minres() {
        // diag(2, -2) s = (2, 2)  =>  s = (1, -1)
        let h = LinearOperator::Dense(SymMatrix::from_diag(&[1.0, -3.0]));
        let s = solve_regularized(&h, &Metric::Identity, 1.0, &[2.0, 2.0]).unwrap();
        assert_eq!(s.method, SolveMethod::Minres);
        assert!((s.solution[0] - 1.0).abs() < 1e-12);
        assert!((s.solution[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_free_uses_minres() {
        let h = LinearOperator::Dense(SymMatrix::from_diag(&[1.0, 2.0, 3.0])).into_matrix_free();
        let s = solve_regularized(&h, &Metric::Identity, 1.0, &[2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.method, SolveMethod::Minres);
        for (si, e) in s.solution.iter().zip([1.0, 1.0, 1.0]) {
            assert!((si - e).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_shifted_system_stalls() {
        // H + λI = diag(1, 0): rhs component in the null space is unreachable
        let h = LinearOperator::Dense(SymMatrix::from_diag(&[0.0, -1.0])).into_matrix_free();
        let err = solve_regularized(&h, &Metric::Identity, 1.0, &[1.0, 1.0]).unwrap_err();
        match err {
            Error::SolverStall { best_residual, .. } => {
                assert!(best_residual >= 1.0 - 1e-12 && best_residual <= 2f64.sqrt() + 1e-12)
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let h = LinearOperator::Dense(SymMatrix::identity(2));
        assert!(solve_regularized(&h, &Metric::Identity, 0.0, &[1.0, 1.0]).is_err());
        assert!(solve_regularized(&h, &Metric::Identity, 1.0, &[1.0]).is_err());
    }

    #[test]
    fn metric_norms() {
        let id = Metric::Identity;
        assert_eq!(norm_b(&[3.0, 4.0], &id).unwrap(), 5.0);
        assert_eq!(dual_norm_b(&[3.0, 4.0], &id).unwrap(), 5.0);
        assert_eq!(norm_b(&[0.0, 0.0], &id).unwrap(), 0.0);

        let b = Metric::spd(SymMatrix::from_diag(&[4.0, 1.0])).unwrap();
        assert!((norm_b(&[1.0, 0.0], &b).unwrap() - 2.0).abs() < 1e-15);
        assert!((dual_norm_b(&[1.0, 0.0], &b).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(dual_norm_b(&[0.0, 0.0], &b).unwrap(), 0.0);
        assert!(norm_b(&[1.0], &b).is_err());
    }

    #[test]
    fn metric_rejects_non_spd() {
        assert!(matches!(
            Metric::spd(SymMatrix::from_diag(&[1.0, -1.0])),
            Err(Error::Metric(_))
        ));
    }

    #[test]
    fn spd_metric_solve() {
        // (I + 1 * diag(4, 1)) s = (5, 2) => s = (1, 1)
        let h = LinearOperator::Dense(SymMatrix::identity(2));
        let b = Metric::spd(SymMatrix::from_diag(&[4.0, 1.0])).unwrap();
        let s = solve_regularized(&h, &b, 1.0, &[5.0, 2.0]).unwrap();
        assert!((s.solution[0] - 1.0).abs() < 1e-15);
        assert!((s.solution[1] - 1.0).abs() < 1e-15);
        let mf = h.into_matrix_free();
        let s = solve_regularized(&mf, &b, 1.0, &[5.0, 2.0]).unwrap();
        assert!((s.solution[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn densify_round_trip() {
        let m = SymMatrix::new(Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, -3.0]]).unwrap()).unwrap();
        let op = LinearOperator::Dense(m.clone()).into_matrix_free();
        assert_eq!(op.to_dense(), m);
        let expected = (1.0 + 29f64.sqrt()) / 2.0;
        assert!((op.op_norm_estimate(200) - expected).abs() < 1e-8);
    }
}
