//! Strongly convex quadratic `f(x) = ½xᵀAx − bᵀx` with a known minimizer.
//!
//! Generated instances use `A = QᵀDQ` where `Q` is the modified Gram–Schmidt
//! orthogonalization of an `N(0,1)` matrix (row-major draws) and
//! `Dᵢᵢ = cond^{i/(n−1)}`, followed by `b ~ N(0,1)`.

use std::sync::Arc;

use super::{rng::SeededRng, safe_lipschitz};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, Cholesky, Matrix, SymMatrix};
use crate::oracle::{CompositeProblem, Hessian, SmoothOracle};

#[derive(Clone, Debug)]
pub struct QuadInstance {
    pub a: SymMatrix,
    pub b: Vec<f64>,
    pub seed: u64,
    xstar: Vec<f64>,
    fstar: f64,
}

impl QuadInstance {
    pub const DIM: usize = 50;
    pub const COND: f64 = 1e4;

    /// Validates `A` as SPD and solves for `x* = A⁻¹b`.
    pub fn from_parts(a: SymMatrix, b: Vec<f64>) -> Result<Self> {
        if b.len() != a.n() {
            return Err(Error::Dimension(format!(
                "b has length {}, A is {}x{}",
                b.len(),
                a.n(),
                a.n()
            )));
        }
        let chol = Cholesky::factor(&a).map_err(|e| Error::Problem(format!("quadratic matrix is not SPD: {e}")))?;
        let mut xstar = chol.solve(&b);
        // One refinement step keeps ‖Ax* − b‖ near roundoff for cond up to ~1e8.
        let mut res = a.matvec(&xstar);
        for (ri, bi) in res.iter_mut().zip(&b) {
            *ri -= bi;
        }
        for (x, c) in xstar.iter_mut().zip(chol.solve(&res)) {
            *x -= c;
        }
        let fstar = -0.5 * dot(&b, &xstar);
        Ok(QuadInstance {
            a,
            b,
            seed: 0,
            xstar,
            fstar,
        })
    }

    pub fn generate(seed: u64, n: usize, cond: f64) -> Result<Self> {
        if n == 0 || !(cond >= 1.0) {
            return Err(Error::Problem(format!(
                "quadratic needs n ≥ 1 and cond ≥ 1, got n = {n}, cond = {cond}"
            )));
        }
        let mut rng = SeededRng::new(seed);
        let q = orthonormal_rows(Matrix::from_vec(n, n, rng.normals(n * n, 1.0))?)?;
        let spectrum: Vec<f64> = (0..n)
            .map(|i| {
                if n == 1 {
                    1.0
                } else {
                    cond.powf(i as f64 / (n - 1) as f64)
                }
            })
            .collect();
        // A = Qᵀ D Q with Q's rows orthonormal.
        let mut dq = q.clone();
        for (i, d) in spectrum.iter().enumerate() {
            dq.row_mut(i).iter_mut().for_each(|v| *v *= d);
        }
        let a = crate::linalg::sym_part(&q.t_matmul(&dq))?;
        let b = rng.normals(n, 1.0);
        let mut inst = Self::from_parts(a, b)?;
        inst.seed = seed;
        Ok(inst)
    }

    pub fn xstar(&self) -> &[f64] {
        &self.xstar
    }

    pub fn fstar(&self) -> f64 {
        self.fstar
    }

    pub fn initial_point(&self) -> Vec<f64> {
        vec![0.0; self.a.n()]
    }

    pub fn problem(self) -> Result<CompositeProblem> {
        let xstar = self.xstar.clone();
        let fstar = self.fstar;
        CompositeProblem::new("quad", Arc::new(self))
            .with_fstar(fstar)
            .with_xstar(xstar)
    }
}

fn orthonormal_rows(mut m: Matrix) -> Result<Matrix> {
    let n = m.rows();
    for i in 0..n {
        for j in 0..i {
            let (head, tail) = m.as_mut_slice().split_at_mut(i * n);
            let qj = &head[j * n..(j + 1) * n];
            let qi = &mut tail[..n];
            let c = dot(qi, qj);
            qi.iter_mut().zip(qj).for_each(|(a, b)| *a -= c * b);
        }
        let nrm = norm2(m.row(i));
        if !(nrm > 1e-12) {
            return Err(Error::Problem("degenerate Gaussian draw in Gram–Schmidt".into()));
        }
        m.row_mut(i).iter_mut().for_each(|v| *v /= nrm);
    }
    Ok(m)
}

impl SmoothOracle for QuadInstance {
    fn dim(&self) -> usize {
        self.a.n()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, &self.a.matvec(x)) - dot(&self.b, x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.a.matvec(x);
        for (gi, bi) in g.iter_mut().zip(&self.b) {
            *gi -= bi;
        }
        g
    }

    fn hessian(&self, _x: &[f64]) -> Hessian {
        Hessian::Dense(self.a.as_matrix().clone())
    }

    /// `2·λ_max(A)`
    fn lipschitz(&self) -> Option<f64> {
        Some(safe_lipschitz(&self.a, 1.0, 0.0))
    }

    /// `⟨½A(x + y) − b, x − y⟩`
    fn decrease(&self, x: &[f64], y: &[f64]) -> f64 {
        let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
        let dx: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        dot(&self.gradient(&mid), &dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_example() {
        let a = SymMatrix::from_diag(&[1.0, 10.0]);
        let q = QuadInstance::from_parts(a, vec![1.0, 1.0]).unwrap();
        assert!((q.xstar()[0] - 1.0).abs() < 1e-15);
        assert!((q.xstar()[1] - 0.1).abs() < 1e-15);
        assert!((q.fstar() - (-0.5 * 1.1)).abs() < 1e-15);
        assert!((q.value(q.xstar()) - q.fstar()).abs() < 1e-15);
    }

    #[test]
    fn generated_instance_has_accurate_solution() {
        let q = QuadInstance::generate(7, QuadInstance::DIM, QuadInstance::COND).unwrap();
        assert!(norm2(&q.gradient(q.xstar())) <= 1e-12 * norm2(&q.b).max(1.0) * 100.0);
        let l = q.lipschitz().unwrap();
        assert!(l >= 2.0 * QuadInstance::COND * (1.0 - 1e-6), "{l}");
        let p = q.problem().unwrap();
        assert!(p.known_xstar.is_some());
    }

    #[test]
    fn generated_gradient_at_xstar_is_tiny() {
        let q = QuadInstance::generate(3, 20, 100.0).unwrap();
        assert!(norm2(&q.gradient(q.xstar())) <= 1e-12);
    }

    #[test]
    fn rejects_indefinite() {
        let a = SymMatrix::from_diag(&[1.0, -1.0]);
        assert!(QuadInstance::from_parts(a, vec![1.0, 1.0]).is_err());
        assert!(QuadInstance::generate(1, 0, 10.0).is_err());
    }

    #[test]
    fn decrease_is_exact_for_quadratic() {
        let q = QuadInstance::generate(2, 10, 50.0).unwrap();
        let x = SeededRng::new(1).normals(10, 1.0);
        let y = SeededRng::new(2).normals(10, 1.0);
        let d = q.decrease(&x, &y);
        assert!((d - (q.value(&x) - q.value(&y))).abs() <= 1e-10 * d.abs().max(1.0));
    }
}
