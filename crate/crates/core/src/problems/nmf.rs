//! Non-negative matrix factorization with a Moreau–Yosida penalty:
//!
//! ```text
//! f(U, V) = ½‖UVᵀ − Y‖² + α(‖U‖² + ‖V‖²) + (1/2β)(‖U₋‖² + ‖V₋‖²)
//! ```
//!
//! with `U ∈ ℝ^{d×r}`, `V ∈ ℝ^{n×r}`, `U₋ = min(U, 0)`. The variable vector is
//! `[vec(U); vec(V)]`, each block row-major. The penalty's generalized Hessian
//! selection is `(1/β)·1[entry < 0]`, so entries exactly at zero contribute 0.

use std::sync::Arc;

use super::rng::SeededRng;
use crate::linalg::{dot, Matrix, MatrixFreeOp};
use crate::oracle::{CompositeProblem, Hessian, SmoothOracle};

/// Above this many variables the Hessian is returned matrix-free.
pub const DENSE_HESSIAN_MAX_DIM: usize = 1500;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NmfShape {
    pub d: usize,
    pub n: usize,
    pub r: usize,
}

impl NmfShape {
    pub const FULL: NmfShape = NmfShape { d: 200, n: 100, r: 12 };
    pub const REDUCED: NmfShape = NmfShape { d: 40, n: 20, r: 4 };

    pub fn dim(&self) -> usize {
        self.d * self.r + self.n * self.r
    }
}

#[derive(Clone, Debug)]
pub struct NmfInstance {
    pub shape: NmfShape,
    pub y: Matrix,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub seed: u64,
    pub dense_max_dim: usize,
}

impl NmfInstance {
    pub const ALPHA: f64 = 1e-2;
    pub const BETA: f64 = 1e-2;
    pub const SIGMA: f64 = 0.02;
    pub const INIT_STD: f64 = 0.5;

    /// `Y = U_true V_trueᵀ + σZ` with `U_true, V_true ~ Unif(0,1)` and
    /// `Z ~ N(0,1)`, drawn in that order, each row-major.
    pub fn generate(seed: u64, shape: NmfShape, alpha: f64, beta: f64, sigma: f64) -> Self {
        let NmfShape { d, n, r } = shape;
        let mut rng = SeededRng::new(seed);
        let u_true = Matrix::from_vec(d, r, rng.uniforms(d * r)).expect("shape");
        let v_true = Matrix::from_vec(n, r, rng.uniforms(n * r)).expect("shape");
        let mut y = u_true.matmul_t(&v_true);
        for yij in y.as_mut_slice() {
            *yij += sigma * rng.normal();
        }
        NmfInstance {
            shape,
            y,
            alpha,
            beta,
            sigma,
            seed,
            dense_max_dim: DENSE_HESSIAN_MAX_DIM,
        }
    }

    pub fn with_defaults(seed: u64, shape: NmfShape) -> Self {
        Self::generate(seed, shape, Self::ALPHA, Self::BETA, Self::SIGMA)
    }

    /// `x₀ ~ N(0, 0.5²)` entrywise.
    pub fn initial_point(&self) -> Vec<f64> {
        SeededRng::initial_point_stream(self.seed).normals(self.shape.dim(), Self::INIT_STD)
    }

    pub fn problem(self) -> CompositeProblem {
        CompositeProblem::new("nmf", Arc::new(self))
    }

    pub(crate) fn split(&self, x: &[f64]) -> (Matrix, Matrix) {
        let NmfShape { d, n, r } = self.shape;
        let u = Matrix::from_vec(d, r, x[..d * r].to_vec()).expect("U block");
        let v = Matrix::from_vec(n, r, x[d * r..].to_vec()).expect("V block");
        (u, v)
    }

    fn residual(&self, u: &Matrix, v: &Matrix) -> Matrix {
        let mut res = u.matmul_t(v);
        for (a, b) in res.as_mut_slice().iter_mut().zip(self.y.as_slice()) {
            *a -= b;
        }
        res
    }

    /// `(1/2β)(‖U₋‖² + ‖V₋‖²)`
    pub fn penalty_violation(&self, x: &[f64]) -> f64 {
        let neg_sq: f64 = x.iter().map(|v| v.min(0.0).powi(2)).sum();
        neg_sq / (2.0 * self.beta)
    }

    /// Dense generalized Hessian assembled entry by entry.
    pub fn hessian_dense(&self, x: &[f64]) -> Matrix {
        let NmfShape { d, n, r } = self.shape;
        let (u, v) = self.split(x);
        let res = self.residual(&u, &v);
        let vtv = v.t_matmul(&v);
        let utu = u.t_matmul(&u);
        let off = d * r;
        let dim = self.shape.dim();
        let mut h = Matrix::zeros(dim, dim);
        let diag = |val: f64| 2.0 * self.alpha + if val < 0.0 { 1.0 / self.beta } else { 0.0 };
        for i in 0..d {
            for a in 0..r {
                for b in 0..r {
                    h[(i * r + a, i * r + b)] = vtv[(a, b)];
                }
                h[(i * r + a, i * r + a)] += diag(u[(i, a)]);
            }
        }
        for j in 0..n {
            for a in 0..r {
                for b in 0..r {
                    h[(off + j * r + a, off + j * r + b)] = utu[(a, b)];
                }
                h[(off + j * r + a, off + j * r + a)] += diag(v[(j, a)]);
            }
        }
        for i in 0..d {
            for j in 0..n {
                for a in 0..r {
                    for b in 0..r {
                        let mut val = u[(i, b)] * v[(j, a)];
                        if a == b {
                            val += res[(i, j)];
                        }
                        h[(i * r + a, off + j * r + b)] = val;
                        h[(off + j * r + b, i * r + a)] = val;
                    }
                }
            }
        }
        h
    }

    /// Hessian-vector products at `x`:
    /// `(Hd)_U = E V + R dV + D_U dU`, `(Hd)_V = Eᵀ U + Rᵀ dU + D_V dV`
    /// with `E = dU Vᵀ + U dVᵀ`.
    pub fn hessian_operator(&self, x: &[f64]) -> MatrixFreeOp {
        let shape = self.shape;
        let (u, v) = self.split(x);
        let res = self.residual(&u, &v);
        let diag: Vec<f64> = x
            .iter()
            .map(|&xi| 2.0 * self.alpha + if xi < 0.0 { 1.0 / self.beta } else { 0.0 })
            .collect();
        MatrixFreeOp::new(shape.dim(), move |dir, out| {
            let NmfShape { d, n, r } = shape;
            let du = Matrix::from_vec(d, r, dir[..d * r].to_vec()).expect("dU");
            let dv = Matrix::from_vec(n, r, dir[d * r..].to_vec()).expect("dV");
            let mut e = du.matmul_t(&v);
            let udv = u.matmul_t(&dv);
            for (a, b) in e.as_mut_slice().iter_mut().zip(udv.as_slice()) {
                *a += b;
            }
            let hu = e.matmul(&v);
            let rdv = res.matmul(&dv);
            let hv = e.t_matmul(&u);
            let rtdu = res.t_matmul(&du);
            let (out_u, out_v) = out.split_at_mut(d * r);
            for (k, o) in out_u.iter_mut().enumerate() {
                *o = hu.as_slice()[k] + rdv.as_slice()[k] + diag[k] * dir[k];
            }
            for (k, o) in out_v.iter_mut().enumerate() {
                *o = hv.as_slice()[k] + rtdu.as_slice()[k] + diag[d * r + k] * dir[d * r + k];
            }
        })
    }
}

impl SmoothOracle for NmfInstance {
    fn dim(&self) -> usize {
        self.shape.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (u, v) = self.split(x);
        let res = self.residual(&u, &v);
        let ridge = dot(x, x);
        0.5 * res.frobenius_sq() + self.alpha * ridge + self.penalty_violation(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (u, v) = self.split(x);
        let res = self.residual(&u, &v);
        let gu = res.matmul(&v);
        let gv = res.t_matmul(&u);
        gu.as_slice()
            .iter()
            .chain(gv.as_slice())
            .zip(x)
            .map(|(g, &xi)| g + 2.0 * self.alpha * xi + xi.min(0.0) / self.beta)
            .collect()
    }

    fn hessian(&self, x: &[f64]) -> Hessian {
        if self.shape.dim() <= self.dense_max_dim {
            Hessian::Dense(self.hessian_dense(x))
        } else {
            Hessian::MatrixFree(self.hessian_operator(x))
        }
    }

    fn decrease(&self, x: &[f64], y: &[f64]) -> f64 {
        let (ux, vx) = self.split(x);
        let (uy, vy) = self.split(y);
        let rx = self.residual(&ux, &vx);
        let ry = self.residual(&uy, &vy);
        let du = diff(&ux, &uy);
        let dv = diff(&vx, &vy);
        // R_x − R_y = dU V_xᵀ + U_y dVᵀ
        let mut dr = du.matmul_t(&vx);
        let tmp = uy.matmul_t(&dv);
        for (a, b) in dr.as_mut_slice().iter_mut().zip(tmp.as_slice()) {
            *a += b;
        }
        let fit: f64 = dr
            .as_slice()
            .iter()
            .zip(rx.as_slice().iter().zip(ry.as_slice()))
            .map(|(d, (a, b))| d * (a + b))
            .sum();
        let mut ridge = 0.0;
        let mut pen = 0.0;
        for (a, b) in x.iter().zip(y) {
            ridge += (a - b) * (a + b);
            let (na, nb) = (a.min(0.0), b.min(0.0));
            let dn = if *a < 0.0 && *b < 0.0 { a - b } else { na - nb };
            pen += dn * (na + nb);
        }
        0.5 * fit + self.alpha * ridge + pen / (2.0 * self.beta)
    }

    fn near_kink(&self, x: &[f64], eps: f64) -> bool {
        x.iter().any(|v| v.abs() < eps)
    }
}

fn diff(a: &Matrix, b: &Matrix) -> Matrix {
    let data = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x - y).collect();
    Matrix::from_vec(a.rows(), a.cols(), data).expect("same shape")
}
