//! Ridge-regularized Huber regression
//!
//! ```text
//! f(x) = Σᵢ h_δ(aᵢᵀx − bᵢ) + (ρ/2)‖x‖²
//! h_δ(t) = t²/2 for |t| ≤ δ,  δ(|t| − δ/2) otherwise
//! ```
//!
//! The Hessian selection is `Σ_{|rᵢ| ≤ δ} aᵢaᵢᵀ + ρI`; residuals exactly at
//! `±δ` take the quadratic branch. Generated data: `A ~ N(0,1)` row-major,
//! `x_true ~ N(0,1)`, then `bᵢ = aᵢᵀx_true + 0.5·N(0,1)`, and every tenth row
//! (`i ≡ 0 mod 10`) receives an extra `10·N(0,1)` outlier.

use std::sync::Arc;

use super::{rng::SeededRng, safe_lipschitz};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix, SymMatrix};
use crate::oracle::{CompositeProblem, Hessian, SmoothOracle};

#[derive(Clone, Debug)]
pub struct HuberInstance {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub delta: f64,
    pub ridge: f64,
    pub seed: u64,
}

impl HuberInstance {
    pub const ROWS: usize = 500;
    pub const COLS: usize = 50;
    pub const DELTA: f64 = 1.0;
    pub const RIDGE: f64 = 1e-2;
    const NOISE: f64 = 0.5;
    const OUTLIER: f64 = 10.0;

    pub fn new(a: Matrix, b: Vec<f64>, delta: f64, ridge: f64) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::Dimension(format!(
                "b has length {}, A has {} rows",
                b.len(),
                a.rows()
            )));
        }
        if !(delta > 0.0) || !(ridge > 0.0) {
            return Err(Error::Problem(format!(
                "huber needs delta > 0 and ridge > 0, got {delta} and {ridge}"
            )));
        }
        Ok(HuberInstance {
            a,
            b,
            delta,
            ridge,
            seed: 0,
        })
    }

    pub fn generate(seed: u64, rows: usize, cols: usize, delta: f64, ridge: f64) -> Result<Self> {
        let mut rng = SeededRng::new(seed);
        let a = Matrix::from_vec(rows, cols, rng.normals(rows * cols, 1.0))?;
        let x_true = rng.normals(cols, 1.0);
        let mut b = a.matvec(&x_true);
        for (i, bi) in b.iter_mut().enumerate() {
            *bi += Self::NOISE * rng.normal();
            if i % 10 == 0 {
                *bi += Self::OUTLIER * rng.normal();
            }
        }
        let mut inst = Self::new(a, b, delta, ridge)?;
        inst.seed = seed;
        Ok(inst)
    }

    pub fn with_defaults(seed: u64) -> Self {
        Self::generate(seed, Self::ROWS, Self::COLS, Self::DELTA, Self::RIDGE).expect("default parameters are valid")
    }

    pub fn initial_point(&self) -> Vec<f64> {
        vec![0.0; self.a.cols()]
    }

    pub fn problem(self) -> CompositeProblem {
        CompositeProblem::new("huber", Arc::new(self))
    }

    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.a.matvec(x);
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        r
    }

    fn loss(&self, t: f64) -> f64 {
        if t.abs() <= self.delta {
            0.5 * t * t
        } else {
            self.delta * (t.abs() - 0.5 * self.delta)
        }
    }

    fn gram(&self, active: impl Fn(usize) -> bool) -> Matrix {
        let n = self.a.cols();
        let mut g = Matrix::zeros(n, n);
        for i in 0..self.a.rows() {
            if !active(i) {
                continue;
            }
            let row = self.a.row(i);
            for p in 0..n {
                let ap = row[p];
                let grow = g.row_mut(p);
                for q in p..n {
                    grow[q] += ap * row[q];
                }
            }
        }
        for p in 0..n {
            for q in 0..p {
                g[(p, q)] = g[(q, p)];
            }
        }
        g
    }
}

impl SmoothOracle for HuberInstance {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let data: f64 = self.residuals(x).into_iter().map(|t| self.loss(t)).sum();
        data + 0.5 * self.ridge * dot(x, x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let clipped: Vec<f64> = self
            .residuals(x)
            .into_iter()
            .map(|t| t.clamp(-self.delta, self.delta))
            .collect();
        let mut g = self.a.matvec_t(&clipped);
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi += self.ridge * xi;
        }
        g
    }

    fn hessian(&self, x: &[f64]) -> Hessian {
        let r = self.residuals(x);
        let mut h = self.gram(|i| r[i].abs() <= self.delta);
        for j in 0..h.rows() {
            h[(j, j)] += self.ridge;
        }
        Hessian::Dense(h)
    }

    /// `2·(λ_max(AᵀA) + ρ)`
    fn lipschitz(&self) -> Option<f64> {
        let gram = SymMatrix::new(self.gram(|_| true)).ok()?;
        Some(safe_lipschitz(&gram, 1.0, self.ridge))
    }

    fn decrease(&self, x: &[f64], y: &[f64]) -> f64 {
        let dx: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let dr = self.a.matvec(&dx);
        let rx = self.residuals(x);
        let ry = self.residuals(y);
        let mut data = 0.0;
        for i in 0..rx.len() {
            let (s, t) = (rx[i], ry[i]);
            data += if s.abs() <= self.delta && t.abs() <= self.delta {
                0.5 * dr[i] * (s + t)
            } else if s.abs() > self.delta && t.abs() > self.delta && s.signum() == t.signum() {
                self.delta * s.signum() * dr[i]
            } else {
                self.loss(s) - self.loss(t)
            };
        }
        let reg: f64 = dx.iter().zip(x.iter().zip(y)).map(|(d, (a, b))| d * (a + b)).sum();
        data + 0.5 * self.ridge * reg
    }

    fn near_kink(&self, x: &[f64], eps: f64) -> bool {
        self.residuals(x).iter().any(|t| (t.abs() - self.delta).abs() < eps)
    }
}
