//! L2-loss support vector machine
//!
//! ```text
//! f(ω, b) = ½‖ω‖² + γ Σᵢ max(rᵢ, 0)²,   rᵢ = 1 − yᵢ(ωᵀxᵢ + b)
//! ```
//!
//! Data are two Gaussian blobs: labels alternate `+1, −1, +1, …` and
//! `xᵢ = yᵢ·μ·e₁ + N(0, I)` with `μ = 1.5`, drawn row by row. The Hessian
//! selection is `I_n ⊕ 0 + 2γ Σ_{rᵢ > 0} zᵢzᵢᵀ` with `zᵢ = (yᵢxᵢ, yᵢ)`, so
//! rows with `rᵢ = 0` are excluded.

use std::sync::Arc;

use super::{rng::SeededRng, safe_lipschitz};
use crate::linalg::{dot, Matrix, SymMatrix};
use crate::oracle::{CompositeProblem, Hessian, SmoothOracle};

#[derive(Clone, Debug)]
pub struct SvmInstance {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub gamma: f64,
    pub seed: u64,
}

impl SvmInstance {
    pub const GAMMA: f64 = 1e4;
    pub const FULL: (usize, usize) = (10_000, 200);
    pub const REDUCED: (usize, usize) = (2_000, 50);
    pub const BLOB_SHIFT: f64 = 1.5;

    pub fn generate(seed: u64, samples: usize, features: usize, gamma: f64) -> Self {
        let mut rng = SeededRng::new(seed);
        let mut x = Matrix::zeros(samples, features);
        let mut y = Vec::with_capacity(samples);
        for i in 0..samples {
            let label = if i % 2 == 0 { 1.0 } else { -1.0 };
            y.push(label);
            for v in x.row_mut(i) {
                *v = rng.normal();
            }
            if features > 0 {
                x.row_mut(i)[0] += label * Self::BLOB_SHIFT;
            }
        }
        SvmInstance { x, y, gamma, seed }
    }

    pub fn samples(&self) -> usize {
        self.x.rows()
    }

    pub fn features(&self) -> usize {
        self.x.cols()
    }

    pub fn initial_point(&self) -> Vec<f64> {
        vec![0.0; self.features() + 1]
    }

    pub fn problem(self) -> CompositeProblem {
        CompositeProblem::new("svm", Arc::new(self))
    }

    /// `rᵢ = 1 − yᵢ(ωᵀxᵢ + b)`
    pub fn margins(&self, w: &[f64]) -> Vec<f64> {
        let n = self.features();
        let (omega, b) = (&w[..n], w[n]);
        (0..self.samples())
            .map(|i| 1.0 - self.y[i] * (dot(omega, self.x.row(i)) + b))
            .collect()
    }

    /// Gram matrix `ZᵀZ` of the augmented rows `zᵢ = (yᵢxᵢ, yᵢ)`.
    fn augmented_gram(&self, active: impl Fn(usize) -> bool) -> Matrix {
        let n = self.features();
        let mut g = Matrix::zeros(n + 1, n + 1);
        let mut z = vec![0.0; n + 1];
        for i in 0..self.samples() {
            if !active(i) {
                continue;
            }
            for (zj, xj) in z.iter_mut().zip(self.x.row(i)) {
                *zj = self.y[i] * xj;
            }
            z[n] = self.y[i];
            for a in 0..=n {
                let za = z[a];
                let row = g.row_mut(a);
                for b in a..=n {
                    row[b] += za * z[b];
                }
            }
        }
        for a in 0..=n {
            for b in 0..a {
                g[(a, b)] = g[(b, a)];
            }
        }
        g
    }
}

impl SmoothOracle for SvmInstance {
    fn dim(&self) -> usize {
        self.features() + 1
    }

    fn value(&self, w: &[f64]) -> f64 {
        let n = self.features();
        let hinge: f64 = self.margins(w).iter().map(|r| r.max(0.0).powi(2)).sum();
        0.5 * dot(&w[..n], &w[..n]) + self.gamma * hinge
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let n = self.features();
        let mut g = w.to_vec();
        g[n] = 0.0;
        for (i, r) in self.margins(w).into_iter().enumerate() {
            if r > 0.0 {
                let c = -2.0 * self.gamma * self.y[i] * r;
                for (gj, xj) in g[..n].iter_mut().zip(self.x.row(i)) {
                    *gj += c * xj;
                }
                g[n] += c;
            }
        }
        g
    }

    fn hessian(&self, w: &[f64]) -> Hessian {
        let n = self.features();
        let r = self.margins(w);
        let mut h = self.augmented_gram(|i| r[i] > 0.0);
        for v in h.as_mut_slice() {
            *v *= 2.0 * self.gamma;
        }
        for j in 0..n {
            h[(j, j)] += 1.0;
        }
        Hessian::Dense(h)
    }

    /// `2·(1 + 2γ·λ_max(ZᵀZ))`, an upper bound on every Hessian selection
    /// doubled for power-iteration safety.
    fn lipschitz(&self) -> Option<f64> {
        let gram = SymMatrix::new(self.augmented_gram(|_| true)).ok()?;
        Some(safe_lipschitz(&gram, 2.0 * self.gamma, 1.0))
    }

    fn decrease(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.features();
        let dw: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let reg: f64 = (0..n).map(|j| dw[j] * (x[j] + y[j])).sum();
        let rx = self.margins(x);
        let ry = self.margins(y);
        let mut hinge = 0.0;
        for i in 0..self.samples() {
            let (a, b) = (rx[i].max(0.0), ry[i].max(0.0));
            let diff = if rx[i] > 0.0 && ry[i] > 0.0 {
                -self.y[i] * (dot(&dw[..n], self.x.row(i)) + dw[n])
            } else {
                a - b
            };
            hinge += diff * (a + b);
        }
        0.5 * reg + self.gamma * hinge
    }

    fn near_kink(&self, w: &[f64], eps: f64) -> bool {
        self.margins(w).iter().any(|r| r.abs() < eps)
    }
}
