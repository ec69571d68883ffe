//! Problem abstraction: a smooth part `f` with gradient and a generalized
//! Hessian selection, an optional simple convex part `ψ` with a proximal map,
//! and finite-difference consistency checks for hand-coded oracles.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{norm2, sub, sym_part, LinearOperator, Matrix, MatrixFreeOp, Metric, SymMatrix};

/// A generalized Hessian as produced by an oracle, before symmetrization.
#[derive(Clone, Debug)]
pub enum Hessian {
    Dense(Matrix),
    MatrixFree(MatrixFreeOp),
}

impl Hessian {
    /// Converts to a solver operator. Dense matrices pass through `sym_part`
    /// when `symmetrize` is set and must otherwise be exactly symmetric.
    pub fn into_operator(self, symmetrize: bool) -> Result<LinearOperator> {
        match self {
            Hessian::Dense(m) if symmetrize => Ok(LinearOperator::Dense(sym_part(&m)?)),
            Hessian::Dense(m) => Ok(LinearOperator::Dense(SymMatrix::new(m)?)),
            Hessian::MatrixFree(op) => Ok(LinearOperator::MatrixFree(op)),
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Hessian::Dense(m) => m.matvec(v),
            Hessian::MatrixFree(op) => {
                let mut out = vec![0.0; op.dim()];
                op.apply_into(v, &mut out);
                out
            }
        }
    }
}

/// The smooth part `f` of a composite objective.
///
/// `gradient` must be exact (hand-coded); `hessian` returns a fixed
/// single-valued selection of the generalized Jacobian of `f'`.
pub trait SmoothOracle: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    fn hessian(&self, x: &[f64]) -> Hessian;

    /// `L` such that `f'` is `L/2`-Lipschitz and `‖H(x)‖ ≤ L/2`, if known.
    fn lipschitz(&self) -> Option<f64> {
        None
    }

    /// `f(x) − f(y)`. Problems override this with a formula that avoids
    /// cancellation when the two values are close.
    fn decrease(&self, x: &[f64], y: &[f64]) -> f64 {
        self.value(x) - self.value(y)
    }

    /// True when `x` lies within `eps` of a point where `f'` is not differentiable.
    fn near_kink(&self, _x: &[f64], _eps: f64) -> bool {
        false
    }
}

/// Proximal oracle for a separable convex `ψ`.
pub trait ProxOperator: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;

    /// `argmin_y ψ(y) + ‖y − v‖² / (2t)`
    fn prox(&self, v: &[f64], t: f64) -> Vec<f64>;
}

/// `ψ(x) = weight · ‖x‖₁`
#[derive(Clone, Copy, Debug)]
pub struct L1Norm {
    pub weight: f64,
}

impl ProxOperator for L1Norm {
    fn value(&self, x: &[f64]) -> f64 {
        self.weight * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox(&self, v: &[f64], t: f64) -> Vec<f64> {
        let thr = self.weight * t;
        v.iter().map(|&vi| vi.signum() * (vi.abs() - thr).max(0.0)).collect()
    }
}

/// The nonsmooth convex part of `F = f + ψ`.
#[derive(Clone, Default)]
pub enum SimpleConvexPart {
    #[default]
    Zero,
    SeparableProx(Arc<dyn ProxOperator>),
}

impl SimpleConvexPart {
    pub fn l1(weight: f64) -> Self {
        SimpleConvexPart::SeparableProx(Arc::new(L1Norm { weight }))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SimpleConvexPart::Zero)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            SimpleConvexPart::Zero => 0.0,
            SimpleConvexPart::SeparableProx(p) => p.value(x),
        }
    }

    pub fn prox(&self, v: &[f64], t: f64) -> Vec<f64> {
        match self {
            SimpleConvexPart::Zero => v.to_vec(),
            SimpleConvexPart::SeparableProx(p) => p.prox(v, t),
        }
    }
}

impl fmt::Debug for SimpleConvexPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpleConvexPart::Zero => f.write_str("Zero"),
            SimpleConvexPart::SeparableProx(_) => f.write_str("SeparableProx"),
        }
    }
}

/// Tolerance on the first-order residual at a declared solution.
pub const KNOWN_SOLUTION_TOL: f64 = 1e-6;

/// `min_x f(x) + ψ(x)` together with the metric and any known solution.
#[derive(Clone)]
pub struct CompositeProblem {
    pub name: String,
    pub smooth: Arc<dyn SmoothOracle>,
    pub psi: SimpleConvexPart,
    pub metric: Metric,
    pub known_fstar: Option<f64>,
    pub known_xstar: Option<Vec<f64>>,
}

impl fmt::Debug for CompositeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("psi", &self.psi)
            .field("known_fstar", &self.known_fstar)
            .finish_non_exhaustive()
    }
}

impl CompositeProblem {
    pub fn new(name: impl Into<String>, smooth: Arc<dyn SmoothOracle>) -> Self {
        CompositeProblem {
            name: name.into(),
            smooth,
            psi: SimpleConvexPart::Zero,
            metric: Metric::Identity,
            known_fstar: None,
            known_xstar: None,
        }
    }

    pub fn with_psi(mut self, psi: SimpleConvexPart) -> Self {
        self.psi = psi;
        self
    }

    pub fn with_metric(mut self, metric: Metric) -> Result<Self> {
        if let Metric::Spd { matrix, .. } = &metric {
            if matrix.n() != self.dim() {
                return Err(Error::Dimension(format!(
                    "metric is {0}x{0}, problem has dimension {1}",
                    matrix.n(),
                    self.dim()
                )));
            }
        }
        self.metric = metric;
        Ok(self)
    }

    pub fn with_fstar(mut self, fstar: f64) -> Self {
        self.known_fstar = Some(fstar);
        self
    }

    /// Attaches a known minimizer, rejecting it when its first-order residual
    /// exceeds [`KNOWN_SOLUTION_TOL`].
    pub fn with_xstar(mut self, xstar: Vec<f64>) -> Result<Self> {
        if xstar.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "xstar has length {}, problem has dimension {}",
                xstar.len(),
                self.dim()
            )));
        }
        let res = self.stationarity_residual(&xstar);
        if !(res <= KNOWN_SOLUTION_TOL) {
            return Err(Error::Problem(format!(
                "declared minimizer has first-order residual {res:e}"
            )));
        }
        self.known_xstar = Some(xstar);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    /// `F(x) = f(x) + ψ(x)`
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.smooth.value(x) + self.psi.value(x)
    }

    /// `F(x) − F(y)` using the oracle's cancellation-free smooth decrease.
    pub fn decrease(&self, x: &[f64], y: &[f64]) -> f64 {
        let dpsi = match &self.psi {
            SimpleConvexPart::Zero => 0.0,
            p => p.value(x) - p.value(y),
        };
        self.smooth.decrease(x, y) + dpsi
    }

    /// First-order residual: `‖f'(x)‖_*` for `ψ = 0`, otherwise the norm of
    /// the proximal-gradient mapping `x − prox_ψ(x − f'(x), 1)`.
    pub fn stationarity_residual(&self, x: &[f64]) -> f64 {
        let g = self.smooth.gradient(x);
        match &self.psi {
            SimpleConvexPart::Zero => self.metric.dual_norm(&g),
            psi => {
                let step = sub(x, &g);
                norm2(&sub(x, &psi.prox(&step, 1.0)))
            }
        }
    }
}

/// Max over coordinates of `|fd_i − g_i| / max(1, ‖g‖_∞)`, where `fd` is the
/// central difference of `f` with step `h`.
pub fn check_gradient_fd(problem: &CompositeProblem, x: &[f64], h: f64) -> f64 {
    let f = &problem.smooth;
    let g = f.gradient(x);
    let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut xp = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let fp = f.value(&xp);
        xp[i] = x[i] - h;
        let fm = f.value(&xp);
        xp[i] = x[i];
        let fd = (fp - fm) / (2.0 * h);
        worst = worst.max((fd - g[i]).abs() / scale);
    }
    worst
}

/// Max over coordinates of `|fd_i − (Hv)_i| / max(1, ‖Hv‖_∞)`, where `fd` is
/// the central difference of `f'` along `v` with step `h`.
pub fn check_hvp_fd(problem: &CompositeProblem, x: &[f64], v: &[f64], h: f64) -> f64 {
    let f = &problem.smooth;
    let hv = f.hessian(x).apply(v);
    let scale = hv.iter().fold(1.0f64, |m, a| m.max(a.abs()));
    let xp: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
    let xm: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - h * b).collect();
    let gp = f.gradient(&xp);
    let gm = f.gradient(&xm);
    gp.iter()
        .zip(&gm)
        .zip(&hv)
        .map(|((p, m), hvi)| ((p - m) / (2.0 * h) - hvi).abs() / scale)
        .fold(0.0, f64::max)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// `f(x) = ½ xᵀ A x − bᵀ x` with a dense `A`.
    pub(crate) struct DenseQuadratic {
        pub a: Matrix,
        pub b: Vec<f64>,
    }

    impl SmoothOracle for DenseQuadratic {
        fn dim(&self) -> usize {
            self.b.len()
        }
        fn value(&self, x: &[f64]) -> f64 {
            0.5 * crate::linalg::dot(x, &self.a.matvec(x)) - crate::linalg::dot(&self.b, x)
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            sub(&self.a.matvec(x), &self.b)
        }
        fn hessian(&self, _x: &[f64]) -> Hessian {
            Hessian::Dense(self.a.clone())
        }
    }

    pub(crate) fn half_norm_sq(n: usize) -> CompositeProblem {
        CompositeProblem::new(
            "half-norm",
            Arc::new(DenseQuadratic {
                a: Matrix::identity(n),
                b: vec![0.0; n],
            }),
        )
    }

    #[test]
    fn fd_checks_exact_on_quadratic() {
        let p = half_norm_sq(2);
        assert!(check_gradient_fd(&p, &[1.0, 2.0], 1e-5) <= 1e-8);
        assert!(check_hvp_fd(&p, &[1.0, 2.0], &[0.3, -0.7], 1e-5) <= 1e-8);
    }

    #[test]
    fn fd_check_detects_wrong_gradient() {
        struct Wrong;
        impl SmoothOracle for Wrong {
            fn dim(&self) -> usize {
                1
            }
            fn value(&self, x: &[f64]) -> f64 {
                x[0] * x[0]
            }
            fn gradient(&self, x: &[f64]) -> Vec<f64> {
                vec![x[0]]
            }
            fn hessian(&self, _x: &[f64]) -> Hessian {
                Hessian::Dense(Matrix::from_diag(&[2.0]))
            }
        }
        let p = CompositeProblem::new("wrong", Arc::new(Wrong));
        assert!(check_gradient_fd(&p, &[3.0], 1e-6) > 0.5);
        assert!(check_hvp_fd(&p, &[3.0], &[1.0], 1e-6) > 0.4);
    }

    #[test]
    fn zero_psi_is_identity_prox() {
        let z = SimpleConvexPart::Zero;
        assert_eq!(z.prox(&[1.5, -2.0], 0.3), vec![1.5, -2.0]);
        assert_eq!(z.value(&[1.5, -2.0]), 0.0);
    }

    #[test]
    fn l1_prox_soft_thresholds() {
        let l1 = SimpleConvexPart::l1(1.0);
        assert_eq!(l1.prox(&[2.0, -0.5, -3.0], 1.0), vec![1.0, 0.0, -2.0]);
        assert_eq!(l1.value(&[1.0, -2.0]), 3.0);
    }

    #[test]
    fn known_xstar_is_validated() {
        let p = half_norm_sq(2);
        assert!(p.clone().with_xstar(vec![0.0, 0.0]).is_ok());
        assert!(matches!(p.clone().with_xstar(vec![1.0, 0.0]), Err(Error::Problem(_))));
        assert!(p.with_xstar(vec![0.0]).is_err());
    }

    #[test]
    fn nonsymmetric_dense_hessian_needs_symmetrize() {
        let h = Hessian::Dense(Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap());
        assert!(h.clone().into_operator(false).is_err());
        match h.into_operator(true).unwrap() {
            LinearOperator::Dense(m) => assert_eq!(m[(0, 1)], 1.0),
            _ => unreachable!(),
        }
    }
}
