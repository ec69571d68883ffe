//! The GLAd-SSN outer/inner iteration.
//!
//! Each outer iteration `k` refreshes the generalized Hessian only when
//! `k mod m == 0` and otherwise reuses `H(x_{π(k)})`. The inner loop tries
//! `λ = 4^j Λ_k ‖F'(x_k)‖_*^p` for `j = 0, 1, …`, solves the regularized
//! model, and accepts the first trial point satisfying both
//!
//! ```text
//! ⟨F'(x₊), x_k − x₊⟩ ≥ ‖F'(x₊)‖_*² / (2λ)
//! F(x_k) − F(x₊)     ≥ (λ/4) ‖x₊ − x_k‖²
//! ```
//!
//! after which `Λ_{k+1} = 4^{j_k} Λ_k / 4`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{add, all_finite, axpy, dot, solve_regularized, sub, LinearOperator, Metric};
use crate::oracle::{CompositeProblem, Hessian, SimpleConvexPart};
use crate::trace::{TerminalRecord, Trace, TraceRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HessianMode {
    Dense,
    MatrixFree,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Gradient exponent in the trial regularization, in `[0, 1]`.
    pub p: f64,
    /// Hessian refresh period.
    pub m: usize,
    #[serde(rename = "Lambda0")]
    pub lambda0: f64,
    pub grad_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Force a Hessian representation; `None` keeps whatever the oracle returns.
    pub hessian_mode: Option<HessianMode>,
    pub symmetrize: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            p: 0.5,
            m: 1,
            lambda0: 1.0,
            grad_tol: 1e-8,
            max_outer: 1000,
            max_inner: 60,
            hessian_mode: None,
            symmetrize: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Config(format!("p must lie in [0, 1], got {}", self.p)));
        }
        if self.m == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        if !(self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            return Err(Error::Config(format!("Lambda0 must be positive, got {}", self.lambda0)));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(Error::Config(format!(
                "grad_tol must be non-negative, got {}",
                self.grad_tol
            )));
        }
        if self.max_inner == 0 {
            return Err(Error::Config("max_inner must be at least 1".into()));
        }
        Ok(())
    }
}

/// `π(k) = k − (k mod m)`, the iteration whose Hessian is in use at `k`.
pub fn lazy_index(k: usize, m: usize) -> usize {
    assert!(m >= 1, "m must be at least 1");
    k - k % m
}

/// `λ = 4^j Λ_k g_k^p`
pub fn trial_lambda(big_lambda: f64, g: f64, p: f64, j: u32) -> f64 {
    4f64.powi(j as i32) * big_lambda * g.powf(p)
}

/// Solver state carried across outer iterations.
#[derive(Clone, Debug)]
pub struct IterateState {
    pub k: usize,
    pub x: Vec<f64>,
    /// `f'(x_k)`
    pub f_grad: Vec<f64>,
    /// `ψ'(x_k) ∈ ∂ψ(x_k)`
    pub psi_sub: Vec<f64>,
    /// `F'(x_k) = f'(x_k) + ψ'(x_k)`
    pub big_f_sub: Vec<f64>,
    /// `Λ_k`
    pub big_lambda: f64,
    /// `H(x_{π(k)})`
    pub h_lazy: Option<LinearOperator>,
    pub hessian_evals: u64,
    pub trials_total: u64,
}

impl IterateState {
    pub fn new(problem: &CompositeProblem, x0: Vec<f64>, psi_sub0: Vec<f64>, lambda0: f64) -> Result<Self> {
        let n = problem.dim();
        if x0.len() != n || psi_sub0.len() != n {
            return Err(Error::Dimension(format!(
                "problem has dimension {n}, x0 has {}, psi_sub0 has {}",
                x0.len(),
                psi_sub0.len()
            )));
        }
        let f_grad = problem.smooth.gradient(&x0);
        let big_f_sub = add(&f_grad, &psi_sub0);
        Ok(IterateState {
            k: 0,
            x: x0,
            f_grad,
            psi_sub: psi_sub0,
            big_f_sub,
            big_lambda: lambda0,
            h_lazy: None,
            hessian_evals: 0,
            trials_total: 0,
        })
    }

    pub fn with_hessian(mut self, h: LinearOperator) -> Self {
        self.h_lazy = Some(h);
        self
    }
}

/// A candidate point of the inner loop.
#[derive(Clone, Debug)]
pub struct TrialPoint {
    pub x_plus: Vec<f64>,
    /// `ψ'(x₊) = −f'(x_k) − H (x₊ − x_k) − λ B (x₊ − x_k)`
    pub psi_sub_plus: Vec<f64>,
    /// `F'(x₊) = f'(x₊) + ψ'(x₊)`
    pub big_f_sub_plus: Vec<f64>,
    /// `f'(x₊)`
    pub f_grad_plus: Vec<f64>,
}

/// Inner proximal-gradient sweeps allowed per trial when `ψ ≠ 0`.
pub const MODEL_MAX_SWEEPS: usize = 500;

/// Computes the trial point `x₊(λ, x_k, x_{π(k)})` and its subgradient
/// bookkeeping. Linear-solve or model-solve failures surface as errors the
/// caller treats as rejected trials.
pub fn trial_step(state: &IterateState, lambda: f64, problem: &CompositeProblem) -> Result<TrialPoint> {
    let h = state
        .h_lazy
        .as_ref()
        .ok_or_else(|| Error::Config("trial_step needs a Hessian in the state".into()))?;
    if !(lambda > 0.0) {
        return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
    }
    let x = &state.x;

    match &problem.psi {
        SimpleConvexPart::Zero => {
            let s = solve_regularized(h, &problem.metric, lambda, &state.f_grad)?.solution;
            let x_plus = sub(x, &s);
            let f_grad_plus = problem.smooth.gradient(&x_plus);
            // ∂ψ ≡ {0}; the line-6 expression equals 0 up to the solve residual
            let psi_sub_plus = vec![0.0; x.len()];
            Ok(TrialPoint {
                big_f_sub_plus: f_grad_plus.clone(),
                x_plus,
                psi_sub_plus,
                f_grad_plus,
            })
        }
        psi => {
            let x_plus = solve_prox_model(h, &problem.metric, psi, lambda, x, &state.f_grad)?;
            let step = sub(&x_plus, x);
            let psi_sub_plus = model_gradient(h, &problem.metric, lambda, &state.f_grad, &step)
                .into_iter()
                .map(|v| -v)
                .collect::<Vec<_>>();
            let f_grad_plus = problem.smooth.gradient(&x_plus);
            let big_f_sub_plus = add(&f_grad_plus, &psi_sub_plus);
            Ok(TrialPoint {
                x_plus,
                psi_sub_plus,
                big_f_sub_plus,
                f_grad_plus,
            })
        }
    }
}

/// `f'(x_k) + H d + λ B d`
fn model_gradient(h: &LinearOperator, b: &Metric, lambda: f64, g: &[f64], d: &[f64]) -> Vec<f64> {
    let mut out = h.apply(d);
    axpy(1.0, g, &mut out);
    axpy(lambda, &b.apply(d), &mut out);
    out
}

/// Accelerated proximal gradient (with gradient-based restart) on
/// `y ↦ ⟨g, y−x⟩ + ½⟨H(y−x), y−x⟩ + (λ/2)‖y−x‖² + ψ(y)`, stepsize
/// `1 / (‖H‖ + λ‖B‖)`, stopped when the prox residual drops to
/// `min(1e-10, 1e-4 λ ‖y − x‖)`.
fn solve_prox_model(
    h: &LinearOperator,
    b: &Metric,
    psi: &SimpleConvexPart,
    lambda: f64,
    x: &[f64],
    g: &[f64],
) -> Result<Vec<f64>> {
    let lip = 1.1 * h.op_norm_estimate(50) + lambda * b.op_norm_estimate();
    let t = 1.0 / lip;
    let mut y = x.to_vec();
    let mut z = x.to_vec();
    let mut theta = 1.0f64;
    let mut residual = f64::INFINITY;
    for _ in 0..MODEL_MAX_SWEEPS {
        let d = sub(&z, x);
        let grad = model_gradient(h, b, lambda, g, &d);
        let mut v = z.clone();
        axpy(-t, &grad, &mut v);
        let y_new = psi.prox(&v, t);
        let gmap = sub(&z, &y_new);
        residual = crate::linalg::norm2(&gmap) / t;
        let r_step = b.norm(&sub(&y_new, x));
        let tol = 1e-10f64.min(1e-4 * lambda * r_step);
        if residual <= tol || residual == 0.0 {
            return Ok(y_new);
        }
        let restart = dot(&gmap, &sub(&y_new, &y)) < 0.0;
        let theta_next = if restart {
            1.0
        } else {
            0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt())
        };
        let beta = if restart { 0.0 } else { (theta - 1.0) / theta_next };
        z = y_new.iter().zip(&y).map(|(a, b)| a + beta * (a - b)).collect();
        theta = theta_next;
        y = y_new;
    }
    Err(Error::ModelStall {
        sweeps: MODEL_MAX_SWEEPS,
        residual,
    })
}

/// Both acceptance conditions, with the objective decrease supplied directly.
pub fn acceptance_conditions(
    big_f_sub_plus: &[f64],
    x_k: &[f64],
    x_plus: &[f64],
    lambda: f64,
    decrease: f64,
    b: &Metric,
) -> (bool, bool) {
    let back = sub(x_k, x_plus);
    let g_plus = b.dual_norm(big_f_sub_plus);
    let r = b.norm(&back);
    let first = dot(big_f_sub_plus, &back) >= g_plus * g_plus / (2.0 * lambda);
    let second = decrease >= 0.25 * lambda * r * r;
    (first, second)
}

/// True iff `⟨F'(x₊), x_k − x₊⟩ ≥ ‖F'(x₊)‖_*²/(2λ)` and
/// `F(x_k) − F(x₊) ≥ (λ/4)‖x₊ − x_k‖²`.
pub fn acceptance_test(
    big_f_sub_plus: &[f64],
    x_k: &[f64],
    x_plus: &[f64],
    lambda: f64,
    big_f_k: f64,
    big_f_plus: f64,
    b: &Metric,
) -> bool {
    let (a, c) = acceptance_conditions(big_f_sub_plus, x_k, x_plus, lambda, big_f_k - big_f_plus, b);
    a && c
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    Stalled,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub trace: Trace,
}

fn evaluate_hessian(problem: &CompositeProblem, config: &SolverConfig, x: &[f64]) -> Result<LinearOperator> {
    let h = problem.smooth.hessian(x);
    let h = match (config.hessian_mode, h) {
        (Some(HessianMode::Dense), Hessian::MatrixFree(op)) => {
            Hessian::Dense(LinearOperator::MatrixFree(op).to_dense().into_matrix())
        }
        (_, h) => h,
    };
    let op = h.into_operator(config.symmetrize)?;
    Ok(match config.hessian_mode {
        Some(HessianMode::MatrixFree) => op.into_matrix_free(),
        _ => op,
    })
}

/// Runs GLAd-SSN from `x0` with `psi_sub0 ∈ ∂ψ(x0)` (zeros for `ψ = 0`).
pub fn solve(
    problem: &CompositeProblem,
    config: &SolverConfig,
    x0: Vec<f64>,
    psi_sub0: Vec<f64>,
) -> Result<SolveReport> {
    config.validate()?;
    let started = Instant::now();
    let metric = &problem.metric;
    let mut state = IterateState::new(problem, x0, psi_sub0, config.lambda0)?;
    let mut f_val = problem.smooth.value(&state.x);
    let mut big_f_val = f_val + problem.psi.value(&state.x);
    if !big_f_val.is_finite() {
        return Err(Error::NonFinite {
            k: 0,
            quantity: "objective",
        });
    }
    if !all_finite(&state.big_f_sub) {
        return Err(Error::NonFinite {
            k: 0,
            quantity: "gradient",
        });
    }
    let mut g = metric.dual_norm(&state.big_f_sub);
    let mut records = Vec::new();

    let status = loop {
        let k = state.k;
        if g <= config.grad_tol {
            break SolveStatus::Converged;
        }
        if k >= config.max_outer {
            break SolveStatus::MaxIter;
        }
        if k % config.m == 0 {
            state.h_lazy = Some(evaluate_hessian(problem, config, &state.x)?);
            state.hessian_evals += 1;
        }

        let mut accepted = None;
        for j in 0..config.max_inner as u32 {
            let lambda = trial_lambda(state.big_lambda, g, config.p, j);
            if !(lambda.is_finite() && lambda > 0.0) {
                break;
            }
            state.trials_total += 1;
            let trial = match trial_step(&state, lambda, problem) {
                Ok(t) => t,
                Err(Error::SolverStall { .. } | Error::ModelStall { .. }) => continue,
                Err(e) => return Err(e),
            };
            if !all_finite(&trial.x_plus) || !all_finite(&trial.big_f_sub_plus) {
                return Err(Error::NonFinite {
                    k,
                    quantity: "trial gradient",
                });
            }
            let decrease = problem.decrease(&state.x, &trial.x_plus);
            if !decrease.is_finite() {
                return Err(Error::NonFinite {
                    k,
                    quantity: "trial objective",
                });
            }
            let (c1, c2) =
                acceptance_conditions(&trial.big_f_sub_plus, &state.x, &trial.x_plus, lambda, decrease, metric);
            if c1 && c2 {
                accepted = Some((j, lambda, trial));
                break;
            }
        }
        let Some((j, lambda, trial)) = accepted else {
            break SolveStatus::Stalled;
        };

        let back = sub(&state.x, &trial.x_plus);
        records.push(TraceRecord {
            k,
            j_k: j,
            lambda_k: lambda,
            big_lambda_k: state.big_lambda,
            f_val,
            big_f_val,
            g_k: g,
            r_k: metric.norm(&back),
            inner_prod: dot(&trial.big_f_sub_plus, &back),
            hess_evals: state.hessian_evals,
            trials: state.trials_total,
            wall_ns: started.elapsed().as_nanos() as u64,
        });

        state.x = trial.x_plus;
        state.f_grad = trial.f_grad_plus;
        state.psi_sub = trial.psi_sub_plus;
        state.big_f_sub = trial.big_f_sub_plus;
        state.big_lambda = 4f64.powi(j as i32) * state.big_lambda / 4.0;
        state.k += 1;
        f_val = problem.smooth.value(&state.x);
        big_f_val = f_val + problem.psi.value(&state.x);
        if !big_f_val.is_finite() {
            return Err(Error::NonFinite {
                k: state.k,
                quantity: "objective",
            });
        }
        g = metric.dual_norm(&state.big_f_sub);
    };

    let terminal = TerminalRecord {
        k: state.k,
        big_lambda_k: state.big_lambda,
        f_val,
        big_f_val,
        g_k: g,
        hess_evals: state.hessian_evals,
        trials: state.trials_total,
        wall_ns: started.elapsed().as_nanos() as u64,
    };
    Ok(SolveReport {
        status,
        x: state.x,
        trace: Trace { records, terminal },
    })
}
