//! Per-iteration audit records shared by the solvers and the diagnostics.

use serde::{Deserialize, Serialize};

/// One accepted outer iteration `k`: the state at `x_k` and the accepted step
/// to `x_{k+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    /// Accepted inner exponent (backtrack count for the Armijo baseline).
    pub j_k: u32,
    /// Accepted regularization `λ_k` (`1/t` for the Armijo baseline).
    pub lambda_k: f64,
    #[serde(rename = "Lambda_k")]
    pub big_lambda_k: f64,
    pub f_val: f64,
    #[serde(rename = "F_val")]
    pub big_f_val: f64,
    /// `‖F'(x_k)‖_*`
    pub g_k: f64,
    /// `‖x_{k+1} − x_k‖`
    pub r_k: f64,
    /// `⟨F'(x_{k+1}), x_k − x_{k+1}⟩`
    pub inner_prod: f64,
    /// Cumulative Hessian evaluations, including the one used at `k`.
    pub hess_evals: u64,
    /// Cumulative subproblem solves (or function evaluations for Armijo).
    pub trials: u64,
    /// Nanoseconds since the start of the run.
    pub wall_ns: u64,
}

/// The state at the final iterate, where no step was taken.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerminalRecord {
    pub k: usize,
    #[serde(rename = "Lambda_k")]
    pub big_lambda_k: f64,
    pub f_val: f64,
    #[serde(rename = "F_val")]
    pub big_f_val: f64,
    pub g_k: f64,
    pub hess_evals: u64,
    pub trials: u64,
    pub wall_ns: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub terminal: TerminalRecord,
}

impl Trace {
    /// Number of accepted iterations.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `g_0, …, g_K` including the terminal iterate.
    pub fn g_sequence(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.g_k)
            .chain(std::iter::once(self.terminal.g_k))
            .collect()
    }

    /// `F(x_0), …, F(x_K)` including the terminal iterate.
    pub fn objective_sequence(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.big_f_val)
            .chain(std::iter::once(self.terminal.big_f_val))
            .collect()
    }

    /// `Λ_0, …, Λ_K` including the terminal iterate.
    pub fn big_lambda_sequence(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.big_lambda_k)
            .chain(std::iter::once(self.terminal.big_lambda_k))
            .collect()
    }

    /// `g_{k+1}` for record `k`.
    pub fn next_g(&self, k: usize) -> f64 {
        self.records.get(k + 1).map_or(self.terminal.g_k, |r| r.g_k)
    }

    /// `F(x_{k+1})` for record `k`.
    pub fn next_objective(&self, k: usize) -> f64 {
        self.records.get(k + 1).map_or(self.terminal.big_f_val, |r| r.big_f_val)
    }

    /// `Λ_{k+1}` for record `k`.
    pub fn next_big_lambda(&self, k: usize) -> f64 {
        self.records
            .get(k + 1)
            .map_or(self.terminal.big_lambda_k, |r| r.big_lambda_k)
    }
}
