//! Re-derives the per-iteration guarantees from a stored trace.
//!
//! Every inequality `lhs ≥ rhs` is accepted when
//! `lhs − rhs ≥ −(1e-9·scale + 1e-12)`, where `scale` is the largest magnitude
//! among the stored operands. This absorbs serialization and cancellation
//! noise in differences such as `F_k − F_{k+1}` without hiding real failures.

use serde::{Deserialize, Serialize};

use super::order::{estimate_order, OrderEstimate, DEFAULT_TAIL};
use crate::trace::Trace;

pub const REL_SLACK: f64 = 1e-9;
pub const ABS_SLACK: f64 = 1e-12;
/// Tolerance for the `Σj` counting identity.
pub const COUNTING_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Lipschitz constant of `f'`; enables the `λ̄` cap check.
    pub lipschitz: Option<f64>,
    /// Optimal value (or best known value); enables the envelope check.
    pub fstar: Option<f64>,
    /// Marks `fstar` as an estimate rather than a proven optimum.
    pub fstar_advisory: bool,
    /// Relative allowance on the envelope bound (0 for an exact check).
    pub envelope_tolerance: f64,
    /// Hessian refresh period; inferred from the trace when absent.
    pub m: Option<usize>,
    /// Tail length for the order estimate (default 6).
    pub order_tail: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub description: String,
    /// `false` when the inputs the check needs were not supplied.
    pub applicable: bool,
    /// Set when the check depends on an estimated quantity.
    pub advisory: bool,
    pub checked: usize,
    pub violations: usize,
    /// Smallest `(lhs − rhs)/scale` seen; negative values are violations
    /// before the tolerance is applied.
    pub worst_slack: Option<f64>,
    /// Iteration at which `worst_slack` occurs.
    pub worst_k: Option<usize>,
    /// Iteration of the first violation.
    pub first_violation_k: Option<usize>,
}

impl CheckResult {
    fn new(name: &str, description: &str) -> Self {
        CheckResult {
            name: name.into(),
            description: description.into(),
            applicable: true,
            advisory: false,
            checked: 0,
            violations: 0,
            worst_slack: None,
            worst_k: None,
            first_violation_k: None,
        }
    }

    fn not_applicable(name: &str, description: &str) -> Self {
        CheckResult {
            applicable: false,
            ..Self::new(name, description)
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// Records `lhs ≥ rhs` at iteration `k` with `scale` the operand size.
    fn record_geq(&mut self, k: usize, lhs: f64, rhs: f64, scale: f64) {
        let margin = lhs - rhs;
        let tol = REL_SLACK * scale + ABS_SLACK;
        let ok = margin >= -tol;
        self.record(k, margin / scale.max(f64::MIN_POSITIVE), ok);
    }

    fn record(&mut self, k: usize, slack: f64, ok: bool) {
        self.checked += 1;
        if !ok || slack.is_nan() {
            self.violations += 1;
            self.first_violation_k.get_or_insert(k);
        }
        if self.worst_slack.is_none_or(|w| slack < w || slack.is_nan()) {
            self.worst_slack = Some(slack);
            self.worst_k = Some(k);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub iterations: usize,
    /// `max(4L, Λ_0 g_0^p)` when `L` is given.
    pub lambda_cap: Option<f64>,
    /// `λ̄` used in the envelope: the cap when available, at least the
    /// largest `λ_k` observed.
    pub lambda_bar: f64,
    /// `p` recovered from the first row, `log(λ_0/(4^{j_0}Λ_0))/log g_0`.
    pub inferred_p: Option<f64>,
    /// Largest `|Σj_i − (k+1) − log₄(Λ_{k+1}/Λ_0)|` over the trace.
    pub counting_residual: f64,
    /// Refresh period the Hessian counts were checked against.
    pub hessian_period: Option<usize>,
    pub checks: Vec<CheckResult>,
    pub order: Option<OrderEstimate>,
    pub order_error: Option<String>,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// All applicable, non-advisory checks passed.
    pub fn all_passed(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| c.applicable && !c.advisory)
            .all(CheckResult::passed)
    }

    /// The named checks are applicable and passed.
    pub fn passed(&self, names: &[&str]) -> bool {
        names
            .iter()
            .all(|n| self.check(n).is_some_and(|c| c.applicable && c.passed()))
    }
}

pub const ACCEPT_INNER: &str = "accept_inner";
pub const ACCEPT_DECREASE: &str = "accept_decrease";
pub const GRAD_VS_STEP: &str = "grad_vs_step";
pub const GRAD_GROWTH: &str = "grad_growth";
pub const DECREASE_VS_GRAD: &str = "decrease_vs_grad";
pub const LAMBDA_CAP: &str = "lambda_cap";
pub const COUNTING: &str = "counting_identity";
pub const HESSIAN_COUNT: &str = "hessian_count";
pub const ENVELOPE: &str = "envelope";

/// Checks every solver trace must pass, whatever the optional inputs.
pub const CORE_CHECKS: [&str; 6] = [
    ACCEPT_INNER,
    ACCEPT_DECREASE,
    GRAD_VS_STEP,
    GRAD_GROWTH,
    DECREASE_VS_GRAD,
    COUNTING,
];

fn infer_period(trace: &Trace) -> Option<usize> {
    let evals: Vec<u64> = trace.records.iter().map(|r| r.hess_evals).collect();
    if evals.is_empty() || evals[0] == 0 {
        return None;
    }
    match evals.iter().position(|&e| e > evals[0]) {
        Some(k) => Some(k),
        None => Some(evals.len()),
    }
}

pub fn verify(trace: &Trace, opts: &VerifyOptions) -> VerifyReport {
    let recs = &trace.records;
    let n = recs.len();

    let mut inner = CheckResult::new(ACCEPT_INNER, "<F'(x_{k+1}), x_k - x_{k+1}> >= g_{k+1}^2 / (2 lambda_k)");
    let mut decr = CheckResult::new(ACCEPT_DECREASE, "F_k - F_{k+1} >= (lambda_k / 4) r_k^2");
    let mut step = CheckResult::new(GRAD_VS_STEP, "g_{k+1} <= 2 lambda_k r_k");
    let mut growth = CheckResult::new(GRAD_GROWTH, "g_{k+1} <= 2 g_k");
    let mut dvg = CheckResult::new(DECREASE_VS_GRAD, "F_k - F_{k+1} >= g_{k+1}^2 / (16 lambda_k)");

    for (k, r) in recs.iter().enumerate() {
        let g1 = trace.next_g(k);
        let f1 = trace.next_objective(k);
        let lam = r.lambda_k;

        let rhs = g1 * g1 / (2.0 * lam);
        inner.record_geq(k, r.inner_prod, rhs, r.inner_prod.abs().max(rhs));

        let dec = r.big_f_val - f1;
        let fscale = r.big_f_val.abs().max(f1.abs());
        let rhs = 0.25 * lam * r.r_k * r.r_k;
        decr.record_geq(k, dec, rhs, fscale.max(rhs));

        let rhs = 2.0 * lam * r.r_k;
        step.record_geq(k, rhs, g1, rhs.max(g1));

        growth.record_geq(k, 2.0 * r.g_k, g1, 2.0 * r.g_k.max(g1));

        let rhs = g1 * g1 / (16.0 * lam);
        dvg.record_geq(k, dec, rhs, fscale.max(rhs));
    }

    let first = recs.first();
    let big_lambda0 = first.map_or(trace.terminal.big_lambda_k, |r| r.big_lambda_k);
    let g0 = first.map_or(trace.terminal.g_k, |r| r.g_k);
    let inferred_p = first.and_then(|r| {
        let base = 4f64.powi(r.j_k as i32) * r.big_lambda_k;
        let p = (r.lambda_k / base).ln() / g0.ln();
        (g0 != 1.0 && p.is_finite()).then_some(p)
    });

    // λ_k ≤ max(4L, Λ_0 g_0^p); λ_0 = 4^{j_0} Λ_0 g_0^p fixes Λ_0 g_0^p.
    let lambda_cap = match (opts.lipschitz, first) {
        (Some(l), Some(r)) => {
            let start = r.lambda_k / 4f64.powi(r.j_k as i32);
            Some((4.0 * l).max(start))
        }
        (Some(l), None) => Some(4.0 * l),
        _ => None,
    };
    let cap = match lambda_cap {
        Some(c) => {
            let mut cap = CheckResult::new(LAMBDA_CAP, "lambda_k <= max(4L, Lambda_0 g_0^p)");
            for (k, r) in recs.iter().enumerate() {
                let ok = r.lambda_k <= c;
                cap.record(k, (c - r.lambda_k) / c, ok);
            }
            cap
        }
        None => CheckResult::not_applicable(LAMBDA_CAP, "lambda_k <= max(4L, Lambda_0 g_0^p) (needs L)"),
    };

    // Σ_{i≤k} j_i = (k+1) + log₄(Λ_{k+1}/Λ_0)
    let mut counting = CheckResult::new(COUNTING, "sum_{i<=k} j_i = (k+1) + log_4(Lambda_{k+1}/Lambda_0)");
    let mut counting_residual = 0.0f64;
    let mut jsum = 0u64;
    for (k, r) in recs.iter().enumerate() {
        jsum += r.j_k as u64;
        let pred = (k + 1) as f64 + (trace.next_big_lambda(k) / big_lambda0).log(4.0);
        let res = (jsum as f64 - pred).abs();
        counting_residual = counting_residual.max(res);
        counting.record(k, -res, res <= COUNTING_TOL);
    }

    // Hessian evaluations: h_k = ⌊k/m⌋ + 1 on every row, terminal = ⌊k_last/m⌋ + 1.
    let hessian_period = opts.m.or_else(|| infer_period(trace));
    let hess = match hessian_period {
        Some(m) if m > 0 => {
            let mut c = CheckResult::new(HESSIAN_COUNT, "hess_evals = floor(k/m) + 1");
            for (k, r) in recs.iter().enumerate() {
                let expect = (k / m) as u64 + 1;
                c.record(k, r.hess_evals as f64 - expect as f64, r.hess_evals == expect);
            }
            if let Some(last) = recs.last() {
                let expect = (last.k / m) as u64 + 1;
                let got = trace.terminal.hess_evals;
                c.record(trace.terminal.k, got as f64 - expect as f64, got == expect);
            }
            c
        }
        _ => CheckResult::not_applicable(HESSIAN_COUNT, "hess_evals = floor(k/m) + 1 (no Hessian evaluations)"),
    };

    // min_{i≤k−1} g_{i+1} ≤ 4 √(λ̄ (F_0 − F*) / k)
    let max_lambda = recs.iter().map(|r| r.lambda_k).fold(0.0f64, f64::max);
    let lambda_bar = lambda_cap.map_or(max_lambda, |c| c.max(max_lambda));
    let envelope = match opts.fstar {
        Some(fstar) => {
            let mut c = CheckResult::new(ENVELOPE, "min_{i<k} g_{i+1} <= 4 sqrt(lambda_bar (F_0 - F*) / k)");
            c.advisory = opts.fstar_advisory;
            let f0 = trace.objective_sequence()[0];
            let gap = f0 - fstar;
            let mut best = f64::INFINITY;
            let mut running_lambda = 0.0f64;
            for (i, r) in recs.iter().enumerate() {
                let k = i + 1;
                best = best.min(trace.next_g(i));
                running_lambda = running_lambda.max(r.lambda_k);
                let lbar = lambda_cap.map_or(running_lambda, |cap| cap.max(running_lambda));
                let bound = 4.0 * (lbar * gap.max(0.0) / k as f64).sqrt();
                let allowed = bound * (1.0 + opts.envelope_tolerance);
                let margin = allowed - best;
                let tol = REL_SLACK * allowed.max(best) + ABS_SLACK;
                c.record(i, margin / allowed.max(best).max(f64::MIN_POSITIVE), margin >= -tol);
            }
            c
        }
        None => CheckResult::not_applicable(ENVELOPE, "envelope (needs F*)"),
    };

    let g_seq = trace.g_sequence();
    let (order, order_error) = match estimate_order(&g_seq, opts.order_tail.unwrap_or(DEFAULT_TAIL)) {
        Ok(o) => (Some(o), None),
        Err(e) => (None, Some(e.to_string())),
    };

    VerifyReport {
        iterations: n,
        lambda_cap,
        lambda_bar,
        inferred_p,
        counting_residual,
        hessian_period,
        checks: vec![inner, decr, step, growth, dvg, cap, counting, hess, envelope],
        order,
        order_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::oracle::tests::DenseQuadratic;
    use crate::oracle::CompositeProblem;
    use crate::ssn::{solve, SolverConfig};
    use std::sync::Arc;

    fn quad_trace(m: usize) -> Trace {
        let a = Matrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let p = CompositeProblem::new("q", Arc::new(DenseQuadratic { a, b: vec![1.0, 2.0] }));
        let cfg = SolverConfig {
            m,
            grad_tol: 1e-12,
            ..Default::default()
        };
        solve(&p, &cfg, vec![5.0, -3.0], vec![0.0; 2]).unwrap().trace
    }

    #[test]
    fn solver_trace_passes_core_checks() {
        let t = quad_trace(1);
        let rep = verify(
            &t,
            &VerifyOptions {
                lipschitz: Some(2.0 * 4.7),
                fstar: Some(-15.0 / 22.0),
                ..Default::default()
            },
        );
        assert!(rep.passed(&CORE_CHECKS), "{rep:#?}");
        assert!(rep.passed(&[COUNTING, HESSIAN_COUNT, LAMBDA_CAP]));
        assert!(rep.counting_residual <= 1e-9);
        assert_eq!(rep.hessian_period, Some(1));
        assert!((rep.inferred_p.unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn corrupted_row_is_reported() {
        let mut t = quad_trace(1);
        assert!(t.records.len() >= 3);
        t.records[2].big_f_val = t.records[1].big_f_val + 1.0;
        let rep = verify(&t, &VerifyOptions::default());
        let dec = rep.check(ACCEPT_DECREASE).unwrap();
        assert!(!dec.passed());
        assert_eq!(dec.first_violation_k, Some(1));
        assert_eq!(rep.check(DECREASE_VS_GRAD).unwrap().first_violation_k, Some(1));
        assert!(!rep.all_passed());
    }

    #[test]
    fn hessian_period_is_inferred() {
        let t = quad_trace(3);
        let rep = verify(&t, &VerifyOptions::default());
        if t.records.len() > 3 {
            assert_eq!(rep.hessian_period, Some(3));
        }
        assert!(rep.check(HESSIAN_COUNT).unwrap().passed());
        let wrong = verify(
            &t,
            &VerifyOptions {
                m: Some(1),
                ..Default::default()
            },
        );
        if t.records.len() > 1 {
            assert!(!wrong.check(HESSIAN_COUNT).unwrap().passed());
        }
    }

    #[test]
    fn optional_checks_need_inputs() {
        let rep = verify(&quad_trace(1), &VerifyOptions::default());
        assert!(!rep.check(LAMBDA_CAP).unwrap().applicable);
        assert!(!rep.check(ENVELOPE).unwrap().applicable);
    }
}
