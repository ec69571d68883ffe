//! Gradient descent with Armijo backtracking for smooth problems.
//!
//! Each iteration starts from `t = t0` and shrinks `t ← backtrack·t` until
//! `f(x − t∇f) ≤ f(x) − c1·t‖∇f‖²`. The trace reuses the solver schema:
//! `j_k` is the number of backtracks, `lambda_k = 1/t`, `Lambda_k = 1/t0`,
//! `hess_evals` stays 0 and `trials` counts objective evaluations.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, dot, sub};
use crate::oracle::CompositeProblem;
use crate::ssn::{SolveReport, SolveStatus};
use crate::trace::{TerminalRecord, Trace, TraceRecord};

/// Backtracks allowed before a step is declared stalled.
pub const MAX_BACKTRACKS: u32 = 60;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmijoConfig {
    pub c1: f64,
    pub backtrack: f64,
    pub t0: f64,
    pub grad_tol: f64,
    pub max_outer: usize,
}

impl Default for ArmijoConfig {
    fn default() -> Self {
        ArmijoConfig {
            c1: 1e-4,
            backtrack: 0.5,
            t0: 1.0,
            grad_tol: 1e-8,
            max_outer: 200_000,
        }
    }
}

impl ArmijoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c1 < 1.0) {
            return Err(Error::Config(format!("c1 must lie in (0, 1), got {}", self.c1)));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::Config(format!(
                "backtrack must lie in (0, 1), got {}",
                self.backtrack
            )));
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(Error::Config(format!("t0 must be positive, got {}", self.t0)));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(Error::Config(format!(
                "grad_tol must be non-negative, got {}",
                self.grad_tol
            )));
        }
        Ok(())
    }
}

pub fn armijo_gd(problem: &CompositeProblem, config: &ArmijoConfig, x0: Vec<f64>) -> Result<SolveReport> {
    config.validate()?;
    if !problem.psi.is_zero() {
        return Err(Error::Config(
            "the Armijo baseline handles smooth problems only (psi must be zero)".into(),
        ));
    }
    if x0.len() != problem.dim() {
        return Err(Error::Dimension(format!(
            "problem has dimension {}, x0 has {}",
            problem.dim(),
            x0.len()
        )));
    }
    let started = Instant::now();
    let f = &problem.smooth;
    let mut x = x0;
    let mut f_val = f.value(&x);
    let mut grad = f.gradient(&x);
    if !f_val.is_finite() || !all_finite(&grad) {
        return Err(Error::NonFinite {
            k: 0,
            quantity: "objective",
        });
    }
    let mut evals: u64 = 1;
    let mut records = Vec::new();

    let status = loop {
        let k = records.len();
        let g = problem.metric.dual_norm(&grad);
        if g <= config.grad_tol {
            break SolveStatus::Converged;
        }
        if k >= config.max_outer {
            break SolveStatus::MaxIter;
        }
        let gg = dot(&grad, &grad);
        let mut t = config.t0;
        let mut accepted = None;
        for backtracks in 0..=MAX_BACKTRACKS {
            let x_plus: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - t * gi).collect();
            evals += 1;
            let decrease = f.decrease(&x, &x_plus);
            if decrease >= config.c1 * t * gg {
                accepted = Some((backtracks, t, x_plus));
                break;
            }
            t *= config.backtrack;
        }
        let Some((backtracks, t, x_plus)) = accepted else {
            break SolveStatus::Stalled;
        };
        let grad_plus = f.gradient(&x_plus);
        let f_plus = f.value(&x_plus);
        if !f_plus.is_finite() || !all_finite(&grad_plus) {
            return Err(Error::NonFinite {
                k: k + 1,
                quantity: "objective",
            });
        }
        let back = sub(&x, &x_plus);
        records.push(TraceRecord {
            k,
            j_k: backtracks,
            lambda_k: 1.0 / t,
            big_lambda_k: 1.0 / config.t0,
            f_val,
            big_f_val: f_val,
            g_k: g,
            r_k: problem.metric.norm(&back),
            inner_prod: dot(&grad_plus, &back),
            hess_evals: 0,
            trials: evals,
            wall_ns: started.elapsed().as_nanos() as u64,
        });
        x = x_plus;
        grad = grad_plus;
        f_val = f_plus;
    };

    let terminal = TerminalRecord {
        k: records.len(),
        big_lambda_k: 1.0 / config.t0,
        f_val,
        big_f_val: f_val,
        g_k: problem.metric.dual_norm(&grad),
        hess_evals: 0,
        trials: evals,
        wall_ns: started.elapsed().as_nanos() as u64,
    };
    Ok(SolveReport {
        status,
        x,
        trace: Trace { records, terminal },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::tests::half_norm_sq;
    use crate::oracle::SimpleConvexPart;

    #[test]
    fn unit_step_solves_half_norm() {
        let p = half_norm_sq(2);
        let rep = armijo_gd(&p, &ArmijoConfig::default(), vec![1.0, 0.0]).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged);
        assert_eq!(rep.trace.len(), 1);
        assert_eq!(rep.x, vec![0.0, 0.0]);
        assert_eq!(rep.trace.records[0].j_k, 0);
        assert_eq!(rep.trace.records[0].lambda_k, 1.0);
    }

    #[test]
    fn backtracks_when_unit_step_overshoots() {
        let p = half_norm_sq(3);
        let cfg = ArmijoConfig {
            t0: 4.0,
            ..Default::default()
        };
        let rep = armijo_gd(&p, &cfg, vec![1.0, -2.0, 0.5]).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged);
        // t = 4 and t = 2 fail, t = 1 lands on the minimizer
        assert_eq!(rep.trace.records[0].j_k, 2);
        assert_eq!(rep.trace.records[0].lambda_k, 1.0);
    }

    #[test]
    fn armijo_inequality_holds_along_trace() {
        use crate::problems::{Instance, ProblemKind, Scale};
        let inst = Instance::generate(ProblemKind::Huber, Scale::Reduced, 4).unwrap();
        let p = inst.problem().unwrap();
        let cfg = ArmijoConfig {
            max_outer: 300,
            ..Default::default()
        };
        let rep = armijo_gd(&p, &cfg, inst.initial_point()).unwrap();
        let f = rep.trace.objective_sequence();
        for (k, r) in rep.trace.records.iter().enumerate() {
            let t = 1.0 / r.lambda_k;
            let slack = 1e-12 * f[k].abs().max(1.0);
            assert!(f[k] - f[k + 1] >= cfg.c1 * t * r.g_k * r.g_k - slack, "row {k}");
            assert!(f[k + 1] <= f[k] + slack, "row {k}");
        }
    }

    #[test]
    fn rejects_nonsmooth_and_bad_config() {
        let p = half_norm_sq(2).with_psi(SimpleConvexPart::l1(1.0));
        assert!(matches!(
            armijo_gd(&p, &ArmijoConfig::default(), vec![0.0; 2]),
            Err(Error::Config(_))
        ));
        let bad = ArmijoConfig {
            c1: 1.5,
            ..Default::default()
        };
        assert!(armijo_gd(&half_norm_sq(2), &bad, vec![0.0; 2]).is_err());
        let bad = ArmijoConfig {
            backtrack: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn max_iter_is_reported() {
        let p = half_norm_sq(2);
        let cfg = ArmijoConfig {
            t0: 0.1,
            max_outer: 3,
            ..Default::default()
        };
        let rep = armijo_gd(&p, &cfg, vec![1.0, 1.0]).unwrap();
        assert_eq!(rep.status, SolveStatus::MaxIter);
        assert_eq!(rep.trace.len(), 3);
        assert_eq!(rep.trace.terminal.k, 3);
    }
}
