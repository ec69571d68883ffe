use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;
use std::thread;

use serde::{Deserialize, Serialize};

use super::config::{RunConfig, SolverKind};
use super::trace_io::write_trace;
use crate::baselines::armijo_gd;
use crate::error::{Error, Result};
use crate::oracle::CompositeProblem;
use crate::problems::{read_instance, Instance};
use crate::ssn::{solve, SolveReport, SolveStatus};

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_BAD_CONFIG: i32 = 1;
pub const EXIT_MAX_ITER: i32 = 2;
pub const EXIT_STALLED: i32 = 3;

pub fn exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged => EXIT_CONVERGED,
        SolveStatus::MaxIter => EXIT_MAX_ITER,
        SolveStatus::Stalled => EXIT_STALLED,
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub instance: Instance,
    pub problem: CompositeProblem,
    pub report: SolveReport,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        exit_code(self.report.status)
    }
}

/// Builds the configured instance and its starting point.
pub fn load_instance(config: &RunConfig) -> Result<(Instance, Vec<f64>)> {
    match &config.instance {
        Some(path) => {
            let file =
                File::open(path).map_err(|e| Error::Config(format!("cannot open instance {}: {e}", path.display())))?;
            let (inst, x0) = read_instance(BufReader::new(file))?;
            if inst.kind() != config.problem {
                return Err(Error::Config(format!(
                    "instance file holds a {} problem, config asks for {}",
                    inst.kind(),
                    config.problem
                )));
            }
            Ok((inst, x0))
        }
        None => {
            let inst = Instance::generate(config.problem, config.scale, config.seed)?;
            let x0 = inst.initial_point();
            Ok((inst, x0))
        }
    }
}

/// Solves the configured problem and writes the trace when `out_path` is set.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let (instance, x0) = load_instance(config)?;
    let problem = instance.problem()?;
    let report = match config.solver {
        SolverKind::Gladssn => {
            let n = x0.len();
            solve(&problem, &config.solver_config(), x0, vec![0.0; n])?
        }
        SolverKind::Armijo => armijo_gd(&problem, &config.armijo_config(), x0)?,
    };
    if let Some(path) = &config.out_path {
        write_trace(&report.trace, path, config.emit)?;
    }
    Ok(RunOutcome {
        config: config.clone(),
        instance,
        problem,
        report,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub problem: String,
    pub solver: String,
    pub p: f64,
    pub m: usize,
    pub seed: u64,
    pub status: Option<SolveStatus>,
    pub exit_code: i32,
    /// Accepted outer iterations.
    pub iterations: usize,
    pub trials: u64,
    pub hess_evals: u64,
    pub wall_ms: f64,
    pub final_g: f64,
    pub final_objective: f64,
    pub error: Option<String>,
}

impl SummaryRow {
    /// Summarizes one run; a failed run keeps its config columns and the error.
    pub fn from_run(config: &RunConfig, result: &Result<RunOutcome>) -> Self {
        let mut row = SummaryRow {
            label: config.label(),
            problem: config.problem.to_string(),
            solver: config.solver.to_string(),
            p: config.p,
            m: config.m,
            seed: config.seed,
            status: None,
            exit_code: EXIT_BAD_CONFIG,
            iterations: 0,
            trials: 0,
            hess_evals: 0,
            wall_ms: 0.0,
            final_g: f64::NAN,
            final_objective: f64::NAN,
            error: None,
        };
        match result {
            Ok(out) => {
                let t = &out.report.trace.terminal;
                row.status = Some(out.report.status);
                row.exit_code = out.exit_code();
                row.iterations = t.k;
                row.trials = t.trials;
                row.hess_evals = t.hess_evals;
                row.wall_ms = t.wall_ns as f64 / 1e6;
                row.final_g = t.g_k;
                row.final_objective = t.big_f_val;
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        row
    }
}

#[derive(Debug)]
pub struct CompareOutcome {
    pub rows: Vec<SummaryRow>,
    pub runs: Vec<Result<RunOutcome>>,
    /// First nonzero member exit code in config order, else 0.
    pub exit_code: i32,
}

/// Runs every config concurrently and summarizes them in input order.
pub fn compare(configs: &[RunConfig]) -> Result<CompareOutcome> {
    if configs.len() < 2 {
        return Err(Error::Config(format!(
            "compare needs at least 2 configs, got {}",
            configs.len()
        )));
    }
    let runs: Vec<Result<RunOutcome>> = thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(move || run(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Config("run panicked".into()))))
            .collect()
    });
    let rows: Vec<SummaryRow> = configs
        .iter()
        .zip(&runs)
        .map(|(c, r)| SummaryRow::from_run(c, r))
        .collect();
    let exit_code = rows.iter().map(|r| r.exit_code).find(|&c| c != 0).unwrap_or(0);
    Ok(CompareOutcome { rows, runs, exit_code })
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "label",
        "problem",
        "solver",
        "p",
        "m",
        "seed",
        "status",
        "exit_code",
        "iterations",
        "trials",
        "hess_evals",
        "wall_ms",
        "final_g",
        "final_objective",
        "error",
    ])?;
    for r in rows {
        w.write_record([
            r.label.clone(),
            r.problem.clone(),
            r.solver.clone(),
            format!("{:?}", r.p),
            r.m.to_string(),
            r.seed.to_string(),
            r.status.map_or(String::new(), |s| format!("{s:?}")),
            r.exit_code.to_string(),
            r.iterations.to_string(),
            r.trials.to_string(),
            r.hess_evals.to_string(),
            format!("{:.3}", r.wall_ms),
            format!("{:?}", r.final_g),
            format!("{:?}", r.final_objective),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<()> {
    write_summary_csv(rows, File::create(path)?)
}
