use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gladssn::harness::{
    self, compare, estimate_order, read_trace, verify, write_summary, write_summary_csv, Emit, RunConfig, SolverKind,
    SummaryRow, VerifyOptions, DEFAULT_TAIL, EXIT_BAD_CONFIG,
};
use gladssn::problems::{write_instance, Instance, ProblemKind, Scale};
use gladssn::{Error, Result};

/// Exit code when `verify` finds a violation or the order is not estimable.
const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Parser)]
#[command(
    name = "gladssn",
    version,
    about = "Lazy adaptive semismooth Newton solver and trace diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and write its trace.
    Run(RunArgs),
    /// Re-check the solver guarantees on a stored trace.
    Verify(VerifyArgs),
    /// Estimate the local convergence order from a stored trace.
    EstimateOrder(OrderArgs),
    /// Run several configurations and print a summary table.
    Compare(CompareArgs),
    /// Write a generated instance to a replayable file.
    Export(ExportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run config; flags given alongside override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<ProblemKind>,
    #[arg(long)]
    solver: Option<SolverKind>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long = "Lambda0", visible_alias = "lambda0")]
    lambda0: Option<f64>,
    #[arg(long = "grad-tol", visible_aliases = ["grad_tol", "tol"])]
    grad_tol: Option<f64>,
    #[arg(long = "max-outer", visible_alias = "max_outer")]
    max_outer: Option<usize>,
    /// Takes precedence over GLADSSN_SEED, which takes precedence over the config file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "out-path", visible_aliases = ["out_path", "out"])]
    out_path: Option<PathBuf>,
    #[arg(long)]
    emit: Option<Emit>,
    #[arg(long)]
    scale: Option<Scale>,
    /// Instance file written by `export`.
    #[arg(long)]
    instance: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match (&self.config, self.problem) {
            (Some(path), _) => RunConfig::from_json_file(path)?,
            (None, Some(kind)) => RunConfig::new(kind),
            (None, None) => return Err(Error::Config("--problem is required unless --config is given".into())),
        };
        if let Some(v) = self.problem {
            c.problem = v;
        }
        if let Some(v) = self.solver {
            c.solver = v;
        }
        if let Some(v) = self.p {
            c.p = v;
        }
        if let Some(v) = self.m {
            c.m = v;
        }
        if let Some(v) = self.lambda0 {
            c.lambda0 = v;
        }
        if let Some(v) = self.grad_tol {
            c.grad_tol = v;
        }
        if let Some(v) = self.max_outer {
            c.max_outer = v;
        }
        if let Some(v) = &self.out_path {
            c.out_path = Some(v.clone());
        }
        if let Some(v) = self.emit {
            c.emit = v;
        }
        if let Some(v) = self.scale {
            c.scale = v;
        }
        if let Some(v) = &self.instance {
            c.instance = Some(v.clone());
        }
        match self.seed {
            Some(s) => c.seed = s,
            None => c.apply_env()?,
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Trace file (CSV or JSON).
    trace: PathBuf,
    /// Lipschitz constant of f'; enables the regularization cap check.
    #[arg(long, visible_alias = "L")]
    lipschitz: Option<f64>,
    /// Optimal value; enables the global envelope check.
    #[arg(long)]
    fstar: Option<f64>,
    /// Treat --fstar as an estimate: envelope violations are reported but do not fail.
    #[arg(long)]
    fstar_advisory: bool,
    /// Relative allowance on the envelope bound.
    #[arg(long, default_value_t = 0.0)]
    envelope_tolerance: f64,
    /// Hessian refresh period; inferred from the trace when omitted.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TAIL)]
    tail: usize,
}

#[derive(Args)]
struct OrderArgs {
    trace: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TAIL)]
    tail: usize,
}

#[derive(Args)]
struct CompareArgs {
    /// JSON config files, each holding one config or an array of configs.
    #[arg(long)]
    config: Vec<PathBuf>,
    /// Sweep axes: comma-separated values, every combination is run.
    #[arg(long, value_delimiter = ',')]
    problem: Vec<ProblemKind>,
    #[arg(long, value_delimiter = ',')]
    solver: Vec<SolverKind>,
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    m: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    #[arg(long = "Lambda0", visible_alias = "lambda0")]
    lambda0: Option<f64>,
    #[arg(long = "grad-tol", visible_aliases = ["grad_tol", "tol"])]
    grad_tol: Option<f64>,
    #[arg(long = "max-outer", visible_alias = "max_outer")]
    max_outer: Option<usize>,
    #[arg(long)]
    scale: Option<Scale>,
    #[arg(long)]
    emit: Option<Emit>,
    /// Summary CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for the per-run traces.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
}

impl CompareArgs {
    fn configs(&self) -> Result<Vec<RunConfig>> {
        let mut out = Vec::new();
        for path in &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("invalid JSON in {}: {e}", path.display())))?;
            let items = match value {
                serde_json::Value::Array(items) => items,
                other => vec![other],
            };
            for item in items {
                let mut c: RunConfig = serde_json::from_value(item)
                    .map_err(|e| Error::Config(format!("invalid run config in {}: {e}", path.display())))?;
                c.apply_env()?;
                out.push(c);
            }
        }

        let env_seed = {
            let mut probe = RunConfig::new(ProblemKind::Quad);
            probe.apply_env()?;
            probe.seed
        };
        let solvers = if self.solver.is_empty() {
            vec![SolverKind::Gladssn]
        } else {
            self.solver.clone()
        };
        let ps = if self.p.is_empty() {
            vec![RunConfig::new(ProblemKind::Quad).p]
        } else {
            self.p.clone()
        };
        let ms = if self.m.is_empty() {
            vec![RunConfig::new(ProblemKind::Quad).m]
        } else {
            self.m.clone()
        };
        let seeds = if self.seed.is_empty() {
            vec![env_seed]
        } else {
            self.seed.clone()
        };
        for &problem in &self.problem {
            for &solver in &solvers {
                let (ps, ms) = match solver {
                    SolverKind::Gladssn => (ps.as_slice(), ms.as_slice()),
                    SolverKind::Armijo => (&ps[..1], &ms[..1]),
                };
                for &p in ps {
                    for &m in ms {
                        for &seed in &seeds {
                            let mut c = RunConfig::new(problem);
                            c.solver = solver;
                            c.p = p;
                            c.m = m;
                            c.seed = seed;
                            out.push(c);
                        }
                    }
                }
            }
        }

        for c in &mut out {
            if let Some(v) = self.lambda0 {
                c.lambda0 = v;
            }
            if let Some(v) = self.grad_tol {
                c.grad_tol = v;
            }
            if let Some(v) = self.max_outer {
                c.max_outer = v;
            }
            if let Some(v) = self.scale {
                c.scale = v;
            }
            if let Some(v) = self.emit {
                c.emit = v;
            }
        }
        if let Some(dir) = &self.trace_dir {
            std::fs::create_dir_all(dir)?;
            for (i, c) in out.iter_mut().enumerate() {
                c.out_path = Some(dir.join(trace_file_name(i, c)));
            }
        }
        Ok(out)
    }
}

fn trace_file_name(index: usize, c: &RunConfig) -> String {
    let ext = match c.emit {
        Emit::Csv => "csv",
        Emit::Json => "json",
    };
    match c.solver {
        SolverKind::Gladssn => format!("{index:02}_{}_gladssn_p{}_m{}_s{}.{ext}", c.problem, c.p, c.m, c.seed),
        SolverKind::Armijo => format!("{index:02}_{}_armijo_s{}.{ext}", c.problem, c.seed),
    }
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    problem: ProblemKind,
    #[arg(long, default_value = "full")]
    scale: Scale,
    /// Takes precedence over GLADSSN_SEED.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

fn print_json<T: serde::Serialize + ?Sized>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<i32> {
    let config = args.resolve()?;
    let result = harness::run(&config);
    let row = SummaryRow::from_run(&config, &result);
    let outcome = result?;
    print_json(&row)?;
    Ok(outcome.exit_code())
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let trace = read_trace(&args.trace)?;
    let opts = VerifyOptions {
        lipschitz: args.lipschitz,
        fstar: args.fstar,
        fstar_advisory: args.fstar_advisory,
        envelope_tolerance: args.envelope_tolerance,
        m: args.m,
        order_tail: Some(args.tail),
    };
    let report = verify(&trace, &opts);
    print_json(&report)?;
    for c in report.checks.iter().filter(|c| c.applicable && !c.passed()) {
        eprintln!(
            "{}{}: {} violation(s), first at k={}",
            c.name,
            if c.advisory { " (advisory)" } else { "" },
            c.violations,
            c.first_violation_k.map_or("?".into(), |k| k.to_string())
        );
    }
    Ok(if report.all_passed() { 0 } else { EXIT_CHECK_FAILED })
}

fn cmd_estimate_order(args: &OrderArgs) -> Result<i32> {
    let trace = read_trace(&args.trace)?;
    match estimate_order(&trace.g_sequence(), args.tail) {
        Ok(est) => {
            print_json(&est)?;
            Ok(0)
        }
        Err(e @ Error::NotEstimable(_)) => {
            eprintln!("{e}");
            Ok(EXIT_CHECK_FAILED)
        }
        Err(e) => Err(e),
    }
}

fn cmd_compare(args: &CompareArgs) -> Result<i32> {
    let configs = args.configs()?;
    let outcome = compare(&configs)?;
    for row in outcome.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("{}: {}", row.label, row.error.as_deref().unwrap_or_default());
    }
    match &args.out {
        Some(path) => write_summary(&outcome.rows, path)?,
        None => write_summary_csv(&outcome.rows, io::stdout().lock())?,
    }
    Ok(outcome.exit_code)
}

fn cmd_export(args: &ExportArgs) -> Result<i32> {
    let mut probe = RunConfig::new(args.problem);
    match args.seed {
        Some(s) => probe.seed = s,
        None => probe.apply_env()?,
    }
    let instance = Instance::generate(args.problem, args.scale, probe.seed)?;
    write_to(&args.out, |w| write_instance(&instance, w))?;
    eprintln!(
        "wrote {} instance (seed {}) to {}",
        args.problem,
        probe.seed,
        args.out.display()
    );
    Ok(0)
}

fn write_to(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_BAD_CONFIG as u8 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::EstimateOrder(a) => cmd_estimate_order(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Export(a) => cmd_export(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_BAD_CONFIG as u8)
        }
    }
}
