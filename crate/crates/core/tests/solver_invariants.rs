use std::fs::File;
use std::io::BufReader;

use gladssn::harness::{read_csv, read_trace, verify, write_csv, write_trace, Emit, VerifyOptions, CORE_CHECKS};
use gladssn::problems::{read_instance, write_instance, Instance, ProblemKind, Scale};
use gladssn::ssn::{solve, SolveReport, SolverConfig};
use gladssn::trace::{TerminalRecord, Trace, TraceRecord};
use proptest::prelude::*;

fn run(kind: ProblemKind, seed: u64, config: &SolverConfig) -> SolveReport {
    let inst = Instance::generate(kind, Scale::Reduced, seed).unwrap();
    let problem = inst.problem().unwrap();
    let x0 = inst.initial_point();
    let n = x0.len();
    solve(&problem, config, x0, vec![0.0; n]).unwrap()
}

/// Drops the columns that legitimately differ between otherwise identical runs.
fn strip(trace: &Trace, keep_hess: bool) -> Vec<TraceRecord> {
    trace
        .records
        .iter()
        .cloned()
        .map(|mut r| {
            r.wall_ns = 0;
            if !keep_hess {
                r.hess_evals = 0;
            }
            r
        })
        .collect()
}

#[test]
fn objective_never_increases() {
    for kind in ProblemKind::ALL {
        let rep = run(kind, 1, &SolverConfig::default());
        for r in &rep.trace.records {
            let next = rep.trace.next_objective(r.k);
            let slack = 1e-12 * r.big_f_val.abs().max(1.0);
            assert!(
                next <= r.big_f_val + slack,
                "{kind} k={}: {} -> {next}",
                r.k,
                r.big_f_val
            );
        }
    }
}

#[test]
fn step_is_bounded_by_gradient_over_lambda_on_convex_problems() {
    for kind in [ProblemKind::Quad, ProblemKind::Huber, ProblemKind::Svm] {
        for m in [1, 5] {
            let rep = run(
                kind,
                2,
                &SolverConfig {
                    m,
                    ..SolverConfig::default()
                },
            );
            for r in &rep.trace.records {
                let bound = r.g_k / r.lambda_k;
                assert!(
                    r.r_k <= bound * (1.0 + 1e-8) + 1e-14,
                    "{kind} m={m} k={}: {} > {bound}",
                    r.k,
                    r.r_k
                );
            }
        }
    }
}

#[test]
fn lazy_hessian_changes_nothing_on_a_quadratic() {
    let eager = run(
        ProblemKind::Quad,
        3,
        &SolverConfig {
            m: 1,
            ..SolverConfig::default()
        },
    );
    let lazy = run(
        ProblemKind::Quad,
        3,
        &SolverConfig {
            m: 10,
            ..SolverConfig::default()
        },
    );
    assert_eq!(strip(&eager.trace, false), strip(&lazy.trace, false));
    assert_eq!(eager.x, lazy.x);
    assert!(lazy.trace.terminal.hess_evals < eager.trace.terminal.hess_evals || eager.trace.len() <= 1);
}

#[test]
fn verify_accepts_solver_traces() {
    for kind in [ProblemKind::Quad, ProblemKind::Huber, ProblemKind::Svm] {
        for (p, m) in [(0.0, 1), (0.5, 1), (0.5, 4)] {
            let rep = run(
                kind,
                1,
                &SolverConfig {
                    p,
                    m,
                    ..SolverConfig::default()
                },
            );
            let report = verify(
                &rep.trace,
                &VerifyOptions {
                    m: Some(m),
                    ..VerifyOptions::default()
                },
            );
            assert!(report.passed(&CORE_CHECKS), "{kind} p={p} m={m}: {report:#?}");
        }
    }
}

#[test]
fn repeated_runs_are_identical() {
    let a = run(ProblemKind::Huber, 7, &SolverConfig::default());
    let b = run(ProblemKind::Huber, 7, &SolverConfig::default());
    assert_eq!(strip(&a.trace, true), strip(&b.trace, true));
    assert_eq!(a.x, b.x);
}

#[test]
fn trace_files_round_trip() {
    let rep = run(ProblemKind::Svm, 1, &SolverConfig::default());
    let dir = tempfile::tempdir().unwrap();
    for (emit, name) in [(Emit::Csv, "t.csv"), (Emit::Json, "t.json")] {
        let path = dir.path().join(name);
        write_trace(&rep.trace, &path, emit).unwrap();
        assert_eq!(read_trace(&path).unwrap(), rep.trace);
    }
}

#[test]
fn exported_instance_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ProblemKind::ALL {
        let inst = Instance::generate(kind, Scale::Reduced, 5).unwrap();
        let path = dir.path().join(format!("{kind}.txt"));
        write_instance(&inst, File::create(&path).unwrap()).unwrap();
        let (loaded, x0) = read_instance(BufReader::new(File::open(&path).unwrap())).unwrap();
        assert_eq!(x0, inst.initial_point());

        let config = SolverConfig {
            max_outer: 20,
            ..SolverConfig::default()
        };
        let n = x0.len();
        let original = solve(&inst.problem().unwrap(), &config, inst.initial_point(), vec![0.0; n]).unwrap();
        let reloaded = solve(&loaded.problem().unwrap(), &config, x0, vec![0.0; n]).unwrap();
        assert_eq!(strip(&original.trace, true), strip(&reloaded.trace, true), "{kind}");
    }
}

fn finite() -> impl Strategy<Value = f64> {
    use prop::num::f64::{NEGATIVE, NORMAL, POSITIVE, SUBNORMAL, ZERO};
    POSITIVE | NEGATIVE | NORMAL | SUBNORMAL | ZERO
}

fn record() -> impl Strategy<Value = TraceRecord> {
    (
        (0u32..40, finite(), finite(), finite(), finite(), finite()),
        (finite(), finite(), any::<u64>(), any::<u64>(), any::<u64>()),
    )
        .prop_map(
            |((j_k, lambda_k, big_lambda_k, f_val, big_f_val, g_k), (r_k, inner_prod, hess_evals, trials, wall_ns))| {
                TraceRecord {
                    k: 0,
                    j_k,
                    lambda_k,
                    big_lambda_k,
                    f_val,
                    big_f_val,
                    g_k,
                    r_k,
                    inner_prod,
                    hess_evals,
                    trials,
                    wall_ns,
                }
            },
        )
}

proptest! {
    #[test]
    fn csv_round_trip_is_lossless(
        mut records in prop::collection::vec(record(), 0..12),
        tail in (finite(), finite(), finite(), finite(), any::<u64>(), any::<u64>(), any::<u64>()),
    ) {
        for (i, r) in records.iter_mut().enumerate() {
            r.k = i;
        }
        let terminal = TerminalRecord {
            k: records.len(),
            big_lambda_k: tail.0,
            f_val: tail.1,
            big_f_val: tail.2,
            g_k: tail.3,
            hess_evals: tail.4,
            trials: tail.5,
            wall_ns: tail.6,
        };
        let trace = Trace { records, terminal };
        let mut buf = Vec::new();
        write_csv(&trace, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, trace);
    }
}
