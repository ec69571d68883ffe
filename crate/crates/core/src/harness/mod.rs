//! Run configuration, trace files, and the diagnostics that check traces
//! against the solver's guarantees.

mod config;
mod order;
mod run;
mod trace_io;
mod verify;

pub use config::{RunConfig, SolverKind, SEED_ENV};
pub use order::{estimate_order, OrderEstimate, DEFAULT_TAIL, FLOOR_FACTOR, MIN_TRANSITIONS};
pub use run::{
    compare, exit_code, load_instance, run, write_summary, write_summary_csv, CompareOutcome, RunOutcome, SummaryRow,
    EXIT_BAD_CONFIG, EXIT_CONVERGED, EXIT_MAX_ITER, EXIT_STALLED,
};
pub use trace_io::{read_csv, read_json, read_trace, write_csv, write_json, write_trace, Emit, CSV_HEADER};
pub use verify::{
    verify, CheckResult, VerifyOptions, VerifyReport, ABS_SLACK, ACCEPT_DECREASE, ACCEPT_INNER, CORE_CHECKS, COUNTING,
    COUNTING_TOL, DECREASE_VS_GRAD, ENVELOPE, GRAD_GROWTH, GRAD_VS_STEP, HESSIAN_COUNT, LAMBDA_CAP, REL_SLACK,
};
