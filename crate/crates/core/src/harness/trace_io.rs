//! Trace persistence.
//!
//! CSV files carry the header
//! `k,j_k,lambda_k,Lambda_k,f_val,F_val,g_k,r_k,inner_prod,hess_evals,trials,wall_ns`,
//! one row per accepted iteration, then one terminal row for the final
//! iterate whose `j_k`, `lambda_k`, `r_k` and `inner_prod` cells are empty.
//! Floats use shortest round-trip formatting. JSON files hold
//! `{"records": [...], "terminal": {...}}` with the same field names.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{TerminalRecord, Trace, TraceRecord};

pub const CSV_HEADER: [&str; 12] = [
    "k",
    "j_k",
    "lambda_k",
    "Lambda_k",
    "f_val",
    "F_val",
    "g_k",
    "r_k",
    "inner_prod",
    "hess_evals",
    "trials",
    "wall_ns",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Emit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Emit::Csv),
            "json" => Ok(Emit::Json),
            _ => Err(Error::Config(format!(
                "unknown emit format '{s}' (expected csv or json)"
            ))),
        }
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_csv<W: Write>(trace: &Trace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &trace.records {
        w.write_record([
            r.k.to_string(),
            r.j_k.to_string(),
            fmt_f64(r.lambda_k),
            fmt_f64(r.big_lambda_k),
            fmt_f64(r.f_val),
            fmt_f64(r.big_f_val),
            fmt_f64(r.g_k),
            fmt_f64(r.r_k),
            fmt_f64(r.inner_prod),
            r.hess_evals.to_string(),
            r.trials.to_string(),
            r.wall_ns.to_string(),
        ])?;
    }
    let t = &trace.terminal;
    w.write_record([
        t.k.to_string(),
        String::new(),
        String::new(),
        fmt_f64(t.big_lambda_k),
        fmt_f64(t.f_val),
        fmt_f64(t.big_f_val),
        fmt_f64(t.g_k),
        String::new(),
        String::new(),
        t.hess_evals.to_string(),
        t.trials.to_string(),
        t.wall_ns.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct JsonTrace {
    records: Vec<TraceRecord>,
    terminal: TerminalRecord,
}

pub fn write_json<W: Write>(trace: &Trace, out: W) -> Result<()> {
    let doc = JsonTrace {
        records: trace.records.clone(),
        terminal: trace.terminal.clone(),
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}

pub fn write_trace(trace: &Trace, path: &Path, emit: Emit) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    match emit {
        Emit::Csv => write_csv(trace, file),
        Emit::Json => write_json(trace, file),
    }
}

fn cell<T: std::str::FromStr>(row: &csv::StringRecord, idx: usize, line: u64) -> Result<T> {
    let raw = row.get(idx).unwrap_or("");
    raw.trim().parse().map_err(|_| {
        Error::Parse(format!(
            "line {line}: column {} has invalid value '{raw}'",
            CSV_HEADER[idx]
        ))
    })
}

pub fn read_csv<R: Read>(input: R) -> Result<Trace> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().map(str::trim).ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse(format!(
            "trace header must be '{}', found '{}'",
            CSV_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut records = Vec::new();
    let mut terminal = None;
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if terminal.is_some() {
            return Err(Error::Parse(format!("line {line}: row after the terminal row")));
        }
        if row.len() != CSV_HEADER.len() {
            return Err(Error::Parse(format!(
                "line {line}: expected 12 columns, found {}",
                row.len()
            )));
        }
        if row.get(1).is_some_and(|s| s.trim().is_empty()) {
            terminal = Some(TerminalRecord {
                k: cell(&row, 0, line)?,
                big_lambda_k: cell(&row, 3, line)?,
                f_val: cell(&row, 4, line)?,
                big_f_val: cell(&row, 5, line)?,
                g_k: cell(&row, 6, line)?,
                hess_evals: cell(&row, 9, line)?,
                trials: cell(&row, 10, line)?,
                wall_ns: cell(&row, 11, line)?,
            });
        } else {
            let rec = TraceRecord {
                k: cell(&row, 0, line)?,
                j_k: cell(&row, 1, line)?,
                lambda_k: cell(&row, 2, line)?,
                big_lambda_k: cell(&row, 3, line)?,
                f_val: cell(&row, 4, line)?,
                big_f_val: cell(&row, 5, line)?,
                g_k: cell(&row, 6, line)?,
                r_k: cell(&row, 7, line)?,
                inner_prod: cell(&row, 8, line)?,
                hess_evals: cell(&row, 9, line)?,
                trials: cell(&row, 10, line)?,
                wall_ns: cell(&row, 11, line)?,
            };
            if rec.k != records.len() {
                return Err(Error::Parse(format!(
                    "line {line}: expected k = {}, found {}",
                    records.len(),
                    rec.k
                )));
            }
            records.push(rec);
        }
    }
    let terminal = terminal.ok_or_else(|| Error::Parse("trace has no terminal row".into()))?;
    if terminal.k != records.len() {
        return Err(Error::Parse(format!(
            "terminal row has k = {}, expected {}",
            terminal.k,
            records.len()
        )));
    }
    Ok(Trace { records, terminal })
}

pub fn read_json<R: Read>(input: R) -> Result<Trace> {
    let doc: JsonTrace = serde_json::from_reader(input)?;
    Ok(Trace {
        records: doc.records,
        terminal: doc.terminal,
    })
}

/// Reads a CSV or JSON trace, choosing by the first non-blank byte.
pub fn read_trace(path: &Path) -> Result<Trace> {
    let mut text = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut text)?;
    if text.trim_start().starts_with('{') {
        read_json(text.as_bytes())
    } else {
        read_csv(text.as_bytes())
    }
}
