//! Plain-text instance container.
//!
//! ```text
//! gladssn-instance 1
//! kind <nmf|svm|huber|quad>
//! param <name> <value>          (zero or more)
//! matrix <name> f64 <rows> <cols>
//! <rows lines, each with cols whitespace-separated values>
//! vector <name> f64 <len>
//! <one line with len values>
//! end
//! ```
//!
//! Values are written with shortest round-trip formatting, so a read after a
//! write reproduces every entry bit for bit. Lines starting with `#` are
//! comments.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use super::{
    HuberInstance, Instance, NmfInstance, NmfShape, ProblemKind, QuadInstance, SvmInstance, DENSE_HESSIAN_MAX_DIM,
};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix};

const MAGIC: &str = "gladssn-instance";
const VERSION: u32 = 1;

pub fn write_instance<W: Write>(instance: &Instance, mut out: W) -> Result<()> {
    writeln!(out, "{MAGIC} {VERSION}")?;
    writeln!(out, "kind {}", instance.kind())?;
    writeln!(out, "param seed {}", instance.seed())?;
    match instance {
        Instance::Nmf(i) => {
            writeln!(out, "param r {}", i.shape.r)?;
            writeln!(out, "param alpha {:?}", i.alpha)?;
            writeln!(out, "param beta {:?}", i.beta)?;
            writeln!(out, "param sigma {:?}", i.sigma)?;
            write_matrix(&mut out, "Y", &i.y)?;
        }
        Instance::Svm(i) => {
            writeln!(out, "param gamma {:?}", i.gamma)?;
            write_matrix(&mut out, "X", &i.x)?;
            write_vector(&mut out, "y", &i.y)?;
        }
        Instance::Huber(i) => {
            writeln!(out, "param delta {:?}", i.delta)?;
            writeln!(out, "param ridge {:?}", i.ridge)?;
            write_matrix(&mut out, "A", &i.a)?;
            write_vector(&mut out, "b", &i.b)?;
        }
        Instance::Quad(i) => {
            write_matrix(&mut out, "A", i.a.as_matrix())?;
            write_vector(&mut out, "b", &i.b)?;
        }
    }
    write_vector(&mut out, "x0", &instance.initial_point())?;
    writeln!(out, "end")?;
    out.flush()?;
    Ok(())
}

fn write_matrix<W: Write>(out: &mut W, name: &str, m: &Matrix) -> Result<()> {
    writeln!(out, "matrix {name} f64 {} {}", m.rows(), m.cols())?;
    for i in 0..m.rows() {
        write_values(out, m.row(i))?;
    }
    Ok(())
}

fn write_vector<W: Write>(out: &mut W, name: &str, v: &[f64]) -> Result<()> {
    writeln!(out, "vector {name} f64 {}", v.len())?;
    write_values(out, v)
}

fn write_values<W: Write>(out: &mut W, values: &[f64]) -> Result<()> {
    let mut line = String::with_capacity(values.len() * 20);
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            line.push(' ');
        }
        line.push_str(&format!("{v:?}"));
    }
    writeln!(out, "{line}")?;
    Ok(())
}

#[derive(Default)]
struct Container {
    kind: Option<ProblemKind>,
    params: BTreeMap<String, String>,
    matrices: BTreeMap<String, Matrix>,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl Container {
    fn param<T: std::str::FromStr>(&self, name: &str) -> Result<T> {
        let raw = self
            .params
            .get(name)
            .ok_or_else(|| Error::Parse(format!("missing param '{name}'")))?;
        raw.parse()
            .map_err(|_| Error::Parse(format!("param '{name}' has invalid value '{raw}'")))
    }

    fn matrix(&mut self, name: &str) -> Result<Matrix> {
        self.matrices
            .remove(name)
            .ok_or_else(|| Error::Parse(format!("missing matrix '{name}'")))
    }

    fn vector(&mut self, name: &str) -> Result<Vec<f64>> {
        self.vectors
            .remove(name)
            .ok_or_else(|| Error::Parse(format!("missing vector '{name}'")))
    }
}

/// Reads an instance and the stored initial point.
pub fn read_instance<R: BufRead>(input: R) -> Result<(Instance, Vec<f64>)> {
    let mut lines = input
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty() && !s.starts_with('#')));
    let mut next_line = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, line)) => Ok((n + 1, line?)),
            None => Err(Error::Parse(format!("unexpected end of file, expected {what}"))),
        }
    };

    let (n, header) = next_line("header")?;
    let mut head = header.split_whitespace();
    if head.next() != Some(MAGIC) || head.next() != Some("1") {
        return Err(Error::Parse(format!("line {n}: expected '{MAGIC} {VERSION}'")));
    }

    let mut c = Container::default();
    loop {
        let (n, line) = next_line("'end'")?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["end"] => break,
            ["kind", k] => c.kind = Some(k.parse()?),
            ["param", name, value] => {
                c.params.insert(name.to_string(), value.to_string());
            }
            ["matrix", name, "f64", rows, cols] => {
                let rows = parse_dim(rows, n)?;
                let cols = parse_dim(cols, n)?;
                let mut data = Vec::with_capacity(rows * cols);
                for _ in 0..rows {
                    let (rn, row) = next_line("matrix row")?;
                    let vals = parse_values(&row, rn)?;
                    if vals.len() != cols {
                        return Err(Error::Parse(format!(
                            "line {rn}: expected {cols} values, found {}",
                            vals.len()
                        )));
                    }
                    data.extend(vals);
                }
                c.matrices.insert(name.to_string(), Matrix::from_vec(rows, cols, data)?);
            }
            ["vector", name, "f64", len] => {
                let len = parse_dim(len, n)?;
                let vals = if len == 0 {
                    Vec::new()
                } else {
                    let (vn, row) = next_line("vector values")?;
                    let vals = parse_values(&row, vn)?;
                    if vals.len() != len {
                        return Err(Error::Parse(format!(
                            "line {vn}: expected {len} values, found {}",
                            vals.len()
                        )));
                    }
                    vals
                };
                c.vectors.insert(name.to_string(), vals);
            }
            ["matrix" | "vector", _, dtype, ..] if *dtype != "f64" => {
                return Err(Error::Parse(format!("line {n}: unsupported dtype '{dtype}'")));
            }
            _ => return Err(Error::Parse(format!("line {n}: unrecognized entry '{line}'"))),
        }
    }

    let kind = c.kind.ok_or_else(|| Error::Parse("missing 'kind' line".into()))?;
    let seed: u64 = c.param("seed")?;
    let x0 = c.vector("x0")?;
    let instance = match kind {
        ProblemKind::Nmf => {
            let y = c.matrix("Y")?;
            let r: usize = c.param("r")?;
            Instance::Nmf(Arc::new(NmfInstance {
                shape: NmfShape {
                    d: y.rows(),
                    n: y.cols(),
                    r,
                },
                y,
                alpha: c.param("alpha")?,
                beta: c.param("beta")?,
                sigma: c.param("sigma")?,
                seed,
                dense_max_dim: DENSE_HESSIAN_MAX_DIM,
            }))
        }
        ProblemKind::Svm => {
            let x = c.matrix("X")?;
            let y = c.vector("y")?;
            if y.len() != x.rows() || y.iter().any(|v| *v != 1.0 && *v != -1.0) {
                return Err(Error::Parse("svm labels must be ±1, one per row of X".into()));
            }
            Instance::Svm(Arc::new(SvmInstance {
                x,
                y,
                gamma: c.param("gamma")?,
                seed,
            }))
        }
        ProblemKind::Huber => {
            let mut inst = HuberInstance::new(c.matrix("A")?, c.vector("b")?, c.param("delta")?, c.param("ridge")?)?;
            inst.seed = seed;
            Instance::Huber(Arc::new(inst))
        }
        ProblemKind::Quad => {
            let a = SymMatrix::new(c.matrix("A")?)?;
            let mut inst = QuadInstance::from_parts(a, c.vector("b")?)?;
            inst.seed = seed;
            Instance::Quad(Arc::new(inst))
        }
    };
    let dim = instance.smooth().dim();
    if x0.len() != dim {
        return Err(Error::Parse(format!(
            "x0 has length {}, instance dimension is {dim}",
            x0.len()
        )));
    }
    Ok((instance, x0))
}

fn parse_dim(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::Parse(format!("line {line}: invalid dimension '{tok}'")))
}

fn parse_values(line: &str, n: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {n}: invalid number '{t}'")))
        })
        .collect()
}
