use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::trace_io::Emit;
use crate::baselines::ArmijoConfig;
use crate::error::{Error, Result};
use crate::problems::{ProblemKind, Scale};
use crate::ssn::SolverConfig;

pub const SEED_ENV: &str = "GLADSSN_SEED";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Gladssn,
    Armijo,
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gladssn" => Ok(SolverKind::Gladssn),
            "armijo" => Ok(SolverKind::Armijo),
            _ => Err(Error::Config(format!(
                "unknown solver '{s}' (expected gladssn or armijo)"
            ))),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverKind::Gladssn => "gladssn",
            SolverKind::Armijo => "armijo",
        })
    }
}

fn default_p() -> f64 {
    0.5
}
fn default_m() -> usize {
    1
}
fn default_lambda0() -> f64 {
    1.0
}
fn default_grad_tol() -> f64 {
    1e-8
}
fn default_max_outer() -> usize {
    1000
}
fn default_seed() -> u64 {
    1
}

/// One solver run. Only `problem` is required; the JSON form rejects unknown
/// keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemKind,
    #[serde(default)]
    pub solver: SolverKind,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(rename = "Lambda0", default = "default_lambda0")]
    pub lambda0: f64,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out_path: Option<PathBuf>,
    #[serde(default)]
    pub emit: Emit,
    #[serde(default)]
    pub scale: Scale,
    /// Load the instance (and its stored `x0`) from an exported file instead
    /// of generating it from `seed`.
    #[serde(default)]
    pub instance: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(problem: ProblemKind) -> Self {
        RunConfig {
            problem,
            solver: SolverKind::default(),
            p: default_p(),
            m: default_m(),
            lambda0: default_lambda0(),
            grad_tol: default_grad_tol(),
            max_outer: default_max_outer(),
            seed: default_seed(),
            out_path: None,
            emit: Emit::default(),
            scale: Scale::default(),
            instance: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid run config: {e}")))
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Replaces `seed` with the value of `GLADSSN_SEED` when it is set.
    pub fn apply_env(&mut self) -> Result<()> {
        self.apply_seed_override(std::env::var(SEED_ENV).ok().as_deref())
    }

    pub fn apply_seed_override(&mut self, value: Option<&str>) -> Result<()> {
        if let Some(v) = value {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}='{v}' is not an unsigned integer")))?;
        }
        Ok(())
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            p: self.p,
            m: self.m,
            lambda0: self.lambda0,
            grad_tol: self.grad_tol,
            max_outer: self.max_outer,
            ..SolverConfig::default()
        }
    }

    pub fn armijo_config(&self) -> ArmijoConfig {
        ArmijoConfig {
            grad_tol: self.grad_tol,
            max_outer: self.max_outer,
            ..ArmijoConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.solver {
            SolverKind::Gladssn => self.solver_config().validate(),
            SolverKind::Armijo => self.armijo_config().validate(),
        }
    }

    pub fn label(&self) -> String {
        match self.solver {
            SolverKind::Gladssn => format!("{}/gladssn p={} m={} seed={}", self.problem, self.p, self.m, self.seed),
            SolverKind::Armijo => format!("{}/armijo seed={}", self.problem, self.seed),
        }
    }
}
