//! Seeded benchmark instances.
//!
//! Every generator draws from [`SeededRng`] in a fixed order, so the same seed
//! yields bitwise-identical data. Initial points come from a separate jumped
//! stream (see [`SeededRng::initial_point_stream`]).

mod huber;
mod io;
mod nmf;
mod quadratic;
pub mod rng;
mod svm;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use huber::HuberInstance;
pub use io::{read_instance, write_instance};
pub use nmf::{NmfInstance, NmfShape, DENSE_HESSIAN_MAX_DIM};
pub use quadratic::QuadInstance;
pub use rng::SeededRng;
pub use svm::SvmInstance;

use crate::error::{Error, Result};
use crate::linalg::{power_iteration, SymMatrix};
use crate::oracle::{CompositeProblem, SmoothOracle};

const LIPSCHITZ_POWER_ITERS: usize = 500;

/// `2·(scale·λ_max(gram) + shift)`, with `λ_max` from power iteration.
pub(crate) fn safe_lipschitz(gram: &SymMatrix, scale: f64, shift: f64) -> f64 {
    let top = power_iteration(gram.n(), |v, out| gram.matvec_into(v, out), LIPSCHITZ_POWER_ITERS);
    2.0 * (scale * top + shift)
}

pub fn make_nmf(seed: u64) -> CompositeProblem {
    NmfInstance::with_defaults(seed, NmfShape::FULL).problem()
}

pub fn make_svm(seed: u64) -> CompositeProblem {
    let (samples, features) = SvmInstance::FULL;
    SvmInstance::generate(seed, samples, features, SvmInstance::GAMMA).problem()
}

pub fn make_huber(seed: u64, m: usize, n: usize, delta: f64, ridge: f64) -> Result<CompositeProblem> {
    Ok(HuberInstance::generate(seed, m, n, delta, ridge)?.problem())
}

pub fn make_quadratic(seed: u64, n: usize, cond: f64) -> Result<CompositeProblem> {
    QuadInstance::generate(seed, n, cond)?.problem()
}

/// `(1/2β)(‖U₋‖² + ‖V₋‖²)`
pub fn penalty_violation(x: &[f64], instance: &NmfInstance) -> f64 {
    instance.penalty_violation(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Nmf,
    Svm,
    Huber,
    Quad,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 4] = [
        ProblemKind::Nmf,
        ProblemKind::Svm,
        ProblemKind::Huber,
        ProblemKind::Quad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Nmf => "nmf",
            ProblemKind::Svm => "svm",
            ProblemKind::Huber => "huber",
            ProblemKind::Quad => "quad",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown problem '{s}' (expected nmf, svm, huber or quad)")))
    }
}

/// Instance size: `Full` uses the published dimensions, `Reduced` the
/// CI-sized ones (NMF 40×20 rank 4, SVM 2000×50). Huber and the quadratic
/// have a single size.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Full,
    Reduced,
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Scale::Full),
            "reduced" => Ok(Scale::Reduced),
            _ => Err(Error::Config(format!("unknown scale '{s}' (expected full or reduced)"))),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Instance {
    Nmf(Arc<NmfInstance>),
    Svm(Arc<SvmInstance>),
    Huber(Arc<HuberInstance>),
    Quad(Arc<QuadInstance>),
}

impl Instance {
    pub fn generate(kind: ProblemKind, scale: Scale, seed: u64) -> Result<Self> {
        Ok(match kind {
            ProblemKind::Nmf => {
                let shape = match scale {
                    Scale::Full => NmfShape::FULL,
                    Scale::Reduced => NmfShape::REDUCED,
                };
                Instance::Nmf(Arc::new(NmfInstance::with_defaults(seed, shape)))
            }
            ProblemKind::Svm => {
                let (l, n) = match scale {
                    Scale::Full => SvmInstance::FULL,
                    Scale::Reduced => SvmInstance::REDUCED,
                };
                Instance::Svm(Arc::new(SvmInstance::generate(seed, l, n, SvmInstance::GAMMA)))
            }
            ProblemKind::Huber => Instance::Huber(Arc::new(HuberInstance::with_defaults(seed))),
            ProblemKind::Quad => Instance::Quad(Arc::new(QuadInstance::generate(
                seed,
                QuadInstance::DIM,
                QuadInstance::COND,
            )?)),
        })
    }

    pub fn kind(&self) -> ProblemKind {
        match self {
            Instance::Nmf(_) => ProblemKind::Nmf,
            Instance::Svm(_) => ProblemKind::Svm,
            Instance::Huber(_) => ProblemKind::Huber,
            Instance::Quad(_) => ProblemKind::Quad,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Instance::Nmf(i) => i.seed,
            Instance::Svm(i) => i.seed,
            Instance::Huber(i) => i.seed,
            Instance::Quad(i) => i.seed,
        }
    }

    pub fn smooth(&self) -> Arc<dyn SmoothOracle> {
        match self {
            Instance::Nmf(i) => i.clone(),
            Instance::Svm(i) => i.clone(),
            Instance::Huber(i) => i.clone(),
            Instance::Quad(i) => i.clone(),
        }
    }

    pub fn problem(&self) -> Result<CompositeProblem> {
        let p = CompositeProblem::new(self.kind().name(), self.smooth());
        match self {
            Instance::Quad(q) => p.with_fstar(q.fstar()).with_xstar(q.xstar().to_vec()),
            _ => Ok(p),
        }
    }

    /// Default starting point: `N(0, 0.5²)` for NMF, the origin otherwise.
    pub fn initial_point(&self) -> Vec<f64> {
        match self {
            Instance::Nmf(i) => i.initial_point(),
            Instance::Svm(i) => i.initial_point(),
            Instance::Huber(i) => i.initial_point(),
            Instance::Quad(i) => i.initial_point(),
        }
    }

    /// `count` seeded random points at least `kink_eps` away from every kink
    /// of the Hessian selection.
    pub fn sample_points(&self, seed: u64, count: usize, kink_eps: f64) -> Vec<Vec<f64>> {
        let smooth = self.smooth();
        let dim = smooth.dim();
        let std_dev = match self {
            Instance::Nmf(_) => NmfInstance::INIT_STD,
            Instance::Svm(_) => 0.05,
            Instance::Huber(_) | Instance::Quad(_) => 1.0,
        };
        let mut rng = SeededRng::new(seed);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let x = rng.normals(dim, std_dev);
            if !smooth.near_kink(&x, kink_eps) {
                out.push(x);
            }
        }
        out
    }
}
