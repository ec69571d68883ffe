use super::dense::{dot, SymMatrix};
use crate::error::{Error, Result};

/// Relative pivot floor: a pivot at or below `PIVOT_RTOL * trace / n` marks the
/// matrix as not positive definite.
pub const PIVOT_RTOL: f64 = 1e-14;

/// Lower-triangular Cholesky factor `A = L Lᵀ`, packed row-major in a dense buffer.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &SymMatrix) -> Result<Self> {
        let n = a.n();
        if n == 0 {
            return Ok(Cholesky { n, l: Vec::new() });
        }
        let floor = PIVOT_RTOL * a.as_matrix().trace() / n as f64;
        if !(floor > 0.0) {
            return Err(Error::NotPositiveDefinite {
                index: 0,
                pivot: a[(0, 0)],
            });
        }
        let mut l = a.as_matrix().as_slice().to_vec();
        for j in 0..n {
            let (done, rest) = l.split_at_mut((j + 1) * n);
            let row_j = &mut done[j * n..];
            let d = row_j[j] - dot(&row_j[..j], &row_j[..j]);
            if !(d > floor) {
                return Err(Error::NotPositiveDefinite { index: j, pivot: d });
            }
            let d = d.sqrt();
            row_j[j] = d;
            row_j[j + 1..].fill(0.0);
            let row_j = &done[j * n..];
            for row_i in rest.chunks_exact_mut(n) {
                row_i[j] = (row_i[j] - dot(&row_i[..j], &row_j[..j])) / d;
            }
        }
        Ok(Cholesky { n, l })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let s = dot(&self.l[i * n..i * n + i], &y[..i]);
            y[i] = (y[i] - s) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let s: f64 = ((i + 1)..n).map(|k| self.l[k * n + i] * y[k]).sum();
            y[i] = (y[i] - s) / self.l[i * n + i];
        }
        y
    }
}
