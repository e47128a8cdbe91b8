//! Positive-definite linear algebra.
//!
//! [`solve_psd`] and [`log_det_psd`] are direct Cholesky routines. [`GrowableInverse`] keeps
//! an explicit inverse that gains one row and column at a time through the Schur complement,
//! at O(t²) cost per growth.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{GpError, Result};

/// Relative jitter floor: growth fails when the Schur complement drops below this multiple
/// of the prior observation variance σ_f² + σ_n².
pub const JITTER_FLOOR_SCALE: f64 = 1e-10;

/// Explicit inverse of a symmetric positive definite matrix grown by bordering.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowableInverse {
    inv: DMatrix<f64>,
}

impl Default for GrowableInverse {
    fn default() -> Self {
        Self::empty()
    }
}

impl GrowableInverse {
    /// The inverse of a 0×0 matrix.
    pub fn empty() -> Self {
        GrowableInverse {
            inv: DMatrix::zeros(0, 0),
        }
    }

    /// Inverts `a` directly via Cholesky.
    pub fn from_spd(a: &DMatrix<f64>) -> Result<Self> {
        let chol = cholesky(a)?;
        let mut inv = chol.inverse();
        symmetrize(&mut inv);
        Ok(GrowableInverse { inv })
    }

    pub fn dim(&self) -> usize {
        self.inv.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.inv
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inv
    }

    /// Returns the inverse of `[[A, b], [bᵀ, d]]` where `A⁻¹` is `self`.
    ///
    /// Fails with [`GpError::SchurBelowFloor`] when `s = d − bᵀA⁻¹b` is below `floor`.
    pub fn grow(&self, b: &[f64], d: f64, floor: f64) -> Result<Self> {
        let mut ops = 0;
        self.grow_counted(b, d, floor, &mut ops)
    }

    /// [`grow`](Self::grow) that adds the number of scalar multiply-adds it performs to `ops`.
    pub fn grow_counted(&self, b: &[f64], d: f64, floor: f64, ops: &mut u64) -> Result<Self> {
        let t = self.dim();
        if b.len() != t {
            return Err(GpError::invalid(format!(
                "border vector has length {}, expected {t}",
                b.len()
            )));
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(GpError::invalid(format!(
                "new diagonal entry must be positive, got {d}"
            )));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(GpError::invalid("border vector has non-finite entries"));
        }

        // c = A⁻¹ b
        let mut c = vec![0.0; t];
        for (j, &bj) in b.iter().enumerate() {
            let col = self.inv.column(j);
            for (ci, aij) in c.iter_mut().zip(col.iter()) {
                *ci += aij * bj;
            }
        }
        *ops += (t * t) as u64;

        let s = d - b.iter().zip(&c).map(|(x, y)| x * y).sum::<f64>();
        *ops += t as u64;
        if s.is_nan() || s <= floor {
            return Err(GpError::SchurBelowFloor { schur: s, floor });
        }

        let inv_s = 1.0 / s;
        let mut out = DMatrix::zeros(t + 1, t + 1);
        for j in 0..t {
            let cj = c[j] * inv_s;
            for i in 0..=j {
                let v = self.inv[(i, j)] + c[i] * cj;
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
            out[(t, j)] = -cj;
            out[(j, t)] = -cj;
        }
        out[(t, t)] = inv_s;
        *ops += (t * (t + 1) / 2 + t + 1) as u64;
        Ok(GrowableInverse { inv: out })
    }

    /// Computes `inv · v`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.inv * v
    }
}

/// Solves `A·X = B` for symmetric positive definite `A`.
pub fn solve_psd(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if b.nrows() != a.nrows() {
        return Err(GpError::invalid(format!(
            "right-hand side has {} rows, matrix has {}",
            b.nrows(),
            a.nrows()
        )));
    }
    Ok(cholesky(a)?.solve(b))
}

/// log|A| for symmetric positive definite `A`, as twice the sum of log Cholesky pivots.
pub fn log_det_psd(a: &DMatrix<f64>) -> Result<f64> {
    let chol = cholesky(a)?;
    Ok(chol_log_det(&chol))
}

pub(crate) fn chol_log_det(chol: &Cholesky<f64, nalgebra::Dyn>) -> f64 {
    2.0 * chol
        .l_dirty()
        .diagonal()
        .iter()
        .map(|v| v.ln())
        .sum::<f64>()
}

pub(crate) fn cholesky(a: &DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    if !a.is_square() {
        return Err(GpError::invalid(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(GpError::invalid("matrix has non-finite entries"));
    }
    Cholesky::new(a.clone()).ok_or_else(|| {
        GpError::NotPositiveDefinite(format!("cholesky failed on {0}x{0} matrix", a.nrows()))
    })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}
