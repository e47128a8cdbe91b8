//! Squared-exponential covariance and Gram-matrix construction.

use nalgebra::DMatrix;

use crate::error::{GpError, Result};

/// Hyperparameters of the squared-exponential kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparameters {
    /// σ_f², the prior variance of the latent function.
    pub signal_variance: f64,
    pub lengthscale: f64,
    /// σ_n², the observation noise variance. Zero means noiseless.
    pub noise_variance: f64,
}

impl Hyperparameters {
    pub fn new(signal_variance: f64, lengthscale: f64, noise_variance: f64) -> Result<Self> {
        let h = Hyperparameters {
            signal_variance,
            lengthscale,
            noise_variance,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return Err(GpError::invalid(format!(
                "signal variance must be positive and finite, got {}",
                self.signal_variance
            )));
        }
        if !(self.lengthscale.is_finite() && self.lengthscale > 0.0) {
            return Err(GpError::invalid(format!(
                "lengthscale must be positive and finite, got {}",
                self.lengthscale
            )));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(GpError::invalid(format!(
                "noise variance must be non-negative and finite, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }

    /// Prior variance of a noisy observation, σ_f² + σ_n².
    pub fn total_variance(&self) -> f64 {
        self.signal_variance + self.noise_variance
    }

    /// Kernel value without input validation. Callers guarantee finite inputs of equal length.
    #[inline]
    pub(crate) fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        self.signal_variance * (-sq / (2.0 * self.lengthscale * self.lengthscale)).exp()
    }
}

/// Evaluates σ_f²·exp(−‖a−b‖²/(2l²)), plus σ_n² when `include_noise` is set.
///
/// `include_noise` stands for the Kronecker delta of the kernel: set it only when `a` and
/// `b` are the same indexed training point, never because their coordinates coincide.
pub fn se_kernel(a: &[f64], b: &[f64], h: &Hyperparameters, include_noise: bool) -> Result<f64> {
    if a.len() != b.len() {
        return Err(GpError::invalid(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(GpError::invalid(
            "input points must have at least one coordinate",
        ));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(GpError::invalid("non-finite input coordinate"));
    }
    h.validate()?;
    let noise = if include_noise { h.noise_variance } else { 0.0 };
    Ok(h.eval(a, b) + noise)
}

/// Builds the m×n matrix of kernel values between `xa` and `xb`.
///
/// With `add_noise_on_diagonal`, `xa` and `xb` must be the same indexed set and σ_n² is
/// added to every (i, i) entry.
pub fn gram_matrix(
    xa: &[Vec<f64>],
    xb: &[Vec<f64>],
    h: &Hyperparameters,
    add_noise_on_diagonal: bool,
) -> Result<DMatrix<f64>> {
    if xa.is_empty() || xb.is_empty() {
        return Err(GpError::invalid("gram matrix needs non-empty input lists"));
    }
    if add_noise_on_diagonal && xa.len() != xb.len() {
        return Err(GpError::invalid(
            "diagonal noise requires the same input set on both sides",
        ));
    }
    h.validate()?;
    check_points(xa)?;
    check_points(xb)?;
    if xa[0].len() != xb[0].len() {
        return Err(GpError::invalid("input sets differ in dimension"));
    }
    let mut k = DMatrix::from_fn(xa.len(), xb.len(), |i, j| h.eval(&xa[i], &xb[j]));
    if add_noise_on_diagonal {
        for i in 0..xa.len() {
            k[(i, i)] += h.noise_variance;
        }
    }
    Ok(k)
}

/// Checks that every point is finite and all share one non-zero dimension.
pub(crate) fn check_points(x: &[Vec<f64>]) -> Result<usize> {
    let dim = x.first().map_or(0, Vec::len);
    if dim == 0 {
        return Err(GpError::invalid(
            "input points must have at least one coordinate",
        ));
    }
    for (i, p) in x.iter().enumerate() {
        if p.len() != dim {
            return Err(GpError::invalid(format!(
                "point {i} has dimension {}, expected {dim}",
                p.len()
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(GpError::invalid(format!(
                "point {i} has a non-finite coordinate"
            )));
        }
    }
    Ok(dim)
}
