//! Batch Gaussian-process regression: the predictive posterior, the log marginal
//! likelihood, and hyperparameter pre-selection on a random subset.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{GpError, Result};
use crate::kernel::{check_points, gram_matrix, Hyperparameters};
use crate::linalg::{chol_log_det, cholesky, GrowableInverse};
use crate::optim::{self, SimplexSettings};

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub generator: String,
    pub n: usize,
    pub domain: (f64, f64),
    pub noise_std: f64,
    pub seed: u64,
}

/// Paired inputs and targets. Every input has the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    pub metadata: Option<Provenance>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(GpError::invalid("dataset needs at least one point"));
        }
        if inputs.len() != targets.len() {
            return Err(GpError::invalid(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        check_points(&inputs)?;
        if let Some(i) = targets.iter().position(|v| !v.is_finite()) {
            return Err(GpError::invalid(format!("target {i} is not finite")));
        }
        Ok(Dataset {
            inputs,
            targets,
            metadata: None,
        })
    }

    /// Builds a one-dimensional dataset from scalar inputs.
    pub fn from_1d(x: &[f64], y: &[f64]) -> Result<Self> {
        Self::new(x.iter().map(|&v| vec![v]).collect(), y.to_vec())
    }

    pub fn with_metadata(mut self, metadata: Provenance) -> Self {
        self.metadata = Some(metadata);
        self
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// The points at `idx`, in that order. Metadata is dropped.
    pub fn subset(&self, idx: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.len()) {
            return Err(GpError::invalid(format!("index {bad} out of range")));
        }
        Dataset::new(
            idx.iter().map(|&i| self.inputs[i].clone()).collect(),
            idx.iter().map(|&i| self.targets[i]).collect(),
        )
    }
}

/// Predictive covariance, either the full matrix or just its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Full(DMatrix<f64>),
    Diagonal(DVector<f64>),
}

impl Covariance {
    pub fn variances(&self) -> DVector<f64> {
        match self {
            Covariance::Full(m) => m.diagonal(),
            Covariance::Diagonal(v) => v.clone(),
        }
    }
}

/// Posterior of the latent function at a set of test inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub mean: DVector<f64>,
    pub cov: Covariance,
}

impl Prediction {
    /// Adds σ_n² to the variances, turning latent intervals into observation intervals.
    pub fn with_observation_noise(mut self, noise_variance: f64) -> Self {
        match &mut self.cov {
            Covariance::Full(m) => {
                for i in 0..m.nrows() {
                    m[(i, i)] += noise_variance;
                }
            }
            Covariance::Diagonal(v) => v.add_scalar_mut(noise_variance),
        }
        self
    }
}

/// A zero-mean GP conditioned on a training set, holding `(K + σ_n²I)⁻¹` explicitly.
#[derive(Debug, Clone)]
pub struct GpModel {
    hypers: Hyperparameters,
    train_inputs: Vec<Vec<f64>>,
    train_targets: Vec<f64>,
    inverse: GrowableInverse,
    alpha: DVector<f64>,
}

impl GpModel {
    /// Conditions on `data` by direct inversion of the regularized Gram matrix.
    pub fn fit(data: &Dataset, hypers: Hyperparameters) -> Result<Self> {
        let k = gram_matrix(data.inputs(), data.inputs(), &hypers, true)?;
        let inverse = GrowableInverse::from_spd(&k)?;
        Self::from_parts(
            hypers,
            data.inputs().to_vec(),
            data.targets().to_vec(),
            inverse,
        )
    }

    /// The unconditioned prior.
    pub fn prior(hypers: Hyperparameters) -> Result<Self> {
        hypers.validate()?;
        Ok(GpModel {
            hypers,
            train_inputs: Vec::new(),
            train_targets: Vec::new(),
            inverse: GrowableInverse::empty(),
            alpha: DVector::zeros(0),
        })
    }

    /// Assembles a model from a precomputed inverse of `K + σ_n²I` over `inputs`.
    pub fn from_parts(
        hypers: Hyperparameters,
        inputs: Vec<Vec<f64>>,
        targets: Vec<f64>,
        inverse: GrowableInverse,
    ) -> Result<Self> {
        hypers.validate()?;
        if inputs.len() != targets.len() || inverse.dim() != inputs.len() {
            return Err(GpError::invalid(format!(
                "inconsistent model parts: {} inputs, {} targets, inverse of dim {}",
                inputs.len(),
                targets.len(),
                inverse.dim()
            )));
        }
        if !inputs.is_empty() {
            check_points(&inputs)?;
        }
        let alpha = inverse.apply(&DVector::from_column_slice(&targets));
        Ok(GpModel {
            hypers,
            train_inputs: inputs,
            train_targets: targets,
            inverse,
            alpha,
        })
    }

    pub fn hypers(&self) -> &Hyperparameters {
        &self.hypers
    }

    pub fn train_inputs(&self) -> &[Vec<f64>] {
        &self.train_inputs
    }

    pub fn train_targets(&self) -> &[f64] {
        &self.train_targets
    }

    pub fn inverse(&self) -> &GrowableInverse {
        &self.inverse
    }

    pub fn len(&self) -> usize {
        self.train_inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_inputs.is_empty()
    }

    /// Latent posterior mean and covariance at `test`.
    ///
    /// Variances are clamped at zero. With no training points this is the prior.
    pub fn predict(&self, test: &[Vec<f64>], full_cov: bool) -> Result<Prediction> {
        if test.is_empty() {
            return Err(GpError::invalid("no test inputs"));
        }
        let prior_var = |x: &Vec<f64>| self.hypers.eval(x, x);
        if self.is_empty() {
            check_points(test)?;
            let cov = if full_cov {
                Covariance::Full(gram_matrix(test, test, &self.hypers, false)?)
            } else {
                Covariance::Diagonal(DVector::from_iterator(
                    test.len(),
                    test.iter().map(prior_var),
                ))
            };
            return Ok(Prediction {
                mean: DVector::zeros(test.len()),
                cov,
            });
        }

        let k_star = gram_matrix(test, &self.train_inputs, &self.hypers, false)?;
        let mean = &k_star * &self.alpha;
        // v = K_* (K + σ²I)⁻¹
        let v = &k_star * self.inverse.matrix();
        let diag = DVector::from_iterator(
            test.len(),
            test.iter().enumerate().map(|(i, x)| {
                let explained = v.row(i).dot(&k_star.row(i));
                (prior_var(x) - explained).max(0.0)
            }),
        );
        let cov = if full_cov {
            let mut c = gram_matrix(test, test, &self.hypers, false)? - &v * k_star.transpose();
            c.set_diagonal(&diag);
            Covariance::Full(c)
        } else {
            Covariance::Diagonal(diag)
        };
        Ok(Prediction { mean, cov })
    }
}

/// log N(y; 0, K + σ_n²I).
pub fn log_marginal_likelihood(x: &[Vec<f64>], y: &[f64], h: &Hyperparameters) -> Result<f64> {
    if x.is_empty() || x.len() != y.len() {
        return Err(GpError::invalid(format!(
            "need matching non-empty inputs and targets, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let k = gram_matrix(x, x, h, true)?;
    let chol = cholesky(&k)?;
    let yv = DVector::from_column_slice(y);
    let alpha = chol.solve(&yv);
    let n = y.len() as f64;
    Ok(-0.5 * yv.dot(&alpha) - 0.5 * chol_log_det(&chol) - 0.5 * n * (2.0 * PI).ln())
}

/// Settings for the multi-start log-space simplex search over (σ_f², l, σ_n²).
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub starts: usize,
    pub log_signal_variance_bounds: (f64, f64),
    pub log_lengthscale_bounds: (f64, f64),
    pub log_noise_variance_bounds: (f64, f64),
    pub simplex: SimplexSettings,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            starts: 8,
            log_signal_variance_bounds: (-6.0, 6.0),
            log_lengthscale_bounds: (-4.0, 4.0),
            log_noise_variance_bounds: (-10.0, 4.0),
            simplex: SimplexSettings::default(),
        }
    }
}

impl SearchConfig {
    fn bounds(&self) -> [(f64, f64); 3] {
        [
            self.log_signal_variance_bounds,
            self.log_lengthscale_bounds,
            self.log_noise_variance_bounds,
        ]
    }
}

/// One restart of the hyperparameter search.
#[derive(Debug, Clone)]
pub struct StartOutcome {
    /// Log-space start point (log σ_f², log l, log σ_n²).
    pub initial: [f64; 3],
    /// LML at the start point, `-inf` if it could not be evaluated.
    pub initial_lml: f64,
    pub best: [f64; 3],
    pub best_lml: f64,
}

/// Result of [`fit_hyperparameters`].
#[derive(Debug, Clone)]
pub struct FittedHypers {
    pub hypers: Hyperparameters,
    /// LML of `hypers` on the subset.
    pub lml: f64,
    /// Dataset indices of the subset, in draw order.
    pub subset: Vec<usize>,
    pub starts: Vec<StartOutcome>,
}

/// Default pre-selection subset size: min(N, 100).
pub fn default_subset_size(n: usize) -> usize {
    n.min(100)
}

/// Draws `size` distinct indices from `0..n` uniformly, seeded.
pub fn draw_subset(n: usize, size: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_subset_with(&mut rng, n, size)
}

fn draw_subset_with(rng: &mut ChaCha8Rng, n: usize, size: usize) -> Result<Vec<usize>> {
    if size == 0 || size > n {
        return Err(GpError::invalid(format!(
            "subset size {size} must be in 1..={n}"
        )));
    }
    Ok(rand::seq::index::sample(rng, n, size).into_vec())
}

fn from_log(p: &[f64]) -> Hyperparameters {
    Hyperparameters {
        signal_variance: p[0].exp(),
        lengthscale: p[1].exp(),
        noise_variance: p[2].exp(),
    }
}

/// Maximizes the LML over a seeded random subset of `data`.
///
/// The first start is placed from the data scale; the rest are uniform in the log box.
/// Ties between starts resolve to the lowest start index.
pub fn fit_hyperparameters(
    data: &Dataset,
    subset_size: usize,
    seed: u64,
    config: &SearchConfig,
) -> Result<FittedHypers> {
    if config.starts == 0 {
        return Err(GpError::invalid("search needs at least one start"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subset = draw_subset_with(&mut rng, data.len(), subset_size)?;
    let sub = data.subset(&subset)?;
    let bounds = config.bounds();

    let mut starts = Vec::with_capacity(config.starts);
    starts.push(data_informed_start(&sub, &bounds));
    for _ in 1..config.starts {
        starts.push(bounds.map(|(lo, hi)| rng.random_range(lo..=hi)));
    }

    let objective =
        |p: &[f64]| match log_marginal_likelihood(sub.inputs(), sub.targets(), &from_log(p)) {
            Ok(v) if v.is_finite() => -v,
            _ => f64::INFINITY,
        };

    let outcomes: Vec<StartOutcome> = starts
        .par_iter()
        .map(|x0| {
            let initial_lml = -objective(x0);
            let out = optim::minimize(objective, x0, &bounds, &config.simplex);
            StartOutcome {
                initial: *x0,
                initial_lml,
                best: [out.x[0], out.x[1], out.x[2]],
                best_lml: -out.value,
            }
        })
        .collect();

    let mut best: Option<&StartOutcome> = None;
    for o in &outcomes {
        if o.best_lml.is_finite() && best.is_none_or(|b| o.best_lml > b.best_lml) {
            best = Some(o);
        }
    }
    let best = best.ok_or_else(|| {
        GpError::NotPositiveDefinite("every hyperparameter start failed to factorize".into())
    })?;
    Ok(FittedHypers {
        hypers: from_log(&best.best),
        lml: best.best_lml,
        subset,
        starts: outcomes,
    })
}

fn data_informed_start(sub: &Dataset, bounds: &[(f64, f64); 3]) -> [f64; 3] {
    let n = sub.len() as f64;
    let y = sub.targets();
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let d = sub.dim();
    let spread = (0..d)
        .map(|j| {
            let m = sub.inputs().iter().map(|p| p[j]).sum::<f64>() / n;
            (sub.inputs().iter().map(|p| (p[j] - m).powi(2)).sum::<f64>() / n).sqrt()
        })
        .sum::<f64>()
        / d as f64;
    let raw = [var.ln(), (0.5 * spread).ln(), (0.01 * var).ln()];
    let mut out = [0.0; 3];
    for i in 0..3 {
        let (lo, hi) = bounds[i];
        let v = if raw[i].is_finite() { raw[i] } else { lo };
        out[i] = v.clamp(lo, hi);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hp(sf: f64, l: f64, sn: f64) -> Hyperparameters {
        Hyperparameters::new(sf, l, sn).unwrap()
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![], vec![]).is_err());
        assert!(Dataset::from_1d(&[0.0, 1.0], &[1.0]).is_err());
        assert!(Dataset::from_1d(&[0.0], &[f64::NAN]).is_err());
        assert!(Dataset::new(vec![vec![0.0], vec![0.0, 1.0]], vec![1.0, 2.0]).is_err());
        let d = Dataset::from_1d(&[0.0, 1.0, 2.0], &[3.0, 4.0, 5.0]).unwrap();
        assert_eq!(d.subset(&[2, 0]).unwrap().targets(), &[5.0, 3.0]);
        assert!(d.subset(&[3]).is_err());
    }

    #[test]
    fn prior_prediction() {
        let m = GpModel::prior(hp(2.0, 1.0, 0.1)).unwrap();
        let test = vec![vec![0.0], vec![0.5]];
        let p = m.predict(&test, true).unwrap();
        assert_eq!(p.mean, DVector::zeros(2));
        let k = gram_matrix(&test, &test, m.hypers(), false).unwrap();
        assert_eq!(p.cov, Covariance::Full(k));
        let d = m.predict(&test, false).unwrap();
        assert_eq!(d.cov.variances(), DVector::from_vec(vec![2.0, 2.0]));
    }

    #[test]
    fn near_noiseless_interpolation() {
        let data = Dataset::from_1d(&[0.0, 1.0, 2.5, 4.0], &[0.3, -1.0, 2.0, 0.5]).unwrap();
        let m = GpModel::fit(&data, hp(1.0, 1.0, 1e-12)).unwrap();
        let p = m.predict(data.inputs(), false).unwrap();
        for (mu, y) in p.mean.iter().zip(data.targets()) {
            assert!((mu - y).abs() < 1e-4);
        }
    }

    #[test]
    fn empty_test_set_is_rejected() {
        let m = GpModel::prior(hp(1.0, 1.0, 0.1)).unwrap();
        assert!(m.predict(&[], false).is_err());
    }

    #[test]
    fn observation_noise_adds_to_variance() {
        let m = GpModel::prior(hp(1.0, 1.0, 0.1)).unwrap();
        let p = m
            .predict(&[vec![0.0]], false)
            .unwrap()
            .with_observation_noise(0.1);
        assert_relative_eq!(p.cov.variances()[0], 1.1);
    }

    #[test]
    fn lml_standard_normal() {
        let v = log_marginal_likelihood(&[vec![0.0]], &[0.0], &hp(1.0, 1.0, 0.0)).unwrap();
        assert_relative_eq!(v, -0.918_938_533_204_672_7, epsilon = 1e-12);
    }

    #[test]
    fn lml_short_lengthscale_factorizes() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let h = hp(1.5, 1e-6, 0.2);
        let v = log_marginal_likelihood(&x, &y, &h).unwrap();
        let var = h.total_variance();
        let oracle: f64 = y
            .iter()
            .map(|yi| -0.5 * yi * yi / var - 0.5 * (2.0 * PI * var).ln())
            .sum();
        assert!((v - oracle).abs() < 1e-6);
    }

    #[test]
    fn lml_singular_is_error() {
        let x = vec![vec![1.0], vec![1.0]];
        let err = log_marginal_likelihood(&x, &[0.0, 1.0], &hp(1.0, 1.0, 0.0)).unwrap_err();
        assert!(matches!(err, GpError::NotPositiveDefinite(_)));
    }

    #[test]
    fn subset_draw() {
        let s = draw_subset(10, 4, 3).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s, draw_subset(10, 4, 3).unwrap());
        let mut u = s.clone();
        u.sort();
        u.dedup();
        assert_eq!(u.len(), 4);
        assert!(draw_subset(3, 4, 0).is_err());
        assert!(draw_subset(3, 0, 0).is_err());
    }

    #[test]
    fn fit_rejects_oversized_subset() {
        let d = Dataset::from_1d(&[0.0, 1.0], &[0.0, 1.0]).unwrap();
        assert!(matches!(
            fit_hyperparameters(&d, 3, 0, &SearchConfig::default()),
            Err(GpError::InvalidInput(_))
        ));
    }
}
