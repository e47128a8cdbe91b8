//! Dense reference computations used as oracles. They use LU inversion and symmetric
//! eigendecomposition, never the Cholesky or bordered-inverse paths under test.
#![allow(dead_code)]

use std::f64::consts::PI;

use greedy_gp::{Dataset, Hyperparameters};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn k(h: &Hyperparameters, a: &[f64], b: &[f64]) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    h.signal_variance * (-0.5 * sq / h.lengthscale.powi(2)).exp()
}

pub fn cross(h: &Hyperparameters, xa: &[&[f64]], xb: &[&[f64]]) -> DMatrix<f64> {
    DMatrix::from_fn(xa.len(), xb.len(), |i, j| k(h, xa[i], xb[j]))
}

pub fn dense_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().lu().try_inverse().expect("oracle inverse")
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_vec(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Posterior mean and covariance at `test` given training points, written out as
/// K_*(K+σ²I)⁻¹y and K_** − K_*(K+σ²I)⁻¹K_*ᵀ.
pub fn dense_posterior(
    h: &Hyperparameters,
    train_x: &[&[f64]],
    train_y: &[f64],
    test: &[&[f64]],
) -> (DVector<f64>, DMatrix<f64>) {
    let kxx = cross(h, train_x, train_x)
        + DMatrix::identity(train_x.len(), train_x.len()) * h.noise_variance;
    let ks = cross(h, test, train_x);
    let kss = cross(h, test, test);
    let inv = dense_inverse(&kxx);
    let mean = &ks * &inv * DVector::from_column_slice(train_y);
    let cov = kss - &ks * &inv * ks.transpose();
    (mean, cov)
}

/// Remainder posterior for an active index set, with the remainder in ascending order.
pub fn dense_predr(
    data: &Dataset,
    h: &Hyperparameters,
    active: &[usize],
) -> (Vec<usize>, DVector<f64>, DMatrix<f64>) {
    let remainder: Vec<usize> = (0..data.len()).filter(|i| !active.contains(i)).collect();
    let x = data.inputs();
    let ax: Vec<&[f64]> = active.iter().map(|&i| x[i].as_slice()).collect();
    let ay: Vec<f64> = active.iter().map(|&i| data.targets()[i]).collect();
    let rx: Vec<&[f64]> = remainder.iter().map(|&i| x[i].as_slice()).collect();
    let (mu, sigma) = dense_posterior(h, &ax, &ay, &rx);
    (remainder, mu, sigma)
}

/// log N(y; 0, C) through the eigendecomposition of C.
pub fn eigen_log_density(c: &DMatrix<f64>, y: &[f64]) -> f64 {
    let eig = c.clone().symmetric_eigen();
    let proj = eig.eigenvectors.transpose() * DVector::from_column_slice(y);
    let n = y.len() as f64;
    let quad: f64 = proj
        .iter()
        .zip(eig.eigenvalues.iter())
        .map(|(p, l)| p * p / l)
        .sum();
    let logdet: f64 = eig.eigenvalues.iter().map(|l| l.ln()).sum();
    -0.5 * quad - 0.5 * logdet - 0.5 * n * (2.0 * PI).ln()
}

pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, dim: usize, span: f64) -> Dataset {
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(0.0..span)).collect())
        .collect();
    let y: Vec<f64> = x
        .iter()
        .map(|p| p.iter().map(|v| v.sin() * 2.0).sum::<f64>() + rng.random_range(-0.3..0.3))
        .collect();
    Dataset::new(x, y).unwrap()
}

pub fn random_hypers(rng: &mut ChaCha8Rng) -> Hyperparameters {
    Hyperparameters::new(
        rng.random_range(0.5..2.0),
        rng.random_range(0.4..2.0),
        rng.random_range(0.01..0.5),
    )
    .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Least-squares c for counts ≈ c·law, and the largest relative misfit.
pub fn fit_scale(counts: &[f64], law: &[f64]) -> (f64, f64) {
    let c = counts.iter().zip(law).map(|(a, b)| a * b).sum::<f64>()
        / law.iter().map(|b| b * b).sum::<f64>();
    let misfit = counts
        .iter()
        .zip(law)
        .map(|(a, b)| ((a - c * b) / (c * b)).abs())
        .fold(0.0, f64::max);
    (c, misfit)
}

pub mod strategies {
    use greedy_gp::{Dataset, Hyperparameters};
    use proptest::prelude::*;

    pub fn hypers() -> impl Strategy<Value = Hyperparameters> {
        (0.1f64..5.0, 0.2f64..3.0, 0.01f64..0.5)
            .prop_map(|(s, l, n)| Hyperparameters::new(s, l, n).unwrap())
    }

    pub fn points(n: std::ops::Range<usize>, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-5.0f64..5.0, dim), n)
    }

    /// Datasets of dimension 1 or 2.
    pub fn dataset(n: std::ops::Range<usize>) -> impl Strategy<Value = Dataset> {
        (1usize..=2)
            .prop_flat_map(move |d| {
                (
                    points(n.clone(), d),
                    prop::collection::vec(-3.0f64..3.0, 100),
                )
            })
            .prop_map(|(x, y)| {
                let n = x.len();
                Dataset::new(x, y[..n].to_vec()).unwrap()
            })
    }
}
