//! Gaussian-process regression with greedy forward selection of the active training set.
//!
//! The greedy loop starts from one random training point and at each stage admits the
//! remainder point with the largest posterior standard deviation plus absolute residual.
//! The posterior over the remainder is updated by rank-one conditioning and the inverse of
//! the active Gram matrix grows by one row and column through its Schur complement, so a
//! stage costs O(t²) for the inverse instead of a fresh O(t³) factorization. Selection stops
//! once the remainder RMSE no longer drops by at least `delta`.
//!
//! ```no_run
//! use greedy_gp::{bench, gp, greedy};
//!
//! let data = bench::generate_dataset(bench::TestFunction::XSinX, 200, (0.0, 10.0), 0.3, 1)?;
//! let fit = gp::fit_hyperparameters(&data, 100, 1, &gp::SearchConfig::default())?;
//! let result = greedy::run(&data, fit.hypers, &greedy::GreedyConfig::new(1))?;
//! println!("{} of {} points selected", result.active.len(), data.len());
//! # Ok::<(), greedy_gp::GpError>(())
//! ```

pub mod bench;
pub mod cli;
pub mod error;
pub mod gp;
pub mod greedy;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod optim;

pub use error::{GpError, Result};
pub use gp::{Dataset, GpModel};
pub use greedy::{GreedyConfig, GreedyResult, GreedySelector, GreedyState};
pub use kernel::Hyperparameters;
pub use linalg::GrowableInverse;
