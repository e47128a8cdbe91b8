//! Multi-start maximum-likelihood fit of the kernel hyperparameters on a random subset.
//!
//! ```bash
//! cargo run --release --example fit_hyperparameters
//! ```

use greedy_gp::bench::{generate_dataset, TestFunction};
use greedy_gp::gp::{default_subset_size, fit_hyperparameters, SearchConfig};

fn main() -> greedy_gp::Result<()> {
    let data = generate_dataset(TestFunction::X2SinX, 200, (0.0, 10.0), 2.0, 3)?;
    let fit = fit_hyperparameters(
        &data,
        default_subset_size(data.len()),
        3,
        &SearchConfig::default(),
    )?;

    for (i, start) in fit.starts.iter().enumerate() {
        println!(
            "start {i}: lml {:>10.3} -> {:>10.3}",
            start.initial_lml, start.best_lml
        );
    }
    let h = fit.hypers;
    println!(
        "best: σ_f² = {:.4}, l = {:.4}, σ_n² = {:.4} (lml {:.3} on {} points)",
        h.signal_variance,
        h.lengthscale,
        h.noise_variance,
        fit.lml,
        fit.subset.len()
    );
    Ok(())
}
