//! Fits an exact GP to noisy samples of x·sin(x) and prints predictions with 2σ bands.
//!
//! ```bash
//! cargo run --example full_gp
//! ```

use greedy_gp::bench::{generate_dataset, grid, TestFunction};
use greedy_gp::gp::log_marginal_likelihood;
use greedy_gp::{GpModel, Hyperparameters};

fn main() -> greedy_gp::Result<()> {
    let data = generate_dataset(TestFunction::XSinX, 40, (0.0, 10.0), 0.3, 7)?;
    let hypers = Hyperparameters::new(16.0, 1.5, 0.09)?;

    let lml = log_marginal_likelihood(data.inputs(), data.targets(), &hypers)?;
    println!("log marginal likelihood: {lml:.3}");

    let model = GpModel::fit(&data, hypers)?;
    let test: Vec<Vec<f64>> = grid((0.0, 10.0), 11).into_iter().map(|x| vec![x]).collect();
    let pred = model.predict(&test, false)?;
    let var = pred.cov.variances();

    println!("{:>6} {:>9} {:>9} {:>9}", "x", "truth", "mean", "±2σ");
    for (i, x) in test.iter().enumerate() {
        let truth = TestFunction::XSinX.eval(x[0]);
        println!(
            "{:>6.2} {:>9.4} {:>9.4} {:>9.4}",
            x[0],
            truth,
            pred.mean[i],
            2.0 * var[i].sqrt()
        );
    }
    Ok(())
}
