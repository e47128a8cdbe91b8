//! Runs greedy forward selection stage by stage and prints what each stage picked.
//!
//! ```bash
//! cargo run --release --example greedy_training
//! ```

use greedy_gp::bench::{generate_dataset, holdout, rmse, TestFunction};
use greedy_gp::greedy::GreedyConfig;
use greedy_gp::{GreedySelector, Hyperparameters};

fn main() -> greedy_gp::Result<()> {
    let data = generate_dataset(TestFunction::PolySin, 150, (0.0, 10.0), 0.05, 11)?;
    let hypers = Hyperparameters::new(0.5, 1.0, 0.0025)?;
    let selector = GreedySelector::new(&data, hypers)?;

    // a negative tolerance never converges, so the cap decides the number of stages
    let config = GreedyConfig {
        delta: Some(-1.0),
        max_stages: Some(25),
        ..GreedyConfig::new(11)
    };
    let result = selector.run_with_observer(&config, |rec| {
        if let Some(i) = rec.selected {
            let k = rec.points.iter().position(|&p| p == i).unwrap();
            println!(
                "stage {:>2}: admit x = {:.3} (σ {:.4}, residual {:+.4}, score {:.4})",
                rec.stage,
                data.inputs()[i][0],
                rec.std[k],
                data.targets()[i] - rec.mu[k],
                rec.scores[k]
            );
        }
        Ok(())
    })?;

    let test = holdout(TestFunction::PolySin, (0.0, 10.0), 200)?;
    let pred = result.model.predict(test.inputs(), false)?;
    println!(
        "{} of {} points, stop reason {:?}, holdout RMSE {:.4}",
        result.active.len(),
        data.len(),
        result.stop_reason,
        rmse(pred.mean.as_slice(), test.targets())
    );
    Ok(())
}
