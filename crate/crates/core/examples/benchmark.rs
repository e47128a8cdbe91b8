//! Compares the full GP, a random subset and greedy selection on the three test functions
//! and prints the summary table.
//!
//! ```bash
//! cargo run --release --example benchmark
//! ```

use greedy_gp::bench::{compare_schemes, ExperimentConfig};
use greedy_gp::io::format_table;

fn main() -> greedy_gp::Result<()> {
    let config = ExperimentConfig {
        trials: 5,
        ..ExperimentConfig::default()
    };
    let cmp = compare_schemes(&config)?;
    print!("{}", format_table(&cmp, &config.functions));
    Ok(())
}
