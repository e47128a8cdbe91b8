//! Grows the inverse of a Gram matrix one point at a time and compares it with a direct
//! inversion, reporting the multiply-add count of each growth.
//!
//! ```bash
//! cargo run --example incremental_inverse
//! ```

use greedy_gp::kernel::gram_matrix;
use greedy_gp::linalg::JITTER_FLOOR_SCALE;
use greedy_gp::{GrowableInverse, Hyperparameters};

fn main() -> greedy_gp::Result<()> {
    let hypers = Hyperparameters::new(1.0, 0.8, 0.01)?;
    let x: Vec<Vec<f64>> = (0..64)
        .map(|i| vec![(i as f64 * 0.37).sin() * 5.0])
        .collect();
    let k = gram_matrix(&x, &x, &hypers, true)?;
    let floor = JITTER_FLOOR_SCALE * hypers.total_variance();

    let mut inv = GrowableInverse::empty();
    for t in 0..x.len() {
        let border: Vec<f64> = (0..t).map(|i| k[(i, t)]).collect();
        let mut ops = 0;
        inv = inv.grow_counted(&border, k[(t, t)], floor, &mut ops)?;
        if (t + 1).is_power_of_two() {
            let direct = GrowableInverse::from_spd(&k.view((0, 0), (t + 1, t + 1)).into_owned())?;
            let err = (inv.matrix() - direct.matrix()).amax();
            println!(
                "size {:>3}: {ops:>6} multiply-adds, max difference from direct inverse {err:.2e}",
                t + 1
            );
        }
    }
    Ok(())
}
