//! Box-constrained Nelder-Mead simplex search.
//!
//! Trial points are projected onto the box before evaluation, so the objective is never
//! called outside the bounds.

#[derive(Debug, Clone, Copy)]
pub struct SimplexSettings {
    pub max_iters: usize,
    /// Stop once the spread of objective values across the simplex falls below this.
    pub f_tol: f64,
    /// Stop once every vertex lies within this distance (max-norm) of the best vertex.
    pub x_tol: f64,
    pub initial_step: f64,
}

impl Default for SimplexSettings {
    fn default() -> Self {
        SimplexSettings {
            max_iters: 400,
            f_tol: 1e-9,
            x_tol: 1e-7,
            initial_step: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

fn project(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

fn eval<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` inside `bounds` starting from `x0`.
///
/// The returned value is never worse than `f(x0)` (after projecting `x0` into the box).
pub fn minimize<F>(f: F, x0: &[f64], bounds: &[(f64, f64)], cfg: &SimplexSettings) -> SimplexOutcome
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(bounds.len(), n, "one bound per coordinate");

    let mut start = x0.to_vec();
    project(&mut start, bounds);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(&f, &start);
    simplex.push((start.clone(), f0));
    for i in 0..n {
        let mut p = start.clone();
        let (lo, hi) = bounds[i];
        // step inward when the start sits on the upper bound
        p[i] = if start[i] + cfg.initial_step <= hi {
            start[i] + cfg.initial_step
        } else {
            (start[i] - cfg.initial_step).max(lo)
        };
        let fp = eval(&f, &p);
        simplex.push((p, fp));
    }

    let order = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        order(&mut simplex);
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = if best.is_finite() && worst.is_finite() {
            (worst - best).abs()
        } else {
            f64::INFINITY
        };
        let size = simplex[1..]
            .iter()
            .flat_map(|(p, _)| p.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= cfg.f_tol && size <= cfg.x_tol {
            break;
        }
        if size <= cfg.x_tol * 1e-3 {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (p, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            project(&mut p, bounds);
            p
        };

        let xr = along(1.0);
        let fr = eval(&f, &xr);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&f, &xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(0.5);
            let fc = eval(&f, &xc);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(&f, &xc);
            (xc, fc)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        // shrink toward the best vertex
        let best_x = simplex[0].0.clone();
        for (p, fp) in simplex.iter_mut().skip(1) {
            for (v, b) in p.iter_mut().zip(&best_x) {
                *v = b + 0.5 * (*v - b);
            }
            *fp = eval(&f, p);
        }
    }
    order(&mut simplex);
    let (x, value) = simplex.swap_remove(0);
    SimplexOutcome {
        x,
        value,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2);
        let out = minimize(
            f,
            &[0.0, 0.0],
            &[(-5.0, 5.0); 2],
            &SimplexSettings::default(),
        );
        assert!((out.x[0] - 1.0).abs() < 1e-4);
        assert!((out.x[1] + 2.0).abs() < 1e-4);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let cfg = SimplexSettings {
            max_iters: 5000,
            ..Default::default()
        };
        let out = minimize(f, &[-1.2, 1.0], &[(-5.0, 5.0); 2], &cfg);
        assert!(out.value < 1e-8, "value {}", out.value);
    }

    #[test]
    fn stays_in_box_and_reaches_bound() {
        let f = |x: &[f64]| {
            assert!(x.iter().all(|v| (-1.0..=2.0).contains(v)));
            x[0] + x[1] * x[1] + x[2]
        };
        let out = minimize(
            f,
            &[0.5, 1.0, 2.0],
            &[(-1.0, 2.0); 3],
            &SimplexSettings::default(),
        );
        assert!((out.x[0] + 1.0).abs() < 1e-6);
        assert!((out.x[2] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn never_worse_than_start() {
        let f = |x: &[f64]| {
            if x[0] > 0.3 {
                f64::NAN
            } else {
                (x[0] + x[1]).abs()
            }
        };
        let out = minimize(
            f,
            &[0.0, 0.2],
            &[(-1.0, 1.0); 2],
            &SimplexSettings::default(),
        );
        assert!(out.value <= 0.2);
    }
}
