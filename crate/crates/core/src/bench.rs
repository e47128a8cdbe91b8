//! Benchmark harness comparing three training schemes on synthetic 1-D functions:
//! a full GP on every training point, greedy selection, and a uniformly random subset of
//! the size greedy chose. All three are scored by RMSE against noiseless holdout values.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{GpError, Result};
use crate::gp::{
    default_subset_size, draw_subset, fit_hyperparameters, Dataset, GpModel, Provenance,
    SearchConfig,
};
use crate::greedy::{self, GreedyConfig};
use crate::kernel::Hyperparameters;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestFunction {
    /// x²·sin x
    X2SinX,
    /// x·sin x
    XSinX,
    /// 0.5·sin x + 0.5·x − 0.02·(x − 5)²
    PolySin,
}

impl TestFunction {
    pub const ALL: [TestFunction; 3] = [
        TestFunction::X2SinX,
        TestFunction::XSinX,
        TestFunction::PolySin,
    ];

    pub fn eval(self, x: f64) -> f64 {
        match self {
            TestFunction::X2SinX => x * x * x.sin(),
            TestFunction::XSinX => x * x.sin(),
            TestFunction::PolySin => 0.5 * x.sin() + 0.5 * x - 0.02 * (x - 5.0).powi(2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::X2SinX => "x2sinx",
            TestFunction::XSinX => "xsinx",
            TestFunction::PolySin => "poly_sin",
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            TestFunction::X2SinX => "x^2 sin(x)",
            TestFunction::XSinX => "x sin(x)",
            TestFunction::PolySin => "0.5 sin(x) + 0.5x - 0.02(x-5)^2",
        }
    }

    fn id(self) -> u64 {
        match self {
            TestFunction::X2SinX => 1,
            TestFunction::XSinX => 2,
            TestFunction::PolySin => 3,
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunction {
    type Err = GpError;

    fn from_str(s: &str) -> Result<Self> {
        TestFunction::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| {
                GpError::invalid(format!(
                    "unknown function {s:?}; expected x2sinx, xsinx or poly_sin"
                ))
            })
    }
}

/// Samples `n` inputs uniformly on `domain` and adds i.i.d. N(0, noise_std²) to the
/// function values.
pub fn generate_dataset(
    tf: TestFunction,
    n: usize,
    domain: (f64, f64),
    noise_std: f64,
    seed: u64,
) -> Result<Dataset> {
    let (a, b) = domain;
    if n < 2 {
        return Err(GpError::invalid(format!("need at least 2 points, got {n}")));
    }
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(GpError::invalid(format!("invalid domain [{a}, {b}]")));
    }
    if !(noise_std.is_finite() && noise_std >= 0.0) {
        return Err(GpError::invalid(format!("invalid noise level {noise_std}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(a..=b)).collect();
    let y: Vec<f64> = if noise_std == 0.0 {
        x.iter().map(|&v| tf.eval(v)).collect()
    } else {
        let noise = Normal::new(0.0, noise_std).expect("validated noise level");
        x.iter()
            .map(|&v| tf.eval(v) + noise.sample(&mut rng))
            .collect()
    };
    Ok(Dataset::from_1d(&x, &y)?.with_metadata(Provenance {
        generator: tf.name().to_string(),
        n,
        domain,
        noise_std,
        seed,
    }))
}

/// `n` evenly spaced points covering `[a, b]` inclusive.
pub fn grid(domain: (f64, f64), n: usize) -> Vec<f64> {
    let (a, b) = domain;
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (a + b)],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Noiseless holdout set on an even grid.
pub fn holdout(tf: TestFunction, domain: (f64, f64), n: usize) -> Result<Dataset> {
    let x = grid(domain, n);
    let y: Vec<f64> = x.iter().map(|&v| tf.eval(v)).collect();
    Dataset::from_1d(&x, &y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Full,
    Random,
    Greedy,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Full => "full",
            Scheme::Random => "random",
            Scheme::Greedy => "greedy",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = GpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Scheme::Full),
            "random" => Ok(Scheme::Random),
            "greedy" => Ok(Scheme::Greedy),
            _ => Err(GpError::invalid(format!("unknown scheme {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeResult {
    pub scheme: Scheme,
    pub test_rmse: f64,
    pub active_fraction: f64,
    pub active_size: usize,
    pub wall_time: f64,
    pub seed: u64,
}

/// Root-mean-square difference of two equal-length slices.
pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    (sq / a.len() as f64).sqrt()
}

/// Trains one scheme on `train` and scores it on `test`.
///
/// `random_size` is the active-set size the greedy run of the same trial chose; it is
/// required for [`Scheme::Random`] and ignored otherwise.
pub fn run_scheme(
    scheme: Scheme,
    train: &Dataset,
    test: &Dataset,
    hypers: Hyperparameters,
    greedy_config: &GreedyConfig,
    random_size: Option<usize>,
    seed: u64,
) -> Result<SchemeResult> {
    let start = Instant::now();
    let wrap = |e: GpError| GpError::Scheme {
        scheme: scheme.name(),
        source: Box::new(e),
    };
    let model = match scheme {
        Scheme::Full => GpModel::fit(train, hypers).map_err(wrap)?,
        Scheme::Greedy => {
            let cfg = GreedyConfig {
                seed,
                trace: false,
                ..greedy_config.clone()
            };
            greedy::run(train, hypers, &cfg).map_err(wrap)?.model
        }
        Scheme::Random => {
            let size = random_size.ok_or_else(|| {
                wrap(GpError::invalid(
                    "random scheme needs the greedy active-set size",
                ))
            })?;
            let idx = draw_subset(train.len(), size, seed).map_err(wrap)?;
            GpModel::fit(&train.subset(&idx).map_err(wrap)?, hypers).map_err(wrap)?
        }
    };
    let pred = model.predict(test.inputs(), false).map_err(wrap)?;
    let test_rmse = rmse(pred.mean.as_slice(), test.targets());
    Ok(SchemeResult {
        scheme,
        test_rmse,
        active_fraction: model.len() as f64 / train.len() as f64,
        active_size: model.len(),
        wall_time: start.elapsed().as_secs_f64(),
        seed,
    })
}

/// Training-noise level of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    Absolute(f64),
    /// Multiple of the standard deviation of the noiseless function over the holdout grid.
    RelativeToSignal(f64),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub functions: Vec<TestFunction>,
    pub trials: usize,
    pub n: usize,
    pub domain: (f64, f64),
    pub n_test: usize,
    pub noise: NoiseLevel,
    pub seed: u64,
    pub delta: Option<f64>,
    pub max_stages: Option<usize>,
    pub subset_size: Option<usize>,
    pub search: SearchConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            functions: TestFunction::ALL.to_vec(),
            trials: 20,
            n: 200,
            domain: (0.0, 10.0),
            n_test: 200,
            noise: NoiseLevel::RelativeToSignal(0.1),
            seed: 0,
            delta: None,
            max_stages: None,
            subset_size: None,
            search: SearchConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn noise_std(&self, tf: TestFunction) -> f64 {
        match self.noise {
            NoiseLevel::Absolute(s) => s,
            NoiseLevel::RelativeToSignal(k) => {
                let y: Vec<f64> = grid(self.domain, self.n_test.max(2))
                    .iter()
                    .map(|&x| tf.eval(x))
                    .collect();
                let m = y.iter().sum::<f64>() / y.len() as f64;
                k * (y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / y.len() as f64).sqrt()
            }
        }
    }
}

/// One row of the comparison: a scheme's outcome on one (function, trial).
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeRow {
    pub function: TestFunction,
    pub trial: usize,
    /// Trial seed from which every per-trial seed is derived.
    pub seed: u64,
    pub scheme: Scheme,
    pub n: usize,
    pub outcome: std::result::Result<SchemeResult, String>,
}

/// Median and quartiles of a scheme's RMSE over the successful trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSummary {
    pub function: TestFunction,
    pub scheme: Scheme,
    pub trials_ok: usize,
    pub median_rmse: f64,
    pub q1_rmse: f64,
    pub q3_rmse: f64,
    pub median_active_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    /// Ordered by function, then trial, then greedy/random/full.
    pub rows: Vec<SchemeRow>,
    pub summaries: Vec<SchemeSummary>,
}

impl Comparison {
    pub fn summary(&self, function: TestFunction, scheme: Scheme) -> Option<&SchemeSummary> {
        self.summaries
            .iter()
            .find(|s| s.function == function && s.scheme == scheme)
    }

    pub fn all_failed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.outcome.is_err())
    }
}

/// SplitMix64 finalizer over a base seed and a path of labels.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut z = base;
    for &p in path {
        z = z
            .wrapping_add(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(p.wrapping_mul(0xD1B5_4A32_D192_ED03));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

const SEED_DATA: u64 = 1;
const SEED_HYPERS: u64 = 2;
const SEED_GREEDY: u64 = 3;
const SEED_RANDOM: u64 = 4;

fn run_trial(cfg: &ExperimentConfig, tf: TestFunction, trial: usize) -> Vec<SchemeRow> {
    let seed = derive_seed(cfg.seed, &[tf.id(), trial as u64]);
    let row = |scheme, outcome| SchemeRow {
        function: tf,
        trial,
        seed,
        scheme,
        n: cfg.n,
        outcome,
    };
    let fail_all = |msg: String| {
        [Scheme::Greedy, Scheme::Random, Scheme::Full]
            .into_iter()
            .map(|s| row(s, Err(msg.clone())))
            .collect::<Vec<_>>()
    };

    let setup = || -> Result<(Dataset, Dataset, Hyperparameters)> {
        let train = generate_dataset(
            tf,
            cfg.n,
            cfg.domain,
            cfg.noise_std(tf),
            derive_seed(seed, &[SEED_DATA]),
        )?;
        let test = holdout(tf, cfg.domain, cfg.n_test)?;
        let subset = cfg
            .subset_size
            .unwrap_or_else(|| default_subset_size(train.len()));
        let fit = fit_hyperparameters(
            &train,
            subset,
            derive_seed(seed, &[SEED_HYPERS]),
            &cfg.search,
        )?;
        Ok((train, test, fit.hypers))
    };
    let (train, test, hypers) = match setup() {
        Ok(v) => v,
        Err(e) => return fail_all(e.to_string()),
    };

    let gcfg = GreedyConfig {
        delta: cfg.delta,
        max_stages: cfg.max_stages,
        seed: 0,
        trace: false,
    };
    let greedy = run_scheme(
        Scheme::Greedy,
        &train,
        &test,
        hypers,
        &gcfg,
        None,
        derive_seed(seed, &[SEED_GREEDY]),
    );
    let random = match &greedy {
        Ok(g) => run_scheme(
            Scheme::Random,
            &train,
            &test,
            hypers,
            &gcfg,
            Some(g.active_size),
            derive_seed(seed, &[SEED_RANDOM]),
        )
        .map_err(|e| e.to_string()),
        Err(_) => Err("random scheme skipped: greedy run failed".to_string()),
    };
    let full = run_scheme(Scheme::Full, &train, &test, hypers, &gcfg, None, seed);
    vec![
        row(Scheme::Greedy, greedy.map_err(|e| e.to_string())),
        row(Scheme::Random, random),
        row(Scheme::Full, full.map_err(|e| e.to_string())),
    ]
}

/// Runs every (function, trial) of `config` and aggregates per function and scheme.
///
/// Trials run in parallel on the current rayon pool; the result does not depend on the
/// number of threads apart from the wall-time fields.
pub fn compare_schemes(config: &ExperimentConfig) -> Result<Comparison> {
    if config.functions.is_empty() {
        return Err(GpError::invalid("no test functions configured"));
    }
    if config.trials == 0 {
        return Err(GpError::invalid("trial count must be positive"));
    }
    let jobs: Vec<(TestFunction, usize)> = config
        .functions
        .iter()
        .flat_map(|&f| (0..config.trials).map(move |t| (f, t)))
        .collect();
    let rows: Vec<SchemeRow> = jobs
        .par_iter()
        .map(|&(f, t)| run_trial(config, f, t))
        .collect::<Vec<_>>()
        .concat();
    let summaries = summarize(&config.functions, &rows);
    Ok(Comparison { rows, summaries })
}

/// Aggregates rows into one summary per (function, scheme), in the order full, random, greedy.
pub fn summarize(functions: &[TestFunction], rows: &[SchemeRow]) -> Vec<SchemeSummary> {
    let mut out = Vec::new();
    for &f in functions {
        for scheme in [Scheme::Full, Scheme::Random, Scheme::Greedy] {
            let ok: Vec<&SchemeResult> = rows
                .iter()
                .filter(|r| r.function == f && r.scheme == scheme)
                .filter_map(|r| r.outcome.as_ref().ok())
                .collect();
            let mut rm: Vec<f64> = ok.iter().map(|r| r.test_rmse).collect();
            let mut af: Vec<f64> = ok.iter().map(|r| r.active_fraction).collect();
            rm.sort_by(f64::total_cmp);
            af.sort_by(f64::total_cmp);
            out.push(SchemeSummary {
                function: f,
                scheme,
                trials_ok: ok.len(),
                median_rmse: quantile_sorted(&rm, 0.5),
                q1_rmse: quantile_sorted(&rm, 0.25),
                q3_rmse: quantile_sorted(&rm, 0.75),
                median_active_fraction: quantile_sorted(&af, 0.5),
            });
        }
    }
    out
}

/// Linear-interpolation quantile of sorted data; NaN when empty.
pub fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}
