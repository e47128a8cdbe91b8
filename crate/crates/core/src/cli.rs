//! Command-line front end.
//!
//! Settings resolve in three layers: built-in defaults, then a flat `key=value` file given
//! with `--config`, then explicit flags. Config keys are the long flag names without the
//! leading dashes.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{self, ExperimentConfig, NoiseLevel, TestFunction};
use crate::error::GpError;
use crate::gp::{default_subset_size, fit_hyperparameters, Dataset, SearchConfig};
use crate::greedy::{GreedyConfig, GreedySelector};
use crate::io::{self, HypersRecord, TraceWriter};
use crate::kernel::Hyperparameters;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "greedy-gp",
    version,
    about = "Greedy active-set Gaussian-process regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a noisy dataset from a test function and write it as CSV.
    Generate(Flags),
    /// Pre-select kernel hyperparameters by maximizing the marginal likelihood on a subset.
    FitHypers(Flags),
    /// Run greedy selection and write the active set, RMSE history and optional trace.
    TrainGreedy(Flags),
    /// Compare full, random-subset and greedy training on the test functions.
    Benchmark(Flags),
}

#[derive(Debug, Clone, Default, Args)]
struct Flags {
    /// Flat key=value file with defaults for any of the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset CSV with header x1[,x2,...],y.
    #[arg(long, conflicts_with = "function")]
    input: Option<PathBuf>,
    /// Test function: x2sinx, xsinx or poly_sin. Benchmark accepts a comma list or "all".
    #[arg(long)]
    function: Option<String>,
    /// Number of training points to generate. Default: 200.
    #[arg(long)]
    n: Option<String>,
    /// Input interval as a:b.
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    /// Noise standard deviation. Default: 0.1 × std of the clean function on the domain.
    #[arg(long)]
    noise_std: Option<String>,
    /// Convergence threshold on the remainder RMSE decrease. Accepts inf and -inf.
    /// Default: 1e-3 × std of the targets.
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    /// Maximum number of greedy stages. Default: ceil(N/2).
    #[arg(long)]
    max_stages: Option<String>,
    /// Points used for the hyperparameter fit. Default: min(N, 100).
    #[arg(long)]
    subset_size: Option<String>,
    /// Base random seed. Default: 0.
    #[arg(long)]
    seed: Option<String>,
    /// Benchmark trials per function. Default: 20.
    #[arg(long)]
    trials: Option<String>,
    /// Holdout grid size for the benchmark.
    #[arg(long)]
    n_test: Option<String>,
    /// Write the per-stage trace CSV.
    #[arg(long)]
    trace: bool,
    /// Hyperparameter record to use instead of fitting.
    #[arg(long)]
    hypers: Option<PathBuf>,
    /// Output directory. Default: out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs serially. Default: all cores.
    #[arg(long)]
    threads: Option<String>,
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub functions: Vec<TestFunction>,
    pub n: usize,
    pub domain: (f64, f64),
    pub noise_std: Option<f64>,
    pub delta: Option<f64>,
    pub max_stages: Option<usize>,
    pub subset_size: Option<usize>,
    pub seed: u64,
    pub trials: usize,
    pub n_test: usize,
    pub trace: bool,
    pub hypers: Option<PathBuf>,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            functions: Vec::new(),
            n: 200,
            domain: (0.0, 10.0),
            noise_std: None,
            delta: None,
            max_stages: None,
            subset_size: None,
            seed: 0,
            trials: 20,
            n_test: 200,
            trace: false,
            hypers: None,
            out: PathBuf::from("out"),
            threads: None,
        }
    }
}

#[derive(Debug)]
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<GpError> for CliError {
    fn from(e: GpError) -> Self {
        CliError {
            code: if e.is_numeric() {
                EXIT_NUMERIC
            } else {
                EXIT_DATA
            },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        GpError::from(e).into()
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.parse()
        .map_err(|_| CliError::usage(format!("invalid value {v:?} for {key}")))
}

fn parse_domain(v: &str) -> CliResult<(f64, f64)> {
    let (a, b) = v
        .split_once(':')
        .ok_or_else(|| CliError::usage(format!("domain must look like a:b, got {v:?}")))?;
    Ok((parse_value("domain", a)?, parse_value("domain", b)?))
}

fn parse_functions(v: &str) -> CliResult<Vec<TestFunction>> {
    if v == "all" {
        return Ok(TestFunction::ALL.to_vec());
    }
    v.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|e: GpError| CliError::usage(e.to_string()))
        })
        .collect()
}

impl RunConfig {
    fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        match key {
            "input" => self.input = Some(PathBuf::from(value)),
            "function" => self.functions = parse_functions(value)?,
            "n" => self.n = parse_value(key, value)?,
            "domain" => self.domain = parse_domain(value)?,
            "noise-std" => self.noise_std = Some(parse_value(key, value)?),
            "delta" => self.delta = Some(parse_value(key, value)?),
            "max-stages" => self.max_stages = Some(parse_value(key, value)?),
            "subset-size" => self.subset_size = Some(parse_value(key, value)?),
            "seed" => self.seed = parse_value(key, value)?,
            "trials" => self.trials = parse_value(key, value)?,
            "n-test" => self.n_test = parse_value(key, value)?,
            "trace" => self.trace = parse_value(key, value)?,
            "hypers" => self.hypers = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            "threads" => self.threads = Some(parse_value(key, value)?),
            _ => return Err(CliError::usage(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    fn resolve(flags: &Flags) -> CliResult<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &flags.config {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            let kv =
                io::parse_key_values(&text).map_err(|e| CliError::usage(format!("config: {e}")))?;
            for (k, v) in kv {
                cfg.set(&k, &v)?;
            }
        }
        let string_flags = [
            ("function", &flags.function),
            ("n", &flags.n),
            ("domain", &flags.domain),
            ("noise-std", &flags.noise_std),
            ("delta", &flags.delta),
            ("max-stages", &flags.max_stages),
            ("subset-size", &flags.subset_size),
            ("seed", &flags.seed),
            ("trials", &flags.trials),
            ("n-test", &flags.n_test),
            ("threads", &flags.threads),
        ];
        for (k, v) in string_flags {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        if let Some(p) = &flags.input {
            cfg.input = Some(p.clone());
            cfg.functions.clear();
        }
        if flags.function.is_some() {
            cfg.input = None;
        }
        if let Some(p) = &flags.hypers {
            cfg.hypers = Some(p.clone());
        }
        if let Some(p) = &flags.out {
            cfg.out = p.clone();
        }
        if flags.trace {
            cfg.trace = true;
        }
        if cfg.threads == Some(0) {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        Ok(cfg)
    }

    fn noise_std_for(&self, tf: TestFunction) -> f64 {
        self.noise_std
            .unwrap_or_else(|| self.experiment().noise_std(tf))
    }

    /// The benchmark description implied by these settings.
    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            functions: if self.functions.is_empty() {
                TestFunction::ALL.to_vec()
            } else {
                self.functions.clone()
            },
            trials: self.trials,
            n: self.n,
            domain: self.domain,
            n_test: self.n_test,
            noise: match self.noise_std {
                Some(s) => NoiseLevel::Absolute(s),
                None => NoiseLevel::RelativeToSignal(0.1),
            },
            seed: self.seed,
            delta: self.delta,
            max_stages: self.max_stages,
            subset_size: self.subset_size,
            search: SearchConfig::default(),
        }
    }

    /// Loads `--input`, or samples the single configured test function.
    fn dataset(&self) -> CliResult<Dataset> {
        if let Some(path) = &self.input {
            return Ok(io::read_dataset_file(path)?);
        }
        match self.functions.as_slice() {
            [tf] => Ok(bench::generate_dataset(
                *tf,
                self.n,
                self.domain,
                self.noise_std_for(*tf),
                self.seed,
            )?),
            [] => Err(CliError::usage("either --input or --function is required")),
            _ => Err(CliError::usage("this command takes a single --function")),
        }
    }
}

fn create_out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn command_generate(cfg: &RunConfig) -> CliResult<()> {
    if cfg.input.is_some() {
        return Err(CliError::usage(
            "generate samples from --function, not --input",
        ));
    }
    let data = cfg.dataset()?;
    create_out_dir(&cfg.out)?;
    let path = cfg.out.join("dataset.csv");
    io::write_dataset(BufWriter::new(File::create(&path)?), &data)?;
    println!("wrote {} points to {}", data.len(), path.display());
    Ok(())
}

fn fit(cfg: &RunConfig, data: &Dataset) -> CliResult<HypersRecord> {
    let subset = cfg
        .subset_size
        .unwrap_or_else(|| default_subset_size(data.len()));
    let fit = fit_hyperparameters(data, subset, cfg.seed, &SearchConfig::default())?;
    Ok(HypersRecord::from_fit(&fit, cfg.seed))
}

fn command_fit_hypers(cfg: &RunConfig) -> CliResult<()> {
    let data = cfg.dataset()?;
    let record = fit(cfg, &data)?;
    create_out_dir(&cfg.out)?;
    let path = cfg.out.join("hypers.txt");
    fs::write(&path, record.to_text())?;
    print!("{}", record.to_text());
    Ok(())
}

fn command_train_greedy(cfg: &RunConfig) -> CliResult<()> {
    let data = cfg.dataset()?;
    let hypers: Hyperparameters = match &cfg.hypers {
        Some(p) => HypersRecord::parse(&fs::read_to_string(p)?)?.hypers,
        None => {
            let record = fit(cfg, &data)?;
            create_out_dir(&cfg.out)?;
            fs::write(cfg.out.join("hypers.txt"), record.to_text())?;
            record.hypers
        }
    };
    let selector = GreedySelector::new(&data, hypers)?;
    let gcfg = GreedyConfig {
        delta: cfg.delta,
        max_stages: cfg.max_stages,
        seed: cfg.seed,
        trace: false,
    };
    create_out_dir(&cfg.out)?;
    let mut trace = if cfg.trace {
        Some(TraceWriter::new(BufWriter::new(File::create(
            cfg.out.join("trace.csv"),
        )?))?)
    } else {
        None
    };
    let result = selector.run_with_observer(&gcfg, |rec| match trace.as_mut() {
        Some(w) => w.write_stage(rec),
        None => Ok(()),
    })?;
    drop(trace);
    io::write_active_set(
        BufWriter::new(File::create(cfg.out.join("active_set.csv"))?),
        &result.active,
    )?;
    io::write_rmse_history(
        BufWriter::new(File::create(cfg.out.join("rmse_history.csv"))?),
        &result.rmse_history,
    )?;
    println!(
        "selected {} of {} points in {} stages ({:?}); final remainder RMSE {}",
        result.active.len(),
        data.len(),
        result.stages(),
        result.stop_reason,
        result.rmse_history.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn command_benchmark(cfg: &RunConfig) -> CliResult<()> {
    if cfg.input.is_some() {
        return Err(CliError::usage(
            "benchmark runs on test functions, not --input",
        ));
    }
    let exp = cfg.experiment();
    let cmp = bench::compare_schemes(&exp)?;
    create_out_dir(&cfg.out)?;
    io::write_results(
        BufWriter::new(File::create(cfg.out.join("results.csv"))?),
        &cmp.rows,
    )?;
    io::write_summary(
        BufWriter::new(File::create(cfg.out.join("summary.csv"))?),
        &cmp.summaries,
    )?;
    let table = io::format_table(&cmp, &exp.functions);
    fs::write(cfg.out.join("table.txt"), &table)?;
    print!("{table}");
    for row in &cmp.rows {
        if let Err(e) = &row.outcome {
            eprintln!("{} trial {} {}: {e}", row.function, row.trial, row.scheme);
        }
    }
    if cmp.all_failed() {
        return Err(CliError {
            code: EXIT_NUMERIC,
            message: "every trial failed".into(),
        });
    }
    Ok(())
}

fn dispatch(command: &Command) -> CliResult<()> {
    let (flags, f): (&Flags, fn(&RunConfig) -> CliResult<()>) = match command {
        Command::Generate(f) => (f, command_generate),
        Command::FitHypers(f) => (f, command_fit_hypers),
        Command::TrainGreedy(f) => (f, command_train_greedy),
        Command::Benchmark(f) => (f, command_benchmark),
    };
    let cfg = RunConfig::resolve(flags)?;
    match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::usage(e.to_string()))?
            .install(|| f(&cfg)),
        None => f(&cfg),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
