//! End-to-end tests of the `greedy-gp` binary.

use std::fs;
use std::path::Path;
use std::process::Command;

use greedy_gp::bench::{summarize, TestFunction};
use greedy_gp::gp::{draw_subset, log_marginal_likelihood};
use greedy_gp::io::{self, HypersRecord};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_greedy-gp"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn fit_hypers_is_deterministic_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    let (code, _, err) = run(&[
        "generate",
        "--function",
        "xsinx",
        "--n",
        "60",
        "--seed",
        "4",
        "--out",
        p(&gen),
    ]);
    assert_eq!(code, 0, "{err}");
    let data_path = gen.join("dataset.csv");

    let outs: Vec<String> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            let (code, _, err) = run(&[
                "fit-hypers",
                "--input",
                p(&data_path),
                "--subset-size",
                "40",
                "--seed",
                "9",
                "--out",
                p(&out),
            ]);
            assert_eq!(code, 0, "{err}");
            fs::read_to_string(out.join("hypers.txt")).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);

    let rec = HypersRecord::parse(&outs[0]).unwrap();
    assert_eq!(rec.subset_size, 40);
    assert_eq!(rec.seed, 9);
    let data = io::read_dataset_file(&data_path).unwrap();
    let sub = data
        .subset(&draw_subset(data.len(), rec.subset_size, rec.seed).unwrap())
        .unwrap();
    let lml = log_marginal_likelihood(sub.inputs(), sub.targets(), &rec.hypers).unwrap();
    assert!((lml - rec.lml).abs() < 1e-9, "{lml} vs {}", rec.lml);
}

#[test]
fn missing_input_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let (code, _, err) = run(&[
        "fit-hypers",
        "--input",
        p(&dir.path().join("nope.csv")),
        "--out",
        p(&out),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("error"));
    assert!(!out.exists());
}

#[test]
fn malformed_dataset_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "x1,y\n0,0\n1,abc\n").unwrap();
    let (code, _, err) = run(&[
        "train-greedy",
        "--input",
        p(&path),
        "--out",
        p(&dir.path().join("o")),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["train-greedy", "--n", "ten"]).0, 1);
    assert_eq!(run(&["train-greedy"]).0, 1);
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn train_greedy_writes_consistent_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let outs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            let (code, _, err) = run(&[
                "train-greedy",
                "--function",
                "x2sinx",
                "--n",
                "80",
                "--seed",
                "2",
                "--delta=-inf",
                "--max-stages",
                "20",
                "--trace",
                "--threads",
                "1",
                "--out",
                p(&out),
            ]);
            assert_eq!(code, 0, "{err}");
            out
        })
        .collect();

    let trace = fs::read_to_string(outs[0].join("trace.csv")).unwrap();
    assert!(trace.starts_with("stage,point_index,delta_score,mu,std\n"));
    let mut stages: Vec<usize> = trace
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    stages.dedup();
    let history = fs::read_to_string(outs[0].join("rmse_history.csv")).unwrap();
    assert_eq!(stages.len(), history.lines().count() - 1);
    assert_eq!(stages.len(), 20);

    let active: Vec<usize> = fs::read_to_string(outs[0].join("active_set.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let mut uniq = active.clone();
    uniq.sort();
    uniq.dedup();
    assert_eq!(uniq.len(), active.len());
    assert!(active.iter().all(|&i| (1..=80).contains(&i)));

    for f in [
        "trace.csv",
        "rmse_history.csv",
        "active_set.csv",
        "hypers.txt",
    ] {
        assert_eq!(
            fs::read(outs[0].join(f)).unwrap(),
            fs::read(outs[1].join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn train_greedy_reads_hyperparameter_record() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("h.txt");
    fs::write(
        &rec,
        "signal_variance=10\nlengthscale=1.5\nnoise_variance=0.1\nlml=0\nsubset_size=1\nseed=0\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let (code, _, err) = run(&[
        "train-greedy",
        "--function",
        "xsinx",
        "--n",
        "40",
        "--hypers",
        p(&rec),
        "--out",
        p(&out),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(!out.join("hypers.txt").exists());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    let out = dir.path().join("o");
    fs::write(
        &conf,
        format!("function=poly_sin\nn=30\nseed=1\nout={}\n", out.display()),
    )
    .unwrap();
    let (code, _, err) = run(&["generate", "--config", p(&conf), "--n", "12"]);
    assert_eq!(code, 0, "{err}");
    let data = io::read_dataset_file(&out.join("dataset.csv")).unwrap();
    assert_eq!(data.len(), 12);
}

#[test]
fn benchmark_table_recomputes_from_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let (code, stdout, err) = run(&[
        "benchmark",
        "--function",
        "xsinx",
        "--trials",
        "1",
        "--n",
        "60",
        "--seed",
        "5",
        "--out",
        p(&out),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("Full GP"));

    let rows = io::read_results(fs::File::open(out.join("results.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 3);
    let summary = io::read_summary(fs::File::open(out.join("summary.csv")).unwrap()).unwrap();
    assert_eq!(summarize(&[TestFunction::XSinX], &rows), summary);

    let table = fs::read_to_string(out.join("table.txt")).unwrap();
    let body: Vec<&str> = table.lines().skip(2).collect();
    assert_eq!(body.len(), 1);
    let cols: Vec<&str> = body[0].split('|').map(str::trim).collect();
    assert_eq!(cols.len(), 5);
    let greedy = rows
        .iter()
        .find(|r| r.scheme.name() == "greedy")
        .unwrap()
        .outcome
        .as_ref()
        .unwrap();
    assert_eq!(
        cols[4],
        format!("{}%", (greedy.active_size as f64 / 60.0 * 100.0).round())
    );
}
