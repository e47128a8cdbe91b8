//! File formats: dataset, trace, results and summary CSVs, and flat `key=value` records.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading a file back
//! recovers the exact values.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::bench::{Comparison, Scheme, SchemeResult, SchemeRow, SchemeSummary, TestFunction};
use crate::error::{GpError, Result};
use crate::gp::{Dataset, FittedHypers};
use crate::greedy::StageRecord;
use crate::kernel::Hyperparameters;

pub const TRACE_HEADER: [&str; 5] = ["stage", "point_index", "delta_score", "mu", "std"];
pub const RESULTS_HEADER: [&str; 9] = [
    "scheme",
    "function",
    "trial",
    "seed",
    "rmse",
    "active_size",
    "active_fraction",
    "wall_time_s",
    "error",
];
pub const SUMMARY_HEADER: [&str; 7] = [
    "function",
    "scheme",
    "trials_ok",
    "median_rmse",
    "q1_rmse",
    "q3_rmse",
    "median_active_fraction",
];

fn csv_err(e: csv::Error) -> GpError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => GpError::Io(io),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => GpError::Parse {
            line,
            message: format!("ragged row: expected {expected_len} fields, found {len}"),
        },
        other => GpError::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn parse_f64(field: &str, line: usize, column: &str) -> Result<f64> {
    field.parse::<f64>().map_err(|_| GpError::Parse {
        line,
        message: format!("column {column}: {field:?} is not a number"),
    })
}

/// Reads a dataset with header `x1[,x2,...],y`.
pub fn read_dataset<R: Read>(r: R) -> Result<Dataset> {
    let mut rdr = reader(r);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h.map_err(csv_err)?,
        None => {
            return Err(GpError::Parse {
                line: 1,
                message: "missing header".into(),
            })
        }
    };
    let cols: Vec<&str> = header.iter().collect();
    let dim = cols.len().saturating_sub(1);
    let valid = dim >= 1
        && cols[dim] == "y"
        && cols[..dim]
            .iter()
            .enumerate()
            .all(|(i, c)| *c == format!("x{}", i + 1));
    if !valid {
        return Err(GpError::Parse {
            line: 1,
            message: format!("expected header x1,...,xd,y, found {:?}", cols.join(",")),
        });
    }

    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for rec in records {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let mut point = Vec::with_capacity(dim);
        for (j, field) in rec.iter().enumerate().take(dim) {
            point.push(parse_f64(field, line, cols[j])?);
        }
        targets.push(parse_f64(&rec[dim], line, "y")?);
        inputs.push(point);
    }
    if inputs.is_empty() {
        return Err(GpError::Parse {
            line: 2,
            message: "dataset has no rows".into(),
        });
    }
    Dataset::new(inputs, targets)
}

pub fn read_dataset_file(path: &Path) -> Result<Dataset> {
    read_dataset(File::open(path)?)
}

pub fn write_dataset<W: Write>(w: W, data: &Dataset) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (1..=data.dim()).map(|i| format!("x{i}")).collect();
    header.push("y".into());
    wtr.write_record(&header).map_err(csv_err)?;
    for (x, y) in data.inputs().iter().zip(data.targets()) {
        let mut row: Vec<String> = x.iter().map(f64::to_string).collect();
        row.push(y.to_string());
        wtr.write_record(&row).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Parses `key=value` lines. Blank lines and lines starting with `#` are skipped.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| GpError::Parse {
            line: i + 1,
            message: format!("expected key=value, found {line:?}"),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// The record written by hyperparameter pre-selection.
#[derive(Debug, Clone, PartialEq)]
pub struct HypersRecord {
    pub hypers: Hyperparameters,
    pub lml: f64,
    pub subset_size: usize,
    pub seed: u64,
}

impl HypersRecord {
    pub fn from_fit(fit: &FittedHypers, seed: u64) -> Self {
        HypersRecord {
            hypers: fit.hypers,
            lml: fit.lml,
            subset_size: fit.subset.len(),
            seed,
        }
    }

    pub fn to_text(&self) -> String {
        format!(
            "signal_variance={}\nlengthscale={}\nnoise_variance={}\nlml={}\nsubset_size={}\nseed={}\n",
            self.hypers.signal_variance,
            self.hypers.lengthscale,
            self.hypers.noise_variance,
            self.lml,
            self.subset_size,
            self.seed
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let kv = parse_key_values(text)?;
        let get = |key: &str| -> Result<&str> {
            kv.iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| GpError::invalid(format!("hyperparameter record lacks {key}")))
        };
        let num = |key: &str| -> Result<f64> {
            get(key)?
                .parse()
                .map_err(|_| GpError::invalid(format!("{key} is not a number")))
        };
        let int = |key: &str| -> Result<u64> {
            get(key)?
                .parse()
                .map_err(|_| GpError::invalid(format!("{key} is not an integer")))
        };
        Ok(HypersRecord {
            hypers: Hyperparameters::new(
                num("signal_variance")?,
                num("lengthscale")?,
                num("noise_variance")?,
            )?,
            lml: num("lml")?,
            subset_size: int("subset_size")? as usize,
            seed: int("seed")?,
        })
    }
}

/// Streams stage records as long-format CSV, one row per remainder point per stage.
/// Point indices are 1-based.
pub struct TraceWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(w: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(w);
        inner.write_record(TRACE_HEADER).map_err(csv_err)?;
        Ok(TraceWriter { inner })
    }

    /// Appends one stage and flushes.
    pub fn write_stage(&mut self, rec: &StageRecord) -> Result<()> {
        for k in 0..rec.points.len() {
            self.inner
                .write_record([
                    rec.stage.to_string(),
                    (rec.points[k] + 1).to_string(),
                    rec.scores[k].to_string(),
                    rec.mu[k].to_string(),
                    rec.std[k].to_string(),
                ])
                .map_err(csv_err)?;
        }
        self.inner.flush()?;
        Ok(())
    }
}

pub fn write_active_set<W: Write>(w: W, active: &[usize]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["stage", "index"]).map_err(csv_err)?;
    for (t, i) in active.iter().enumerate() {
        wtr.write_record([(t + 1).to_string(), (i + 1).to_string()])
            .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_rmse_history<W: Write>(w: W, history: &[f64]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["stage", "rmse"]).map_err(csv_err)?;
    for (t, v) in history.iter().enumerate() {
        wtr.write_record([(t + 1).to_string(), v.to_string()])
            .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_results<W: Write>(w: W, rows: &[SchemeRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(RESULTS_HEADER).map_err(csv_err)?;
    for r in rows {
        let head = [
            r.scheme.to_string(),
            r.function.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
        ];
        let tail: [String; 5] = match &r.outcome {
            Ok(s) => [
                s.test_rmse.to_string(),
                s.active_size.to_string(),
                s.active_fraction.to_string(),
                s.wall_time.to_string(),
                String::new(),
            ],
            Err(e) => [
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.clone(),
            ],
        };
        wtr.write_record(head.iter().chain(tail.iter()))
            .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a results CSV back into rows. `n` is not stored and is inferred as
/// `active_size / active_fraction` for successful rows (0 otherwise).
pub fn read_results<R: Read>(r: R) -> Result<Vec<SchemeRow>> {
    let mut rdr = reader(r);
    let mut records = rdr.records();
    let header = records.next().transpose().map_err(csv_err)?;
    if header.as_ref().map(|h| h.iter().collect::<Vec<_>>()) != Some(RESULTS_HEADER.to_vec()) {
        return Err(GpError::Parse {
            line: 1,
            message: "unexpected results header".into(),
        });
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |m: String| GpError::Parse { line, message: m };
        let scheme: Scheme = rec[0].parse().map_err(|e: GpError| bad(e.to_string()))?;
        let function: TestFunction = rec[1].parse().map_err(|e: GpError| bad(e.to_string()))?;
        let trial: usize = rec[2].parse().map_err(|_| bad("bad trial".into()))?;
        let seed: u64 = rec[3].parse().map_err(|_| bad("bad seed".into()))?;
        let (outcome, n) = if rec[8].is_empty() {
            let active_size: usize = rec[5].parse().map_err(|_| bad("bad active_size".into()))?;
            let active_fraction = parse_f64(&rec[6], line, "active_fraction")?;
            (
                Ok(SchemeResult {
                    scheme,
                    test_rmse: parse_f64(&rec[4], line, "rmse")?,
                    active_fraction,
                    active_size,
                    wall_time: parse_f64(&rec[7], line, "wall_time_s")?,
                    seed,
                }),
                (active_size as f64 / active_fraction).round() as usize,
            )
        } else {
            (Err(rec[8].to_string()), 0)
        };
        rows.push(SchemeRow {
            function,
            trial,
            seed,
            scheme,
            n,
            outcome,
        });
    }
    Ok(rows)
}

pub fn write_summary<W: Write>(w: W, summaries: &[SchemeSummary]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for s in summaries {
        wtr.write_record([
            s.function.to_string(),
            s.scheme.to_string(),
            s.trials_ok.to_string(),
            s.median_rmse.to_string(),
            s.q1_rmse.to_string(),
            s.q3_rmse.to_string(),
            s.median_active_fraction.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_summary<R: Read>(r: R) -> Result<Vec<SchemeSummary>> {
    let mut rdr = reader(r);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if i == 0 {
            continue;
        }
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |m: String| GpError::Parse { line, message: m };
        out.push(SchemeSummary {
            function: rec[0].parse().map_err(|e: GpError| bad(e.to_string()))?,
            scheme: rec[1].parse().map_err(|e: GpError| bad(e.to_string()))?,
            trials_ok: rec[2].parse().map_err(|_| bad("bad trials_ok".into()))?,
            median_rmse: parse_f64(&rec[3], line, "median_rmse")?,
            q1_rmse: parse_f64(&rec[4], line, "q1_rmse")?,
            q3_rmse: parse_f64(&rec[5], line, "q3_rmse")?,
            median_active_fraction: parse_f64(&rec[6], line, "median_active_fraction")?,
        });
    }
    Ok(out)
}

/// Human-readable table: one row per function with the median test RMSE of each scheme
/// and the greedy active set as a whole percentage of the training set.
pub fn format_table(cmp: &Comparison, functions: &[TestFunction]) -> String {
    let mut out = String::new();
    let labels: Vec<&str> = functions.iter().map(|f| f.formula()).collect();
    let width = labels.iter().map(|l| l.len()).max().unwrap_or(0).max(8);
    out.push_str(&format!(
        "{:<width$} | {:>9} | {:>9} | {:>9} | {:>17}\n",
        "Function", "Full GP", "Random", "Greedy GP", "% of full dataset"
    ));
    out.push_str(&format!("{}\n", "-".repeat(width + 58)));
    for (f, label) in functions.iter().zip(labels) {
        let med = |s| cmp.summary(*f, s).map_or(f64::NAN, |x| x.median_rmse);
        let pct = cmp
            .summary(*f, Scheme::Greedy)
            .map_or(f64::NAN, |x| x.median_active_fraction);
        out.push_str(&format!(
            "{:<width$} | {:>9.2} | {:>9.2} | {:>9.2} | {:>16}%\n",
            label,
            med(Scheme::Full),
            med(Scheme::Random),
            med(Scheme::Greedy),
            percent(pct)
        ));
    }
    out
}

/// Whole-percent rendering of a fraction.
pub fn percent(fraction: f64) -> String {
    if fraction.is_finite() {
        format!("{}", (fraction * 100.0).round() as i64)
    } else {
        "NaN".into()
    }
}
