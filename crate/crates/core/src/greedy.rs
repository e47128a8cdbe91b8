//! Greedy forward selection of an active training subset.
//!
//! Points start in the remainder set and move to the active set one per stage. Each stage
//! scores every remainder point by posterior standard deviation plus absolute residual,
//! admits the best one, and updates the remainder posterior by rank-one Gaussian
//! conditioning. The inverse of the regularized active Gram matrix is grown alongside via
//! the Schur complement, so the final model needs no factorization.
//!
//! The posterior is kept over the original dataset indices; the remainder is a mask over
//! them, so removing a point never copies a matrix.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GpError, Result};
use crate::gp::{Dataset, GpModel};
use crate::kernel::{gram_matrix, Hyperparameters};
use crate::linalg::{GrowableInverse, JITTER_FLOOR_SCALE};

/// Run settings. `None` fields fall back to data-dependent defaults.
#[derive(Debug, Clone, Default)]
pub struct GreedyConfig {
    /// Convergence threshold on the stage-to-stage RMSE decrease.
    /// Default: 10⁻³ × standard deviation of the targets.
    pub delta: Option<f64>,
    /// Default: ⌈N/2⌉.
    pub max_stages: Option<usize>,
    pub seed: u64,
    /// Keep a [`StageRecord`] per stage in the result.
    pub trace: bool,
}

impl GreedyConfig {
    pub fn new(seed: u64) -> Self {
        GreedyConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn resolved_delta(&self, data: &Dataset) -> f64 {
        self.delta.unwrap_or_else(|| 1e-3 * std_dev(data.targets()))
    }

    pub fn resolved_max_stages(&self, data: &Dataset) -> usize {
        self.max_stages.unwrap_or(data.len().div_ceil(2))
    }
}

fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt()
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxStages,
    RemainderExhausted,
}

/// Stage-t snapshot of the selection.
#[derive(Debug, Clone)]
pub struct GreedyState {
    stage: usize,
    active: Vec<usize>,
    /// Ascending original indices.
    remainder: Vec<usize>,
    inverse: GrowableInverse,
    /// Posterior mean over all N points; only remainder entries are current.
    mean: DVector<f64>,
    /// Posterior covariance over all N points; only remainder rows/columns are current.
    cov: DMatrix<f64>,
    rmse_history: Vec<f64>,
    rng: ChaCha8Rng,
    inverse_ops: u64,
}

impl GreedyState {
    pub fn stage(&self) -> usize {
        self.stage
    }

    /// Active indices in selection order.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn remainder(&self) -> &[usize] {
        &self.remainder
    }

    pub fn inverse(&self) -> &GrowableInverse {
        &self.inverse
    }

    /// Posterior mean on the remainder, in remainder order.
    pub fn mu(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.remainder.len(),
            self.remainder.iter().map(|&r| self.mean[r]),
        )
    }

    /// Posterior covariance on the remainder, in remainder order.
    pub fn sigma(&self) -> DMatrix<f64> {
        let r = &self.remainder;
        DMatrix::from_fn(r.len(), r.len(), |i, j| self.cov[(r[i], r[j])])
    }

    /// Posterior variances on the remainder, clamped at zero.
    pub fn variances(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.remainder.len(),
            self.remainder.iter().map(|&r| self.cov[(r, r)].max(0.0)),
        )
    }

    pub fn rmse_history(&self) -> &[f64] {
        &self.rmse_history
    }

    /// Cumulative multiply-adds spent growing the active inverse.
    pub fn inverse_ops(&self) -> u64 {
        self.inverse_ops
    }

    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }
}

/// Scores and posterior at one stage, taken before that stage's selection.
#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub stage: usize,
    /// Remainder indices (0-based), ascending.
    pub points: Vec<usize>,
    pub scores: Vec<f64>,
    pub mu: Vec<f64>,
    pub std: Vec<f64>,
    /// Index admitted at this stage, `None` at the final stage.
    pub selected: Option<usize>,
}

/// Output of a greedy run.
#[derive(Debug, Clone)]
pub struct GreedyResult {
    pub active: Vec<usize>,
    pub remainder: Vec<usize>,
    pub model: GpModel,
    /// Remainder RMSE at stages 1..=T.
    pub rmse_history: Vec<f64>,
    pub stage_trace: Option<Vec<StageRecord>>,
    pub stop_reason: StopReason,
    pub inverse_ops: u64,
}

impl GreedyResult {
    pub fn stages(&self) -> usize {
        self.rmse_history.len()
    }
}

/// A dataset with fixed hyperparameters and its precomputed noise-free Gram matrix.
pub struct GreedySelector<'a> {
    data: &'a Dataset,
    hypers: Hyperparameters,
    gram: DMatrix<f64>,
    floor: f64,
}

impl<'a> GreedySelector<'a> {
    pub fn new(data: &'a Dataset, hypers: Hyperparameters) -> Result<Self> {
        if data.len() < 2 {
            return Err(GpError::invalid(format!(
                "greedy selection needs at least 2 points, got {}",
                data.len()
            )));
        }
        let gram = gram_matrix(data.inputs(), data.inputs(), &hypers, false)?;
        Ok(GreedySelector {
            data,
            hypers,
            gram,
            floor: JITTER_FLOOR_SCALE * hypers.total_variance(),
        })
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn hypers(&self) -> &Hyperparameters {
        &self.hypers
    }

    /// Stage 1: one active point drawn uniformly with `seed`.
    pub fn init_state(&self, seed: u64) -> Result<GreedyState> {
        let n = self.data.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let first = rng.random_range(0..n);
        let mut state = GreedyState {
            stage: 0,
            active: Vec::new(),
            remainder: (0..n).collect(),
            inverse: GrowableInverse::empty(),
            mean: DVector::zeros(n),
            cov: self.gram.clone(),
            rmse_history: Vec::new(),
            rng,
            inverse_ops: 0,
        };
        self.admit(&mut state, first)?;
        Ok(state)
    }

    /// Δ for every remainder point, in remainder order.
    pub fn selection_scores(&self, s: &GreedyState) -> DVector<f64> {
        let y = self.data.targets();
        DVector::from_iterator(
            s.remainder.len(),
            s.remainder
                .iter()
                .map(|&r| s.cov[(r, r)].max(0.0).sqrt() + (s.mean[r] - y[r]).abs()),
        )
    }

    /// Remainder RMSE, normalized by the remainder size.
    pub fn remainder_rmse(&self, s: &GreedyState) -> Result<f64> {
        remainder_rmse_of(s, self.data.targets())
    }

    /// Advances one stage and returns the admitted index.
    ///
    /// The best-scoring candidate is tried first (ties to the lowest index). If the inverse
    /// cannot be grown with it, the next best is tried; a second failure aborts the stage and
    /// leaves `s` unchanged.
    pub fn step(&self, s: &mut GreedyState) -> Result<usize> {
        let scores = self.selection_scores(s);
        self.step_with_scores(s, &scores)
    }

    fn step_with_scores(&self, s: &mut GreedyState, scores: &DVector<f64>) -> Result<usize> {
        if s.remainder.len() < 2 {
            return Err(GpError::invalid(
                "a step needs at least two remainder points so the remainder RMSE stays defined",
            ));
        }
        let mut order: Vec<usize> = (0..s.remainder.len()).collect();
        // remainder is ascending, so a stable sort keeps ties at the lowest index
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

        let first = s.remainder[order[0]];
        match self.admit(s, first) {
            Ok(()) => Ok(first),
            Err(GpError::SchurBelowFloor { .. }) => {
                let second = s.remainder[order[1]];
                self.admit(s, second)
                    .map(|()| second)
                    .map_err(|e| GpError::CandidateRejected {
                        stage: s.stage,
                        candidate: second,
                        source: Box::new(e),
                    })
            }
            Err(e) => Err(GpError::CandidateRejected {
                stage: s.stage,
                candidate: first,
                source: Box::new(e),
            }),
        }
    }

    /// Moves `idx` from the remainder to the active set and conditions on its target.
    fn admit(&self, s: &mut GreedyState, idx: usize) -> Result<()> {
        let pos = s
            .remainder
            .binary_search(&idx)
            .map_err(|_| GpError::invalid(format!("index {idx} is not in the remainder")))?;

        let border: Vec<f64> = s.active.iter().map(|&a| self.gram[(a, idx)]).collect();
        let diag = self.gram[(idx, idx)] + self.hypers.noise_variance;
        let mut ops = 0;
        let inverse = s
            .inverse
            .grow_counted(&border, diag, self.floor, &mut ops)?;

        let y = self.data.targets();
        let pivot = s.cov[(idx, idx)] + self.hypers.noise_variance;
        let residual = y[idx] - s.mean[idx];
        s.remainder.remove(pos);
        let col: Vec<f64> = s.remainder.iter().map(|&r| s.cov[(r, idx)]).collect();

        for (k, &r) in s.remainder.iter().enumerate() {
            s.mean[r] += col[k] * residual / pivot;
        }
        for (kq, &q) in s.remainder.iter().enumerate() {
            let gq = col[kq] / pivot;
            for (kr, &r) in s.remainder.iter().enumerate() {
                s.cov[(r, q)] -= col[kr] * gq;
            }
        }

        s.inverse = inverse;
        s.inverse_ops += ops;
        s.active.push(idx);
        s.stage += 1;
        if !s.remainder.is_empty() {
            let rmse = remainder_rmse_of(s, y)?;
            s.rmse_history.push(rmse);
        }
        Ok(())
    }

    fn record(&self, s: &GreedyState) -> StageRecord {
        let scores = self.selection_scores(s);
        StageRecord {
            stage: s.stage,
            points: s.remainder.clone(),
            scores: scores.iter().copied().collect(),
            mu: s.remainder.iter().map(|&r| s.mean[r]).collect(),
            std: s.variances().iter().map(|v| v.sqrt()).collect(),
            selected: None,
        }
    }

    /// Runs stages until convergence, the stage cap, or a single remaining point.
    pub fn run(&self, config: &GreedyConfig) -> Result<GreedyResult> {
        let mut trace = Vec::new();
        let mut result = if config.trace {
            self.run_with_observer(config, |r| {
                trace.push(r.clone());
                Ok(())
            })?
        } else {
            self.run_with_observer(config, |_| Ok(()))?
        };
        if config.trace {
            result.stage_trace = Some(trace);
        }
        Ok(result)
    }

    /// [`run`](Self::run) that hands every stage record to `observer` as soon as it exists.
    ///
    /// Records emitted before a failure have already been delivered when the error returns.
    pub fn run_with_observer<F>(
        &self,
        config: &GreedyConfig,
        mut observer: F,
    ) -> Result<GreedyResult>
    where
        F: FnMut(&StageRecord) -> Result<()>,
    {
        let n = self.data.len();
        let delta = config.resolved_delta(self.data);
        let max_stages = config.resolved_max_stages(self.data);
        if delta.is_nan() {
            return Err(GpError::invalid("delta must not be NaN"));
        }
        if max_stages == 0 || max_stages > n - 1 {
            return Err(GpError::invalid(format!(
                "max_stages must be in 1..={}, got {max_stages}",
                n - 1
            )));
        }

        let mut s = self.init_state(config.seed)?;
        let mut converged = false;
        let stop_reason = loop {
            let mut rec = self.record(&s);
            let stop = if converged {
                Some(StopReason::Converged)
            } else if s.stage >= max_stages {
                Some(StopReason::MaxStages)
            } else if s.remainder.len() <= 1 {
                Some(StopReason::RemainderExhausted)
            } else {
                None
            };
            if let Some(reason) = stop {
                observer(&rec)?;
                break reason;
            }
            let scores = DVector::from_column_slice(&rec.scores);
            let picked = self.step_with_scores(&mut s, &scores)?;
            rec.selected = Some(picked);
            observer(&rec)?;

            let h = &s.rmse_history;
            // an RMSE increase is a negative decrease and also stops the run
            converged = h[h.len() - 2] - h[h.len() - 1] < delta;
        };

        let inputs = s
            .active
            .iter()
            .map(|&i| self.data.inputs()[i].clone())
            .collect();
        let targets = s.active.iter().map(|&i| self.data.targets()[i]).collect();
        let model = GpModel::from_parts(self.hypers, inputs, targets, s.inverse.clone())?;
        Ok(GreedyResult {
            active: s.active,
            remainder: s.remainder,
            model,
            rmse_history: s.rmse_history,
            stage_trace: None,
            stop_reason,
            inverse_ops: s.inverse_ops,
        })
    }
}

fn remainder_rmse_of(s: &GreedyState, y: &[f64]) -> Result<f64> {
    if s.remainder.is_empty() {
        return Err(GpError::invalid("remainder is empty"));
    }
    let sq: f64 = s
        .remainder
        .iter()
        .map(|&r| (s.mean[r] - y[r]).powi(2))
        .sum();
    Ok((sq / s.remainder.len() as f64).sqrt())
}

/// Greedy selection on `data` with fixed `hypers`.
pub fn run(data: &Dataset, hypers: Hyperparameters, config: &GreedyConfig) -> Result<GreedyResult> {
    GreedySelector::new(data, hypers)?.run(config)
}
