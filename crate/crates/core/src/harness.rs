//! Benchmark orchestration: multi-realization runs, success metrics, tables.
//!
//! A run is successful when the candidate minimizer lies in the open
//! ∞-norm ball of radius `success_threshold` around the true minimizer; the
//! expected error averages `‖candidate - x_min‖_∞` over successful runs
//! only. Realization `r` always draws from stream id `r` of the master seed,
//! so experiment cells sharing a seed also share initial ensembles and
//! results are independent of worker count and execution order.

use std::io::{self, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{run_cbo_ffs, run_cbo_traced};
use crate::dsmc::{run_lkbo_fvse_sy_traced, run_lkbo_fvse_traced, OptimizerParams};
use crate::format::to_json_line;
use crate::objectives::StochasticObjective;
use crate::prng::RngStream;
use crate::report::{RunReport, TraceOptions};
use crate::sampling::SampleLaw;

/// Which optimizer a benchmark cell runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OptimizerKind {
    LkboFvse,
    LkboFvseSy,
    Cbo,
    CboFfs,
}

impl OptimizerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerKind::LkboFvse => "lkbo_fvse",
            OptimizerKind::LkboFvseSy => "lkbo_fvse_sy",
            OptimizerKind::Cbo => "cbo",
            OptimizerKind::CboFfs => "cbo_ffs",
        }
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lkbo_fvse" => Ok(OptimizerKind::LkboFvse),
            "lkbo_fvse_sy" => Ok(OptimizerKind::LkboFvseSy),
            "cbo" => Ok(OptimizerKind::Cbo),
            "cbo_ffs" => Ok(OptimizerKind::CboFfs),
            other => Err(format!(
                "unknown optimizer `{other}` (expected lkbo_fvse, lkbo_fvse_sy, cbo, cbo_ffs)"
            )),
        }
    }
}

/// One benchmark cell: optimizer, parameters, objective, and protocol.
#[derive(Clone)]
pub struct ExperimentSpec {
    pub optimizer: OptimizerKind,
    pub params: OptimizerParams,
    pub objective: Arc<dyn StochasticObjective>,
    /// True minimizer used for success classification.
    pub x_min: Vec<f64>,
    pub law: SampleLaw,
    /// Realization count n_CBO.
    pub n_runs: usize,
    /// Open-ball radius for success (0.25 in the shipped benchmarks).
    pub success_threshold: f64,
    /// Success-rate level whose first crossing is reported (e.g. 0.80).
    pub record_rate_target: f64,
    pub master_seed: u64,
    /// Record per-iterate consensus errors (required for mid-run metrics and
    /// the first-crossing iterate; costs one f64 per iterate per run).
    pub track_per_iterate: bool,
}

/// One realization's outcome.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub run: usize,
    pub candidate: Vec<f64>,
    pub success: bool,
    /// `‖candidate - x_min‖_∞`; infinite for failed runs (JSON `null`).
    pub error: f64,
    pub eval_count: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(skip)]
    pub wall_secs: f64,
}

/// Aggregated benchmark metrics.
#[derive(Clone, Debug)]
pub struct BenchmarkResult {
    pub success_rate: f64,
    /// 95% Wilson interval for the success rate.
    pub wilson95: (f64, f64),
    /// Mean error over successful runs; absent when none succeeded.
    pub expected_error: Option<f64>,
    /// First iterate at which the per-iterate success rate reaches
    /// `record_rate_target` (tracking only).
    pub first_iter_at_target: Option<usize>,
    pub per_run: Vec<RunRecord>,
    /// Per-run `‖x^α(h, ·) - x_min‖_∞` series, `h = 0..=n_it` (tracking only).
    pub error_traces: Option<Vec<Vec<f64>>>,
    /// Total wall-clock seconds across runs.
    pub total_wall_secs: f64,
}

/// Metrics extracted at a single iterate from tracked traces.
#[derive(Clone, Copy, Debug)]
pub struct IterateMetrics {
    pub success_rate: f64,
    pub expected_error: Option<f64>,
    pub wilson95: (f64, f64),
}

impl BenchmarkResult {
    /// Success/error metrics at iterate `h` (requires tracking).
    pub fn metrics_at(&self, h: usize, threshold: f64) -> Option<IterateMetrics> {
        let traces = self.error_traces.as_ref()?;
        let mut successes = 0usize;
        let mut err_sum = 0.0;
        for trace in traces {
            let e = *trace.get(h)?;
            if e < threshold {
                successes += 1;
                err_sum += e;
            }
        }
        let n = traces.len();
        Some(IterateMetrics {
            success_rate: successes as f64 / n as f64,
            expected_error: (successes > 0).then(|| err_sum / successes as f64),
            wilson95: wilson95(successes, n),
        })
    }
}

/// Success classification: `error = ‖candidate - x_min‖_∞`, success iff the
/// error is strictly below `thr` (open ball). NaN coordinates count as
/// infinite error.
pub fn classify_run(candidate: &[f64], x_min: &[f64], thr: f64) -> (bool, f64) {
    assert_eq!(candidate.len(), x_min.len());
    assert!(thr > 0.0);
    let error = crate::dsmc::inf_error(candidate, x_min);
    (error < thr, error)
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson95(successes: usize, n: usize) -> (f64, f64) {
    const Z: f64 = 1.959963984540054;
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    (((center - half).max(0.0)), ((center + half).min(1.0)))
}

/// Execute `spec.n_runs` independent realizations and aggregate.
///
/// Runs execute in parallel on the current rayon pool; each owns stream id
/// `r`, and aggregation is by run index, so the result is identical for any
/// worker count. A failed realization is recorded as unsuccessful with
/// infinite error rather than aborting the benchmark.
pub fn run_benchmark(spec: &ExperimentSpec) -> BenchmarkResult {
    preflight(spec);
    let n_it = spec.params.n_it;
    let outcomes: Vec<(RunRecord, Option<Vec<f64>>)> = (0..spec.n_runs)
        .into_par_iter()
        .map(|r| execute_run(spec, r))
        .collect();

    let mut per_run = Vec::with_capacity(spec.n_runs);
    let mut traces = spec.track_per_iterate.then(Vec::new);
    let mut total_wall = 0.0;
    for (record, trace) in outcomes {
        total_wall += record.wall_secs;
        if let Some(ts) = traces.as_mut() {
            ts.push(trace.unwrap_or_else(|| vec![f64::INFINITY; n_it + 1]));
        }
        per_run.push(record);
    }

    let successes = per_run.iter().filter(|r| r.success).count();
    let success_rate = successes as f64 / spec.n_runs as f64;
    let expected_error = (successes > 0).then(|| {
        per_run.iter().filter(|r| r.success).map(|r| r.error).sum::<f64>() / successes as f64
    });
    let first_iter_at_target = traces.as_ref().and_then(|ts| {
        (0..=n_it).find(|&h| {
            let hits = ts.iter().filter(|t| t[h] < spec.success_threshold).count();
            hits as f64 / spec.n_runs as f64 >= spec.record_rate_target
        })
    });

    BenchmarkResult {
        success_rate,
        wilson95: wilson95(successes, spec.n_runs),
        expected_error,
        first_iter_at_target,
        per_run,
        error_traces: traces,
        total_wall_secs: total_wall,
    }
}

fn preflight(spec: &ExperimentSpec) {
    spec.params.validate().expect("invalid optimizer parameters");
    assert!(spec.n_runs >= 1);
    assert!(spec.success_threshold > 0.0);
    assert_eq!(spec.x_min.len(), spec.objective.dim_x());
    // With η = Δt and ε = 1 every particle collides every iterate.
    if spec.params.eta == spec.params.dt && spec.params.epsilon == 1.0 {
        assert_eq!(
            spec.params.colliding_target(),
            spec.params.n_particles as f64,
            "N_c must equal N exactly when eta = dt and epsilon = 1"
        );
    }
}

fn execute_run(spec: &ExperimentSpec, r: usize) -> (RunRecord, Option<Vec<f64>>) {
    let mut stream = RngStream::new(spec.master_seed, r as u64);
    let trace = if spec.track_per_iterate {
        TraceOptions::errors_against(&spec.x_min)
    } else {
        TraceOptions::none()
    };
    let started = Instant::now();
    let outcome: Result<RunReport, _> = match spec.optimizer {
        OptimizerKind::LkboFvse => {
            run_lkbo_fvse_traced(&spec.params, &*spec.objective, &spec.law, &mut stream, &trace)
        }
        OptimizerKind::LkboFvseSy => run_lkbo_fvse_sy_traced(
            &spec.params,
            &*spec.objective,
            &spec.law,
            &mut stream,
            &trace,
        ),
        OptimizerKind::Cbo => run_cbo_traced(&spec.params, &*spec.objective, &mut stream, &trace),
        OptimizerKind::CboFfs => {
            run_cbo_ffs(&spec.params, &*spec.objective, &spec.law, &mut stream)
        }
    };
    match outcome {
        Ok(report) => {
            let (success, error) =
                classify_run(&report.candidate, &spec.x_min, spec.success_threshold);
            let record = RunRecord {
                run: r,
                candidate: report.candidate,
                success,
                error,
                eval_count: report.eval_count,
                failure: None,
                wall_secs: report.wall_secs,
            };
            (record, report.error_trace)
        }
        Err(err) => {
            let record = RunRecord {
                run: r,
                candidate: vec![f64::NAN; spec.objective.dim_x()],
                success: false,
                error: f64::INFINITY,
                eval_count: 0,
                failure: Some(err.to_string()),
                wall_secs: started.elapsed().as_secs_f64(),
            };
            (record, None)
        }
    }
}

/// One rendered cell of a benchmark table.
#[derive(Clone, Debug)]
pub struct TableCell {
    pub success_rate: f64,
    pub expected_error: Option<f64>,
    /// `Some(inner)` renders the parenthetical iterate column; `inner` is the
    /// first target-crossing iterate or `None` when never reached.
    pub first_iter: Option<Option<usize>>,
}

impl TableCell {
    fn render(&self) -> String {
        let mut cell = format!("{:.2}%", 100.0 * self.success_rate);
        match self.expected_error {
            Some(e) => cell.push_str(&format!(" {e:.4}")),
            None => cell.push_str(" NA"),
        }
        if let Some(iter) = &self.first_iter {
            match iter {
                Some(h) => cell.push_str(&format!(" ({h})")),
                None => cell.push_str(" (-)"),
            }
        }
        cell
    }
}

/// Write a rectangular grid of cells as CSV with row and column labels.
pub fn emit_table(
    path: &Path,
    row_labels: &[String],
    col_labels: &[String],
    cells: &[TableCell],
) -> io::Result<()> {
    assert_eq!(cells.len(), row_labels.len() * col_labels.len());
    let mut out = String::new();
    for label in col_labels {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    for (i, row) in row_labels.iter().enumerate() {
        out.push_str(row);
        for j in 0..col_labels.len() {
            out.push(',');
            out.push_str(&cells[i * col_labels.len() + j].render());
        }
        out.push('\n');
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())
}

/// Write per-run records as JSON lines (run order, one object per line).
pub fn write_per_run_jsonl(path: &Path, records: &[RunRecord]) -> io::Result<()> {
    let mut file = std::fs::File::create(path)?;
    for record in records {
        file.write_all(to_json_line(record).as_bytes())?;
        file.write_all(b"\n")?;
    }
    Ok(())
}
