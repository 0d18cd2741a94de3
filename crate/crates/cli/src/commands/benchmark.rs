//! `benchmark`: multi-realization grids with success-rate/error tables.

use lkbo_core::harness::{
    emit_table, run_benchmark, write_per_run_jsonl, BenchmarkResult, ExperimentSpec,
    OptimizerKind, TableCell,
};
use lkbo_core::SampleLaw;

use crate::build::{self, BuiltObjective};
use crate::commands::{CmdError, Ctx};
use crate::config::{Config, ConfigError};

struct ColSpec {
    label: String,
    kind: OptimizerKind,
    n_sy: Option<usize>,
    law: SampleLaw,
}

enum RowAxis {
    /// One benchmark per (row, col); rows vary the sample size M.
    SampleSize(Vec<(String, usize)>),
    /// One tracked benchmark per column; rows read metrics at an iterate.
    Iterate(Vec<(String, usize)>),
    Single(String),
}

pub fn run(ctx: &Ctx) -> Result<(), CmdError> {
    let cfg = &ctx.cfg;
    let built = build::objective_from(cfg)?;
    let base_params = build::params_from(cfg)?;
    let base_law = build::law_from(cfg)?;
    let (base_kind, base_n_sy) = build::kind_from(cfg)?;

    let n_runs = cfg.usize_or("benchmark.n_runs", 100)?;
    let threshold = cfg.f64_or("benchmark.success_threshold", 0.25)?;
    let rate_target = cfg.f64_or("benchmark.record_rate_target", 0.8)?;
    let report_iterate = cfg.usize_opt("benchmark.report_iterate")?;
    let show_first = cfg.bool_or("benchmark.show_first_target_iterate", false)?;

    let cols = column_axis(cfg, &base_law, base_kind, base_n_sy)?;
    let rows = row_axis(cfg, &built, base_params.n_it)?;
    let tracking = cfg.bool_or("benchmark.track_per_iterate", false)?
        || report_iterate.is_some()
        || show_first
        || matches!(rows, RowAxis::Iterate(_));

    if let Some(h) = report_iterate {
        if h > base_params.n_it {
            return Err(ConfigError(format!(
                "benchmark.report_iterate = {h} exceeds optimizer.n_it = {}",
                base_params.n_it
            ))
            .into());
        }
    }

    let make_spec = |col: &ColSpec, sample_size: usize| -> ExperimentSpec {
        let mut params = base_params.clone();
        params.sample_size = sample_size;
        if let Some(n) = col.n_sy {
            params.n_sy = n;
        }
        ExperimentSpec {
            optimizer: col.kind,
            params,
            objective: built.objective.clone(),
            x_min: built.x_min.clone(),
            law: col.law,
            n_runs,
            success_threshold: threshold,
            record_rate_target: rate_target,
            master_seed: ctx.seed,
            track_per_iterate: tracking,
        }
    };

    let mut cells: Vec<TableCell> = Vec::new();
    let mut row_labels: Vec<String> = Vec::new();
    let col_labels: Vec<String> = cols.iter().map(|c| c.label.clone()).collect();
    let single_cell = matches!(rows, RowAxis::Single(_)) && cols.len() == 1;

    match &rows {
        RowAxis::Iterate(iterates) => {
            for (label, _) in iterates {
                row_labels.push(label.clone());
            }
            // Column-major execution: one tracked benchmark serves all rows.
            let mut by_col: Vec<Vec<TableCell>> = Vec::new();
            for col in &cols {
                let spec = make_spec(col, base_params.sample_size);
                let result = run_benchmark(&spec);
                self::write_jsonl(ctx, single_cell, &col.label, "", &result)?;
                let mut column = Vec::new();
                for (label, h) in iterates {
                    let metrics = result.metrics_at(*h, threshold).ok_or_else(|| {
                        CmdError::Config(format!(
                            "benchmark.row_values: iterate {h} out of range for n_it = {}",
                            base_params.n_it
                        ))
                    })?;
                    print_cell(label, &col.label, metrics.success_rate, metrics.expected_error,
                        metrics.wilson95, None, &result);
                    column.push(TableCell {
                        success_rate: metrics.success_rate,
                        expected_error: metrics.expected_error,
                        first_iter: show_first.then_some(result.first_iter_at_target),
                    });
                }
                by_col.push(column);
            }
            for i in 0..row_labels.len() {
                for column in &by_col {
                    cells.push(column[i].clone());
                }
            }
        }
        RowAxis::SampleSize(values) => {
            for (label, m) in values {
                row_labels.push(label.clone());
                for col in &cols {
                    let spec = make_spec(col, *m);
                    let result = run_benchmark(&spec);
                    self::write_jsonl(ctx, single_cell, &col.label, label, &result)?;
                    cells.push(render_cell(
                        label, col, &result, report_iterate, threshold, show_first,
                    )?);
                }
            }
        }
        RowAxis::Single(label) => {
            row_labels.push(label.clone());
            for col in &cols {
                let spec = make_spec(col, base_params.sample_size);
                let result = run_benchmark(&spec);
                self::write_jsonl(ctx, single_cell, &col.label, "", &result)?;
                cells.push(render_cell(
                    label, col, &result, report_iterate, threshold, show_first,
                )?);
            }
        }
    }

    let table_path = ctx.output_dir.join("table.csv");
    emit_table(&table_path, &row_labels, &col_labels, &cells)?;
    println!("table written to {}", table_path.display());
    Ok(())
}

fn render_cell(
    row_label: &str,
    col: &ColSpec,
    result: &BenchmarkResult,
    report_iterate: Option<usize>,
    threshold: f64,
    show_first: bool,
) -> Result<TableCell, CmdError> {
    let (rate, error, wilson) = match report_iterate {
        None => (result.success_rate, result.expected_error, result.wilson95),
        Some(h) => {
            let m = result.metrics_at(h, threshold).ok_or_else(|| {
                CmdError::Config(format!("benchmark.report_iterate: iterate {h} not tracked"))
            })?;
            (m.success_rate, m.expected_error, m.wilson95)
        }
    };
    print_cell(row_label, &col.label, rate, error, wilson, report_iterate, result);
    Ok(TableCell {
        success_rate: rate,
        expected_error: error,
        first_iter: show_first.then_some(result.first_iter_at_target),
    })
}

fn print_cell(
    row: &str,
    col: &str,
    rate: f64,
    error: Option<f64>,
    wilson: (f64, f64),
    at_iterate: Option<usize>,
    result: &BenchmarkResult,
) {
    let err_text = error.map_or("NA".to_string(), |e| format!("{e:.4}"));
    let where_text = at_iterate.map_or(String::new(), |h| format!(" at h={h}"));
    let first = result
        .first_iter_at_target
        .map_or(String::new(), |h| format!(", target first hit at {h}"));
    let evals: u64 = result.per_run.iter().map(|r| r.eval_count).sum();
    println!(
        "{row} x {col}{where_text}: success {:.2}% (95% CI {:.2}-{:.2}%), error {err_text}{first}, F-evals {evals}, wall {:.1}s",
        100.0 * rate,
        100.0 * wilson.0,
        100.0 * wilson.1,
        result.total_wall_secs,
    );
}

fn write_jsonl(
    ctx: &Ctx,
    single_cell: bool,
    col_label: &str,
    row_label: &str,
    result: &BenchmarkResult,
) -> Result<(), CmdError> {
    let name = if single_cell {
        "per_run.jsonl".to_string()
    } else if row_label.is_empty() {
        format!("per_run_{}.jsonl", sanitize(col_label))
    } else {
        format!("per_run_{}_{}.jsonl", sanitize(row_label), sanitize(col_label))
    };
    write_per_run_jsonl(&ctx.output_dir.join(name), &result.per_run)?;
    Ok(())
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

fn column_axis(
    cfg: &Config,
    base_law: &SampleLaw,
    base_kind: OptimizerKind,
    base_n_sy: Option<usize>,
) -> Result<Vec<ColSpec>, CmdError> {
    match cfg.str_or("benchmark.grid_cols", "")? {
        "" => Ok(vec![ColSpec {
            label: base_kind.as_str().to_string(),
            kind: base_kind,
            n_sy: base_n_sy,
            law: *base_law,
        }]),
        "theta" => {
            let values = cfg
                .str_list_opt("benchmark.col_values")?
                .ok_or_else(|| ConfigError("benchmark.grid_cols = theta needs benchmark.col_values".into()))?;
            values
                .iter()
                .map(|theta| {
                    Ok(ColSpec {
                        label: theta.clone(),
                        kind: base_kind,
                        n_sy: base_n_sy,
                        law: build::law_from_theta(cfg, theta)?,
                    })
                })
                .collect()
        }
        "optimizer" => {
            let values = cfg
                .str_list_opt("benchmark.col_values")?
                .ok_or_else(|| ConfigError("benchmark.grid_cols = optimizer needs benchmark.col_values".into()))?;
            values
                .iter()
                .map(|raw| {
                    let (kind, n_sy) = build::parse_kind(raw)?;
                    Ok(ColSpec {
                        label: raw.clone(),
                        kind,
                        n_sy: n_sy.or(base_n_sy),
                        law: *base_law,
                    })
                })
                .collect()
        }
        other => Err(ConfigError(format!(
            "benchmark.grid_cols: unknown axis `{other}` (expected theta or optimizer)"
        ))
        .into()),
    }
}

fn row_axis(
    cfg: &Config,
    built: &BuiltObjective,
    n_it: usize,
) -> Result<RowAxis, CmdError> {
    match cfg.str_or("benchmark.grid_rows", "")? {
        "" => Ok(RowAxis::Single(built.name.clone())),
        "M" => {
            let values = require_row_values(cfg)?;
            Ok(RowAxis::SampleSize(
                values
                    .iter()
                    .map(|v| (format!("M={}", *v as usize), *v as usize))
                    .collect(),
            ))
        }
        "iterate" => {
            let values = require_row_values(cfg)?;
            let rows: Vec<(String, usize)> = values
                .iter()
                .map(|v| (format!("h={}", *v as usize), *v as usize))
                .collect();
            if let Some((label, h)) = rows.iter().find(|(_, h)| *h > n_it) {
                return Err(ConfigError(format!(
                    "benchmark.row_values: {label} exceeds optimizer.n_it = {n_it} ({h} > {n_it})"
                ))
                .into());
            }
            Ok(RowAxis::Iterate(rows))
        }
        other => Err(ConfigError(format!(
            "benchmark.grid_rows: unknown axis `{other}` (expected M or iterate)"
        ))
        .into()),
    }
}

fn require_row_values(cfg: &Config) -> Result<Vec<f64>, CmdError> {
    let values = cfg
        .num_list_opt("benchmark.row_values")?
        .ok_or_else(|| ConfigError("benchmark.grid_rows needs benchmark.row_values".into()))?;
    if values.is_empty() || values.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
        return Err(ConfigError("benchmark.row_values: expected nonnegative integers".into()).into());
    }
    Ok(values)
}
