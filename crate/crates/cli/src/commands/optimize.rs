//! `optimize`: one optimizer realization.

use serde::Serialize;

use lkbo_core::baselines::{run_cbo_traced, run_cbo_ffs};
use lkbo_core::dsmc::{run_lkbo_fvse_sy_traced, run_lkbo_fvse_traced, OptimizerError};
use lkbo_core::format::to_json_line;
use lkbo_core::harness::OptimizerKind;
use lkbo_core::objectives::eval_fhat_m;
use lkbo_core::sampling::draw_batch;
use lkbo_core::{RngStream, RunReport, TraceOptions};

use crate::build;
use crate::commands::{CmdError, Ctx};
use crate::output::write_run_trace;

#[derive(Serialize)]
struct OptimizeSummary<'a> {
    optimizer: &'a str,
    candidate: &'a [f64],
    /// Estimator value at the candidate under a fresh realization (the
    /// closed-form expectation for the CBO baseline).
    objective_at_candidate: f64,
    eval_count: u64,
    iterations: usize,
    wall_secs: f64,
}

pub fn run(ctx: &Ctx) -> Result<(), CmdError> {
    let built = build::objective_from(&ctx.cfg)?;
    let law = build::law_from(&ctx.cfg)?;
    let mut params = build::params_from(&ctx.cfg)?;
    let (kind, n_sy) = build::kind_from(&ctx.cfg)?;
    if let Some(n) = n_sy {
        params.n_sy = n;
    }
    let want_trace = ctx.cfg.bool_or("optimize.trace", false)?;
    let trace = if want_trace {
        TraceOptions::phase()
    } else {
        TraceOptions::none()
    };

    let mut stream = RngStream::new(ctx.seed, 0);
    let obj = &*built.objective;
    let report: RunReport = match kind {
        OptimizerKind::LkboFvse => run_lkbo_fvse_traced(&params, obj, &law, &mut stream, &trace),
        OptimizerKind::LkboFvseSy => {
            run_lkbo_fvse_sy_traced(&params, obj, &law, &mut stream, &trace)
        }
        OptimizerKind::Cbo => run_cbo_traced(&params, obj, &mut stream, &trace),
        OptimizerKind::CboFfs => run_cbo_ffs(&params, obj, &law, &mut stream),
    }
    .map_err(map_run_error)?;

    let objective_at_candidate = match kind {
        OptimizerKind::Cbo => obj
            .expectation(&report.candidate)
            .expect("cbo run verified the expectation exists"),
        _ => {
            let batch = draw_batch(&law, params.sample_size, &mut stream);
            eval_fhat_m(obj, &report.candidate, &batch)
                .map_err(|e| CmdError::Numeric(e.to_string()))?
        }
    };

    println!(
        "{}",
        to_json_line(&OptimizeSummary {
            optimizer: kind.as_str(),
            candidate: &report.candidate,
            objective_at_candidate,
            eval_count: report.eval_count,
            iterations: report.iterations,
            wall_secs: report.wall_secs,
        })
    );

    if want_trace {
        if let Some(phase) = &report.phase {
            write_run_trace(&ctx.output_dir.join("trace.csv"), phase)?;
        }
    }
    Ok(())
}

pub(crate) fn map_run_error(e: OptimizerError) -> CmdError {
    match e {
        OptimizerError::Params(p) => CmdError::Config(p.to_string()),
        OptimizerError::ExpectationUnavailable { .. } => CmdError::Config(e.to_string()),
        other => CmdError::Numeric(other.to_string()),
    }
}
