//! Comparison optimizers: standard CBO on the closed-form expectation, and
//! the fixed-sample CBO with outer averaging (CBO-FFS).
//!
//! Both reuse the consensus kernel and diffusion matrices of the kinetic
//! method, so benchmark comparisons isolate the sampling strategy. The CBO
//! update is the Euler–Maruyama step
//!
//! ```text
//! x ← x + λ (x^α - x) Δt + σ D(x) √Δt ⊙ z
//! ```
//!
//! applied to every particle each iterate. CBO-FFS runs `n_sY` independent
//! inner optimizations, each on the estimator frozen at one realization
//! `ȳ_s`, and averages the `n_sY` candidates.

use std::time::Instant;

use crate::consensus::{consensus_point, DiffusionKind, ParticleEnsemble};
use crate::dsmc::{inf_error, OptimizerError, OptimizerParams};
use crate::moments::empirical_moments;
use crate::objectives::{fhat_values, StochasticObjective};
use crate::prng::RngStream;
use crate::report::{PhaseTrace, RunReport, TraceOptions};
use crate::sampling::{draw_batch, SampleLaw};

/// Standard CBO on the closed-form expectation `f`.
pub fn run_cbo(
    params: &OptimizerParams,
    obj: &dyn StochasticObjective,
    stream: &mut RngStream,
) -> Result<RunReport, OptimizerError> {
    run_cbo_traced(params, obj, stream, &TraceOptions::none())
}

/// Standard CBO with trace recording.
pub fn run_cbo_traced(
    params: &OptimizerParams,
    obj: &dyn StochasticObjective,
    stream: &mut RngStream,
    trace: &TraceOptions,
) -> Result<RunReport, OptimizerError> {
    params.validate()?;
    let start = Instant::now();
    let d = obj.dim_x();
    let values_of = |e: &ParticleEnsemble, out: &mut Vec<f64>| {
        out.clear();
        for i in 0..e.len() {
            let v = obj
                .expectation(e.row(i))
                .ok_or(OptimizerError::ExpectationUnavailable { optimizer: "cbo" })?;
            out.push(v);
        }
        Ok(())
    };
    let outcome = cbo_loop(params, d, stream, trace, values_of)?;
    Ok(RunReport {
        candidate: outcome.candidate,
        iterations: params.n_it,
        // Counts F-component evaluations; the closed-form baseline makes none.
        eval_count: 0,
        initial_moments: outcome.initial_moments,
        final_moments: outcome.final_moments,
        phase: outcome.phase,
        error_trace: outcome.error_trace,
        per_sample_candidates: None,
        wall_secs: start.elapsed().as_secs_f64(),
    })
}

/// CBO-FFS: `n_sY` fixed-sample CBO runs on disjoint substreams, candidates
/// averaged. Each inner run freezes one realization `ȳ_s` up front and
/// optimizes the resulting deterministic `f̂_M(·, ȳ_s)`.
pub fn run_cbo_ffs(
    params: &OptimizerParams,
    obj: &dyn StochasticObjective,
    law: &SampleLaw,
    stream: &mut RngStream,
) -> Result<RunReport, OptimizerError> {
    params.validate()?;
    let start = Instant::now();
    let d = obj.dim_x();
    let mut per_sample = Vec::with_capacity(params.n_sy);
    let mut candidate = vec![0.0; d];
    let mut last_outcome = None;
    for s in 0..params.n_sy {
        let mut sub = stream.substream(s as u64);
        let batch = draw_batch(law, params.sample_size, &mut sub);
        let values_of = |e: &ParticleEnsemble, out: &mut Vec<f64>| {
            fhat_values(obj, e.positions(), d, &batch, out)?;
            Ok(())
        };
        let outcome = cbo_loop(params, d, &mut sub, &TraceOptions::none(), values_of)?;
        for (acc, c) in candidate.iter_mut().zip(&outcome.candidate) {
            *acc += c;
        }
        per_sample.push(outcome.candidate.clone());
        last_outcome = Some(outcome);
    }
    for acc in candidate.iter_mut() {
        *acc /= params.n_sy as f64;
    }
    let last = last_outcome.expect("n_sy >= 1");
    Ok(RunReport {
        candidate,
        iterations: params.n_it,
        eval_count: (params.n_sy * params.n_it * params.n_particles * params.sample_size) as u64,
        // Moments describe the last inner ensemble.
        initial_moments: last.initial_moments,
        final_moments: last.final_moments,
        phase: None,
        error_trace: None,
        per_sample_candidates: Some(per_sample),
        wall_secs: start.elapsed().as_secs_f64(),
    })
}

struct CboOutcome {
    candidate: Vec<f64>,
    initial_moments: crate::moments::MomentState,
    final_moments: crate::moments::MomentState,
    phase: Option<PhaseTrace>,
    error_trace: Option<Vec<f64>>,
}

fn cbo_loop<F>(
    params: &OptimizerParams,
    d: usize,
    stream: &mut RngStream,
    trace: &TraceOptions,
    mut values_of: F,
) -> Result<CboOutcome, OptimizerError>
where
    F: FnMut(&ParticleEnsemble, &mut Vec<f64>) -> Result<(), OptimizerError>,
{
    let (lo, hi) = params.init_box;
    let mut ensemble = ParticleEnsemble::init_uniform(params.n_particles, d, lo, hi, stream);
    let initial_moments = empirical_moments(&ensemble);
    let mut phase = trace.record_phase.then(PhaseTrace::default);
    let mut error_trace = trace.error_reference.as_ref().map(|_| Vec::new());
    let mut values = Vec::with_capacity(params.n_particles);
    let drift = params.lambda * params.dt;
    let noise = params.sigma * params.dt.sqrt();

    for h in 0..params.n_it {
        values_of(&ensemble, &mut values)?;
        let cp = consensus_point(&ensemble, &values, params.alpha)?;
        if let Some(p) = phase.as_mut() {
            let mut ms = empirical_moments(&ensemble);
            ms.t = h as f64 * params.dt;
            p.times.push(ms.t);
            p.states.push(ms);
            p.consensus.push(cp.point.clone());
        }
        if let Some(errs) = error_trace.as_mut() {
            errs.push(inf_error(&cp.point, trace.error_reference.as_ref().unwrap()));
        }
        for i in 0..ensemble.len() {
            let row = ensemble.row_mut(i);
            match params.diffusion {
                DiffusionKind::Anisotropic => {
                    for (xr, cpr) in row.iter_mut().zip(&cp.point) {
                        let delta = cpr - *xr;
                        let z = stream.next_standard_normal();
                        *xr += drift * delta + noise * delta * z;
                    }
                }
                DiffusionKind::Isotropic => {
                    let norm = row
                        .iter()
                        .zip(&cp.point)
                        .map(|(a, b)| (b - a) * (b - a))
                        .sum::<f64>()
                        .sqrt();
                    for (xr, cpr) in row.iter_mut().zip(&cp.point) {
                        let delta = cpr - *xr;
                        let z = stream.next_standard_normal();
                        *xr += drift * delta + noise * norm * z;
                    }
                }
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(OptimizerError::NonFinitePosition {
                    iterate: h,
                    particle: i,
                });
            }
        }
    }

    values_of(&ensemble, &mut values)?;
    let candidate = consensus_point(&ensemble, &values, params.alpha)?;
    let mut final_moments = empirical_moments(&ensemble);
    final_moments.t = params.n_it as f64 * params.dt;
    if let Some(p) = phase.as_mut() {
        p.times.push(final_moments.t);
        p.states.push(final_moments.clone());
        p.consensus.push(candidate.point.clone());
    }
    if let Some(errs) = error_trace.as_mut() {
        errs.push(inf_error(
            &candidate.point,
            trace.error_reference.as_ref().unwrap(),
        ));
    }
    Ok(CboOutcome {
        candidate: candidate.point,
        initial_moments,
        final_moments,
        phase,
        error_trace,
    })
}
