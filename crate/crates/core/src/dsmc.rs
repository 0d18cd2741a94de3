//! Kinetic variable-sample optimizer (Nanbu-scheme time stepping).
//!
//! Each iterate draws a fresh sample realization ȳ_h, evaluates the estimator
//! f̂_M at every particle, computes the consensus point, and lets `N_c =
//! Iround(N·Δt/(η·ε))` uniformly chosen particles collide:
//!
//! ```text
//! x ← x + λ ε (x^α - x) Δt + σ √ε D(x) √Δt ⊙ z,   z ~ N(0, I_d)
//! ```
//!
//! Non-colliding particles stay put. The sY variant averages the estimator
//! over `n_sY` independent realizations per iterate before the consensus
//! computation; everything else is identical.
//!
//! RNG consumption order per iterate is fixed: batch draw(s), then the N_c
//! selection draws, then one normal vector per colliding particle in
//! ascending particle order. The candidate minimizer is the consensus point
//! of the final ensemble under one more fresh realization.

use std::time::Instant;

use thiserror::Error;

use crate::consensus::{
    consensus_point, ConsensusError, ConsensusPoint, DiffusionKind, ParticleEnsemble,
};
use crate::moments::empirical_moments;
use crate::objectives::{fhat_mean_values, fhat_values, ObjectiveError, StochasticObjective};
use crate::prng::RngStream;
use crate::report::{PhaseTrace, RunReport, TraceOptions};
use crate::sampling::{draw_batch, SampleBatch, SampleLaw};

/// Parameters shared by the kinetic optimizer and the baselines.
#[derive(Clone, Debug)]
pub struct OptimizerParams {
    /// Drift rate λ.
    pub lambda: f64,
    /// Diffusion strength σ.
    pub sigma: f64,
    /// Consensus sharpness α.
    pub alpha: f64,
    /// Time step Δt.
    pub dt: f64,
    /// Interaction time scale η (Δt/η ≤ 1); the experiments use η = Δt.
    pub eta: f64,
    /// Quasi-invariant scaling ε (1 unless studying the scaling limit).
    pub epsilon: f64,
    /// Ensemble size N.
    pub n_particles: usize,
    /// Sample size M per realization.
    pub sample_size: usize,
    /// Iteration budget.
    pub n_it: usize,
    pub diffusion: DiffusionKind,
    /// Realizations averaged per iterate (sY variant and fixed-sample
    /// baseline only).
    pub n_sy: usize,
    /// Uniform initialization box (lo, hi), applied per coordinate.
    pub init_box: (f64, f64),
}

impl OptimizerParams {
    /// Expected colliding count `N·Δt/(η·ε)` before rounding.
    ///
    /// The ratio `Δt/(η·ε)` is formed first so that the standard choice
    /// η = Δt, ε = 1 yields exactly `N`.
    pub fn colliding_target(&self) -> f64 {
        self.n_particles as f64 * (self.dt / (self.eta * self.epsilon))
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("lambda", self.lambda),
            ("alpha", self.alpha),
            ("dt", self.dt),
            ("eta", self.eta),
            ("epsilon", self.epsilon),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ParamError::NotPositive { name, value });
            }
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(ParamError::NegativeSigma { sigma: self.sigma });
        }
        if self.dt / self.eta > 1.0 {
            return Err(ParamError::CollisionProbability {
                ratio: self.dt / self.eta,
            });
        }
        if self.n_particles == 0 {
            return Err(ParamError::EmptyEnsemble);
        }
        if self.sample_size == 0 || self.n_sy == 0 {
            return Err(ParamError::EmptySample);
        }
        let (lo, hi) = self.init_box;
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(ParamError::InitBox { lo, hi });
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("{name} must be positive and finite, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("sigma must be nonnegative and finite, got {sigma}")]
    NegativeSigma { sigma: f64 },
    #[error("dt/eta = {ratio} violates the collision-probability constraint dt/eta <= 1")]
    CollisionProbability { ratio: f64 },
    #[error("ensemble size N must be at least 1")]
    EmptyEnsemble,
    #[error("sample size M and n_sY must be at least 1")]
    EmptySample,
    #[error("init_box requires lo <= hi, got ({lo}, {hi})")]
    InitBox { lo: f64, hi: f64 },
}

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Consensus(#[from] ConsensusError),
    #[error("particle {particle} became non-finite at iterate {iterate}")]
    NonFinitePosition { iterate: usize, particle: usize },
    #[error("optimizer `{optimizer}` requires a closed-form expectation")]
    ExpectationUnavailable { optimizer: &'static str },
}

/// Stochastic integer rounding: `⌊x⌋ + Bernoulli(frac(x))`, expectation
/// exactly `x`. Always consumes one uniform.
pub fn iround(x: f64, stream: &mut RngStream) -> u64 {
    assert!(x >= 0.0 && x.is_finite());
    let floor = x.floor();
    let frac = x - floor;
    let bump = if stream.next_uniform() < frac { 1 } else { 0 };
    floor as u64 + bump
}

/// Optimizer state between iterates.
#[derive(Clone, Debug)]
pub struct IterateState {
    pub ensemble: ParticleEnsemble,
    /// Iterate index of `ensemble`.
    pub h: usize,
    /// Colliding count N_c, fixed at initialization (clamped to `0..=N`).
    pub n_colliding: usize,
    /// Consensus point `x^α(h-1, ȳ_{h-1})` that produced this ensemble
    /// (`None` before the first step).
    pub last_consensus: Option<ConsensusPoint>,
    /// Realization drawn by the step that produced this ensemble.
    pub last_batch: Option<SampleBatch>,
}

impl IterateState {
    /// Wrap a freshly initialized ensemble; consumes one `Iround` draw.
    pub fn initial(
        ensemble: ParticleEnsemble,
        params: &OptimizerParams,
        stream: &mut RngStream,
    ) -> Self {
        let n_colliding =
            (iround(params.colliding_target(), stream) as usize).min(params.n_particles);
        IterateState {
            ensemble,
            h: 0,
            n_colliding,
            last_consensus: None,
            last_batch: None,
        }
    }
}

/// One iterate of the kinetic scheme.
pub fn step(
    state: IterateState,
    params: &OptimizerParams,
    obj: &dyn StochasticObjective,
    law: &SampleLaw,
    stream: &mut RngStream,
) -> Result<IterateState, OptimizerError> {
    advance(state, params, obj, law, stream, None)
}

fn advance(
    mut state: IterateState,
    params: &OptimizerParams,
    obj: &dyn StochasticObjective,
    law: &SampleLaw,
    stream: &mut RngStream,
    averaged: Option<usize>,
) -> Result<IterateState, OptimizerError> {
    let n = state.ensemble.len();
    let d = state.ensemble.dim();
    let mut values = Vec::with_capacity(n);
    let batch = match averaged {
        None => {
            let batch = draw_batch(law, params.sample_size, stream);
            fhat_values(obj, state.ensemble.positions(), d, &batch, &mut values)?;
            batch
        }
        Some(n_sy) => {
            let batches: Vec<SampleBatch> = (0..n_sy)
                .map(|_| draw_batch(law, params.sample_size, stream))
                .collect();
            fhat_mean_values(obj, state.ensemble.positions(), d, &batches, &mut values)?;
            batches.into_iter().last().expect("n_sy >= 1")
        }
    };
    let cp = consensus_point(&state.ensemble, &values, params.alpha)?;

    let colliding = select_colliding(n, state.n_colliding, stream);
    move_colliding(
        &mut state.ensemble,
        &colliding,
        &cp.point,
        params,
        stream,
        state.h,
    )?;

    Ok(IterateState {
        ensemble: state.ensemble,
        h: state.h + 1,
        n_colliding: state.n_colliding,
        last_consensus: Some(cp),
        last_batch: Some(batch),
    })
}

/// Uniform selection without replacement (partial Fisher–Yates), returned in
/// ascending order so the noise draws have a fixed association.
fn select_colliding(n: usize, n_colliding: usize, stream: &mut RngStream) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for j in 0..n_colliding {
        let t = j + stream.uniform_index(n - j);
        idx.swap(j, t);
    }
    idx.truncate(n_colliding);
    idx.sort_unstable();
    idx
}

fn move_colliding(
    ensemble: &mut ParticleEnsemble,
    colliding: &[usize],
    cp: &[f64],
    params: &OptimizerParams,
    stream: &mut RngStream,
    iterate: usize,
) -> Result<(), OptimizerError> {
    let drift = params.lambda * params.epsilon * params.dt;
    let noise = params.sigma * params.epsilon.sqrt() * params.dt.sqrt();
    for &l in colliding {
        let row = ensemble.row_mut(l);
        match params.diffusion {
            DiffusionKind::Anisotropic => {
                for (xr, cpr) in row.iter_mut().zip(cp) {
                    let delta = cpr - *xr;
                    let z = stream.next_standard_normal();
                    *xr += drift * delta + noise * delta * z;
                }
            }
            DiffusionKind::Isotropic => {
                let norm = row
                    .iter()
                    .zip(cp)
                    .map(|(a, b)| (b - a) * (b - a))
                    .sum::<f64>()
                    .sqrt();
                for (xr, cpr) in row.iter_mut().zip(cp) {
                    let delta = cpr - *xr;
                    let z = stream.next_standard_normal();
                    *xr += drift * delta + noise * norm * z;
                }
            }
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(OptimizerError::NonFinitePosition {
                iterate,
                particle: l,
            });
        }
    }
    Ok(())
}

/// Full LKBO-FVSe realization.
pub fn run_lkbo_fvse(
    params: &OptimizerParams,
    obj: &dyn StochasticObjective,
    law: &SampleLaw,
    stream: &mut RngStream,
) -> Result<RunReport, OptimizerError> {
    run_kinetic(params, obj, law, stream, &TraceOptions::none(), None)
}

/// LKBO-FVSe with trace recording.
pub fn run_lkbo_fvse_traced(
    params: &OptimizerParams,
    obj: &dyn StochasticObjective,
    law: &SampleLaw,
    stream: &mut RngStream,
    trace: &TraceOptions,
) -> Result<RunReport, OptimizerError> {
    run_kinetic(params, obj, law, stream, trace, None)
}

/// Full LKBO-FVSe-sY realization (`params.n_sy` realizations per iterate).
pub fn run_lkbo_fvse_sy(
    params: &OptimizerParams,
    obj: &dyn StochasticObjective,
    law: &SampleLaw,
    stream: &mut RngStream,
) -> Result<RunReport, OptimizerError> {
    run_kinetic(
        params,
        obj,
        law,
        stream,
        &TraceOptions::none(),
        Some(params.n_sy),
    )
}

/// LKBO-FVSe-sY with trace recording.
pub fn run_lkbo_fvse_sy_traced(
    params: &OptimizerParams,
    obj: &dyn StochasticObjective,
    law: &SampleLaw,
    stream: &mut RngStream,
    trace: &TraceOptions,
) -> Result<RunReport, OptimizerError> {
    run_kinetic(params, obj, law, stream, trace, Some(params.n_sy))
}

fn run_kinetic(
    params: &OptimizerParams,
    obj: &dyn StochasticObjective,
    law: &SampleLaw,
    stream: &mut RngStream,
    trace: &TraceOptions,
    averaged: Option<usize>,
) -> Result<RunReport, OptimizerError> {
    params.validate()?;
    let start = Instant::now();
    let d = obj.dim_x();
    let (lo, hi) = params.init_box;
    let ensemble = ParticleEnsemble::init_uniform(params.n_particles, d, lo, hi, stream);
    let mut state = IterateState::initial(ensemble, params, stream);

    let initial_moments = empirical_moments(&state.ensemble);
    let mut phase = trace.record_phase.then(PhaseTrace::default);
    let mut error_trace = trace.error_reference.as_ref().map(|_| Vec::new());
    let per_iter_evals = (params.n_particles * params.sample_size) as u64
        * averaged.unwrap_or(1) as u64;
    let mut eval_count = 0u64;

    for h in 0..params.n_it {
        if let Some(p) = phase.as_mut() {
            let mut ms = empirical_moments(&state.ensemble);
            ms.t = h as f64 * params.dt;
            p.times.push(ms.t);
            p.states.push(ms);
        }
        state = advance(state, params, obj, law, stream, averaged)?;
        eval_count += per_iter_evals;
        let cp = state
            .last_consensus
            .as_ref()
            .expect("step always records a consensus point");
        if let Some(p) = phase.as_mut() {
            p.consensus.push(cp.point.clone());
        }
        if let Some(errs) = error_trace.as_mut() {
            errs.push(inf_error(&cp.point, trace.error_reference.as_ref().unwrap()));
        }
    }

    // Candidate readout x^α(n_it, ȳ_{n_it}): one more fresh realization (or
    // n_sY of them) over the final ensemble; not part of the iteration cost.
    let mut values = Vec::with_capacity(params.n_particles);
    match averaged {
        None => {
            let batch = draw_batch(law, params.sample_size, stream);
            fhat_values(obj, state.ensemble.positions(), d, &batch, &mut values)?;
        }
        Some(n_sy) => {
            let batches: Vec<SampleBatch> = (0..n_sy)
                .map(|_| draw_batch(law, params.sample_size, stream))
                .collect();
            fhat_mean_values(obj, state.ensemble.positions(), d, &batches, &mut values)?;
        }
    }
    let candidate = consensus_point(&state.ensemble, &values, params.alpha)?;

    let final_moments = {
        let mut m = empirical_moments(&state.ensemble);
        m.t = params.n_it as f64 * params.dt;
        m
    };
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

    Ok(RunReport {
        candidate: candidate.point,
        iterations: params.n_it,
        eval_count,
        initial_moments,
        final_moments,
        phase,
        error_trace,
        per_sample_candidates: None,
        wall_secs: start.elapsed().as_secs_f64(),
    })
}

pub(crate) fn inf_error(candidate: &[f64], x_ref: &[f64]) -> f64 {
    let mut err = 0.0f64;
    for (c, x) in candidate.iter().zip(x_ref) {
        let e = (c - x).abs();
        if e.is_nan() {
            return f64::INFINITY;
        }
        err = err.max(e);
    }
    err
}
