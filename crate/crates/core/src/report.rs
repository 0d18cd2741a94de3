//! Run outputs shared by the kinetic optimizer and the baselines.

use crate::moments::MomentState;

/// Per-iterate time series of ensemble moments and consensus points.
///
/// Entry `h` holds the moments of the pre-move ensemble `x_h` and the
/// consensus point `x^α(h, ȳ_h)` computed from it; the last entry (`h =
/// n_it`) carries the final ensemble and the candidate consensus point.
#[derive(Clone, Debug, Default)]
pub struct PhaseTrace {
    pub times: Vec<f64>,
    pub states: Vec<MomentState>,
    pub consensus: Vec<Vec<f64>>,
}

/// What a runner should record along the way.
#[derive(Clone, Debug, Default)]
pub struct TraceOptions {
    /// Record the full (m, V, consensus) series.
    pub record_phase: bool,
    /// Record `‖x^α(h, ·) - x_ref‖_∞` per iterate against this reference.
    pub error_reference: Option<Vec<f64>>,
}

impl TraceOptions {
    pub fn none() -> Self {
        TraceOptions::default()
    }

    pub fn phase() -> Self {
        TraceOptions {
            record_phase: true,
            error_reference: None,
        }
    }

    pub fn errors_against(x_ref: &[f64]) -> Self {
        TraceOptions {
            record_phase: false,
            error_reference: Some(x_ref.to_vec()),
        }
    }
}

/// Result of one optimizer realization.
#[derive(Clone, Debug)]
pub struct RunReport {
    /// Candidate minimizer (the final consensus point).
    pub candidate: Vec<f64>,
    /// Iterates executed.
    pub iterations: usize,
    /// Logical objective-component evaluations `F(x, y)` consumed by the
    /// iteration loop (`n_it·N·M` for the kinetic method; the final candidate
    /// readout is excluded so cost ratios between methods stay exact).
    pub eval_count: u64,
    pub initial_moments: MomentState,
    pub final_moments: MomentState,
    /// Present when `TraceOptions::record_phase` was set.
    pub phase: Option<PhaseTrace>,
    /// Present when `TraceOptions::error_reference` was set: one `‖·‖_∞`
    /// error per iterate `h = 0..=n_it`.
    pub error_trace: Option<Vec<f64>>,
    /// Per-inner-run candidates (fixed-sample baseline only).
    pub per_sample_candidates: Option<Vec<Vec<f64>>>,
    /// Wall-clock seconds for the run.
    pub wall_secs: f64,
}
